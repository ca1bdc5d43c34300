#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bois/bo.hpp"
#include "bois/circuit.hpp"
#include "bois/pauli.hpp"

namespace bois {

enum class Strategy { Independent, IndependentPlusRandom, NearestNeighbour, AllToAll };

std::string_view strategy_name(Strategy s);
/// Accepts the names produced by strategy_name.
Strategy parse_strategy(std::string_view name);

/// Which optimizers receive each cross-evaluation.
struct SharingTopology {
  Strategy variant = Strategy::NearestNeighbour;
  /// Private random evaluations per optimizer and iteration
  /// (IndependentPlusRandom only).
  std::size_t extra = 0;

  /// Grid points (other than `point`) that receive evaluations made for
  /// `point`, ascending. 1D: point +- 1; 2D: the 4-neighbourhood.
  std::vector<std::size_t> neighbours(const PhysicalGrid& grid, std::size_t point) const;
  bool shares_initial_points() const {
    return variant == Strategy::NearestNeighbour || variant == Strategy::AllToAll;
  }
};

struct RunConfig {
  std::shared_ptr<const ParameterizedHamiltonian> hamiltonian;
  AnsatzCircuit ansatz;
  SharingTopology topology;
  std::size_t initial_points = 10;
  std::size_t iterations = 30;
  double kappa0 = 2.0;
  /// nullopt selects exact expectations.
  std::optional<std::size_t> shots_opt = 1024;
  std::optional<std::size_t> shots_final = 8192;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  /// Standardized GP noise; nullopt fits it.
  std::optional<double> fixed_noise{};
  std::size_t candidates = 2048;
  std::size_t refine_starts = 5;
  std::size_t refine_evaluations = 200;
  double refine_step = 0.1;
};

enum class RecordKind { Initial, Proposal, Extra, Final };
std::string_view record_kind_name(RecordKind kind);

/// One circuit-set evaluation: the full Pauli list measured at theta.
struct EvaluationRecord {
  std::vector<double> theta;
  ExpectationSet expectations;
  std::size_t origin = 0;  ///< requesting optimizer
  std::size_t iteration = 0;
  RecordKind kind = RecordKind::Proposal;
  bool shared = false;  ///< initial point shared by every optimizer
};

struct PointResult {
  std::vector<double> coordinates;
  double energy = 0.0;         ///< E* from the final re-evaluation
  double best_observed = 0.0;  ///< cost at theta* as seen during optimization
  std::vector<double> theta;
  /// Best-so-far cost after initialization and after each iteration.
  std::vector<double> trace;
  std::size_t evaluations_seen = 0;
  KernelParams hyperparameters;  ///< raw target units
  std::size_t refits = 0;
};

struct RunResult {
  std::vector<PointResult> points;
  std::size_t initial_evaluations = 0;
  std::size_t total_evaluations = 0;  ///< theta evaluations incl. initialization
  std::size_t final_evaluations = 0;  ///< high-shot re-evaluations, not in total
  std::vector<EvaluationRecord> ledger;
};

/// Array of Bayesian optimizers over a physical grid, run in lockstep.
class BoisRun {
 public:
  /// Draws and evaluates the initial points and fits every optimizer.
  /// Throws ConfigError for an inconsistent configuration.
  static BoisRun initialize(const RunConfig& config);

  /// One synchronous round: propose, measure, cross-evaluate, ingest.
  void iterate();
  bool done() const { return t_ >= config_.iterations; }
  std::size_t iteration() const { return t_; }

  /// Re-measures each optimizer's best point with shots_final.
  RunResult finalize();

  const RunConfig& config() const { return config_; }
  const std::vector<OptimizerState>& optimizers() const { return optimizers_; }
  const std::vector<EvaluationRecord>& ledger() const { return ledger_; }
  std::size_t total_evaluations() const;

 private:
  explicit BoisRun(const RunConfig& config);

  ExpectationSet evaluate(std::span<const double> theta, std::optional<std::size_t> shots, Rng& rng) const;
  void record_traces();

  RunConfig config_;
  std::vector<OptimizerState> optimizers_;
  std::vector<Rng> measurement_rngs_;
  std::vector<EvaluationRecord> ledger_;
  std::vector<std::vector<double>> traces_;
  std::vector<std::size_t> seen_;
  std::size_t initial_evaluations_ = 0;
  std::size_t t_ = 0;
};

/// initialize + N x iterate + finalize.
RunResult run_bois(const RunConfig& config);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q10 = 0.0, q25 = 0.0, q75 = 0.0, q90 = 0.0;
  double min = 0.0, max = 0.0;
};

/// Linear-interpolation quantiles; all zero for an empty sample.
Summary summarize(std::vector<double> values);

struct StrategyComparison {
  SharingTopology topology;
  /// errors[repetition][point] = E*(point) - E_exact(point)
  std::vector<std::vector<double>> errors;
  std::vector<Summary> per_point;
  Summary aggregate;
};

struct ComparisonResult {
  std::vector<double> exact_energies;
  std::vector<StrategyComparison> strategies;
};

/// Runs every strategy `repetitions` times. Repetition r uses the same
/// derived seed for every strategy.
ComparisonResult compare_strategies(const RunConfig& base, const std::vector<SharingTopology>& strategies,
                                    std::size_t repetitions);

/// E_exact for every grid point.
std::vector<double> exact_ground_energies(const ParameterizedHamiltonian& h);

}  // namespace bois
