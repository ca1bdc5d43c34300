#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bois/gp.hpp"
#include "bois/random.hpp"

namespace bois {

/// Axis-aligned search box over circuit angles.
class BoundsBox {
 public:
  BoundsBox(std::vector<double> lo, std::vector<double> hi);
  /// [0, 2pi]^d
  static BoundsBox angles(std::size_t d);

  std::size_t dims() const { return lo_.size(); }
  double lo(std::size_t k) const { return lo_[k]; }
  double hi(std::size_t k) const { return hi_[k]; }
  bool contains(std::span<const double> theta) const;
  std::vector<double> clamp(std::span<const double> theta) const;
  std::vector<double> uniform(Rng& rng) const;

 private:
  std::vector<double> lo_, hi_;
};

/// Latin hypercube design: in every dimension each of the `count` equal
/// strata holds exactly one point.
std::vector<std::vector<double>> lhs_sample(std::size_t count, const BoundsBox& bounds, Rng& rng);

/// kappa0 (N - t) / N for t in [1, N].
double kappa(std::size_t t, std::size_t iterations, double kappa0);

/// mu(theta) - kappa sigma(theta)
double acquisition_lcb(const SurrogateModel& model, std::span<const double> theta, double kappa);

struct Observation {
  std::vector<double> theta;
  double cost = 0.0;
};

struct BoOptions {
  std::size_t iterations = 30;
  double kappa0 = 2.0;
  FitOptions fit;
  std::size_t candidates = 2048;
  std::size_t refine_starts = 5;
  std::size_t refine_evaluations = 200;
  /// Initial simplex edge as a fraction of the widest box side.
  double refine_step = 0.1;
  /// Full hyperparameter refits on every ingest up to this many points,
  /// then on every `refit_every`-th ingest; in between the model is
  /// re-conditioned with the previous hyperparameters.
  std::size_t refit_limit = 100;
  std::size_t refit_every = 5;
};

/// One Bayesian optimizer owning its data, surrogate and random stream.
class OptimizerState {
 public:
  OptimizerState(BoundsBox bounds, BoOptions options, Rng rng);

  const BoundsBox& bounds() const { return bounds_; }
  const BoOptions& options() const { return options_; }
  const std::vector<Observation>& data() const { return data_; }
  bool has_model() const { return model_.has_value(); }
  const SurrogateModel& model() const;
  std::size_t iteration() const { return t_; }
  std::size_t refits() const { return refits_; }
  Rng& rng() { return rng_; }

  /// Appends the records and updates the surrogate per the refit schedule.
  /// Throws InvalidArgument for a non-finite cost or a theta outside the box;
  /// nothing is appended in that case.
  void ingest(std::span<const Observation> records);

  /// Approximate minimizer of the LCB at iteration t+1: best of the random
  /// candidates, each of the top few polished by Nelder-Mead.
  std::vector<double> propose_next();

  /// t -> t + 1
  void advance();

  /// Stored pair with the smallest cost; earliest wins ties.
  const Observation& best_point() const;

 private:
  void update_model(bool full_fit);

  BoundsBox bounds_;
  BoOptions options_;
  Rng rng_;
  std::vector<Observation> data_;
  std::optional<SurrogateModel> model_;
  std::size_t t_ = 0;
  std::size_t ingests_ = 0;
  std::size_t refits_ = 0;
};

}  // namespace bois
