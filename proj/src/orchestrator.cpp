#include "bois/orchestrator.hpp"

#include <algorithm>
#include <cmath>

#include "bois/error.hpp"
#include "bois/exact.hpp"
#include "bois/parallel.hpp"

namespace bois {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Independent: return "independent";
    case Strategy::IndependentPlusRandom: return "independent_plus_random";
    case Strategy::NearestNeighbour: return "nearest_neighbour";
    case Strategy::AllToAll: return "all_to_all";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Independent, Strategy::IndependentPlusRandom, Strategy::NearestNeighbour, Strategy::AllToAll})
    if (strategy_name(s) == name) return s;
  throw ConfigError("unknown sharing strategy '" + std::string(name) + "'");
}

std::string_view record_kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::Initial: return "initial";
    case RecordKind::Proposal: return "proposal";
    case RecordKind::Extra: return "extra";
    case RecordKind::Final: return "final";
  }
  return "?";
}

std::vector<std::size_t> SharingTopology::neighbours(const PhysicalGrid& grid, std::size_t point) const {
  std::vector<std::size_t> out;
  switch (variant) {
    case Strategy::Independent:
    case Strategy::IndependentPlusRandom: break;
    case Strategy::AllToAll:
      for (std::size_t b = 0; b < grid.size(); ++b)
        if (b != point) out.push_back(b);
      break;
    case Strategy::NearestNeighbour: {
      const auto coords = grid.unravel(point);
      for (std::size_t k = 0; k < grid.dims(); ++k) {
        for (int step : {-1, +1}) {
          auto c = coords;
          if (step < 0 && c[k] == 0) continue;
          if (step > 0 && c[k] + 1 >= grid.axes()[k].size()) continue;
          c[k] = step < 0 ? c[k] - 1 : c[k] + 1;
          out.push_back(grid.ravel(c));
        }
      }
      std::sort(out.begin(), out.end());
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

BoisRun::BoisRun(const RunConfig& config) : config_(config) {}

ExpectationSet BoisRun::evaluate(std::span<const double> theta, std::optional<std::size_t> shots, Rng& rng) const {
  const auto state = simulate(config_.ansatz, theta);
  return measure(*config_.hamiltonian, state, shots, shots ? &rng : nullptr);
}

std::size_t BoisRun::total_evaluations() const {
  return static_cast<std::size_t>(std::count_if(ledger_.begin(), ledger_.end(),
                                                [](const EvaluationRecord& r) { return r.kind != RecordKind::Final; }));
}

void BoisRun::record_traces() {
  for (std::size_t a = 0; a < optimizers_.size(); ++a) traces_[a].push_back(optimizers_[a].best_point().cost);
}

BoisRun BoisRun::initialize(const RunConfig& config) {
  if (!config.hamiltonian) throw ConfigError("run needs a Hamiltonian");
  const auto& h = *config.hamiltonian;
  if (config.ansatz.qubits() != h.qubits())
    throw ConfigError("ansatz acts on " + std::to_string(config.ansatz.qubits()) + " qubits but the Hamiltonian on " +
                      std::to_string(h.qubits()));
  if (config.ansatz.parameters() == 0) throw ConfigError("ansatz has no free parameters");
  if (config.initial_points < 1) throw ConfigError("need at least one initial point");
  if (config.iterations < 1) throw ConfigError("need at least one iteration");
  if ((config.shots_opt && *config.shots_opt == 0) || (config.shots_final && *config.shots_final == 0))
    throw ConfigError("shot counts must be positive");
  if (config.topology.variant != Strategy::IndependentPlusRandom && config.topology.extra != 0)
    throw ConfigError("extra evaluations only apply to independent_plus_random");

  BoisRun run(config);
  const std::size_t points = h.grid().size();
  const auto bounds = BoundsBox::angles(config.ansatz.parameters());
  BoOptions options;
  options.iterations = config.iterations;
  options.kappa0 = config.kappa0;
  options.fit.fixed_noise = config.fixed_noise;
  options.candidates = config.candidates;
  options.refine_starts = config.refine_starts;
  options.refine_evaluations = config.refine_evaluations;
  options.refine_step = config.refine_step;

  for (std::size_t a = 0; a < points; ++a) {
    run.optimizers_.emplace_back(bounds, options, derive_stream(config.seed, StreamTag::Optimizer, a));
    run.measurement_rngs_.push_back(derive_stream(config.seed, StreamTag::Measurement, a));
  }
  run.traces_.assign(points, {});
  run.seen_.assign(points, 0);

  if (config.topology.shares_initial_points()) {
    Rng init = derive_stream(config.seed, StreamTag::SharedInit);
    const auto design = lhs_sample(config.initial_points, bounds, init);
    for (const auto& theta : design) {
      run.ledger_.push_back({theta, run.evaluate(theta, config.shots_opt, init), 0, 0, RecordKind::Initial, true});
    }
    parallel_for(points, config.workers, [&](std::size_t a) {
      std::vector<Observation> obs;
      for (const auto& r : run.ledger_)
        obs.push_back({r.theta, energy_from_expectations(h, a, r.expectations.values)});
      run.optimizers_[a].ingest(obs);
      run.seen_[a] += obs.size();
    });
  } else {
    std::vector<std::vector<EvaluationRecord>> local(points);
    parallel_for(points, config.workers, [&](std::size_t a) {
      auto& opt = run.optimizers_[a];
      const auto design = lhs_sample(config.initial_points, bounds, opt.rng());
      std::vector<Observation> obs;
      for (const auto& theta : design) {
        auto e = run.evaluate(theta, config.shots_opt, run.measurement_rngs_[a]);
        obs.push_back({theta, energy_from_expectations(h, a, e.values)});
        local[a].push_back({theta, std::move(e), a, 0, RecordKind::Initial, false});
      }
      opt.ingest(obs);
      run.seen_[a] += obs.size();
    });
    for (auto& records : local)
      for (auto& r : records) run.ledger_.push_back(std::move(r));
  }
  run.initial_evaluations_ = run.ledger_.size();
  run.record_traces();
  return run;
}

void BoisRun::iterate() {
  if (done()) throw StateError("run already completed all iterations");
  const auto& h = *config_.hamiltonian;
  const std::size_t points = optimizers_.size();
  const std::size_t t = t_ + 1;

  // Proposals all see the models from the end of the previous round.
  std::vector<EvaluationRecord> proposals(points);
  std::vector<std::vector<EvaluationRecord>> extras(points);
  parallel_for(points, config_.workers, [&](std::size_t a) {
    auto& opt = optimizers_[a];
    auto theta = opt.propose_next();
    auto e = evaluate(theta, config_.shots_opt, measurement_rngs_[a]);
    proposals[a] = {std::move(theta), std::move(e), a, t, RecordKind::Proposal, false};
    if (config_.topology.variant == Strategy::IndependentPlusRandom) {
      for (std::size_t k = 0; k < config_.topology.extra; ++k) {
        auto x = opt.bounds().uniform(opt.rng());
        auto ex = evaluate(x, config_.shots_opt, measurement_rngs_[a]);
        extras[a].push_back({std::move(x), std::move(ex), a, t, RecordKind::Extra, false});
      }
    }
  });

  // Cross-evaluations: each optimizer converts the shared expectations
  // through its own coefficients.
  std::vector<std::vector<std::size_t>> incoming(points);
  for (std::size_t a = 0; a < points; ++a)
    for (auto b : config_.topology.neighbours(h.grid(), a)) incoming[b].push_back(a);

  parallel_for(points, config_.workers, [&](std::size_t b) {
    std::vector<Observation> obs;
    obs.push_back({proposals[b].theta, energy_from_expectations(h, b, proposals[b].expectations.values)});
    for (auto a : incoming[b])
      obs.push_back({proposals[a].theta, energy_from_expectations(h, b, proposals[a].expectations.values)});
    for (const auto& r : extras[b]) obs.push_back({r.theta, energy_from_expectations(h, b, r.expectations.values)});
    optimizers_[b].ingest(obs);
    optimizers_[b].advance();
    seen_[b] += obs.size();
  });

  for (std::size_t a = 0; a < points; ++a) {
    ledger_.push_back(std::move(proposals[a]));
    for (auto& r : extras[a]) ledger_.push_back(std::move(r));
  }
  t_ = t;
  record_traces();
}

RunResult BoisRun::finalize() {
  if (!done()) throw StateError("finalize needs all iterations to have run");
  const auto& h = *config_.hamiltonian;
  const std::size_t points = optimizers_.size();
  RunResult result;
  result.points.resize(points);
  std::vector<EvaluationRecord> finals(points);
  parallel_for(points, config_.workers, [&](std::size_t a) {
    const auto& opt = optimizers_[a];
    const auto& best = opt.best_point();
    Rng rng = derive_stream(config_.seed, StreamTag::FinalMeasurement, a);
    auto e = evaluate(best.theta, config_.shots_final, rng);
    auto& p = result.points[a];
    p.coordinates = h.grid().point(a);
    p.energy = energy_from_expectations(h, a, e.values);
    p.best_observed = best.cost;
    p.theta = best.theta;
    p.trace = traces_[a];
    p.evaluations_seen = seen_[a];
    p.hyperparameters = opt.model().output_params();
    p.refits = opt.refits();
    finals[a] = {best.theta, std::move(e), a, t_, RecordKind::Final, false};
  });
  result.initial_evaluations = initial_evaluations_;
  result.total_evaluations = total_evaluations();
  result.final_evaluations = points;
  result.ledger = ledger_;
  for (auto& r : finals) result.ledger.push_back(std::move(r));
  return result;
}

RunResult run_bois(const RunConfig& config) {
  auto run = BoisRun::initialize(config);
  while (!run.done()) run.iterate();
  return run.finalize();
}

// ---------------------------------------------------------------------------

Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.median = quantile(0.5);
  s.q10 = quantile(0.10);
  s.q25 = quantile(0.25);
  s.q75 = quantile(0.75);
  s.q90 = quantile(0.90);
  s.min = values.front();
  s.max = values.back();
  return s;
}

std::vector<double> exact_ground_energies(const ParameterizedHamiltonian& h) {
  std::vector<double> out(h.grid().size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = ground_state(dense_matrix(h, a)).energy;
  return out;
}

ComparisonResult compare_strategies(const RunConfig& base, const std::vector<SharingTopology>& strategies,
                                    std::size_t repetitions) {
  if (!base.hamiltonian) throw ConfigError("comparison needs a Hamiltonian");
  ComparisonResult out;
  out.exact_energies = exact_ground_energies(*base.hamiltonian);
  const std::size_t points = out.exact_energies.size();
  for (const auto& topology : strategies) {
    StrategyComparison sc;
    sc.topology = topology;
    for (std::size_t r = 0; r < repetitions; ++r) {
      RunConfig cfg = base;
      cfg.topology = topology;
      cfg.seed = derive_seed(base.seed, StreamTag::Repetition, r);
      const auto result = run_bois(cfg);
      std::vector<double> errors(points);
      for (std::size_t a = 0; a < points; ++a) errors[a] = result.points[a].energy - out.exact_energies[a];
      sc.errors.push_back(std::move(errors));
    }
    std::vector<double> all;
    for (std::size_t a = 0; a < points; ++a) {
      std::vector<double> column;
      for (const auto& rep : sc.errors) column.push_back(rep[a]);
      all.insert(all.end(), column.begin(), column.end());
      sc.per_point.push_back(summarize(std::move(column)));
    }
    sc.aggregate = summarize(std::move(all));
    out.strategies.push_back(std::move(sc));
  }
  return out;
}

}  // namespace bois
