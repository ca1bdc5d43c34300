#include <doctest.h>

#include <algorithm>
#include <memory>
#include <random>

#include "bois/error.hpp"
#include "bois/exact.hpp"
#include "bois/orchestrator.hpp"
#include "oracles.hpp"

using namespace bois;

namespace {

// RY layers separated by CNOT ladders.
AnsatzCircuit ladder(std::size_t n, std::size_t layers) {
  std::vector<Gate> gates;
  std::size_t p = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t q = 0; q < n; ++q) gates.push_back(Gate::rotation(GateKind::RY, q, FreeAngle{p++}));
    if (l + 1 < layers)
      for (std::size_t q = 0; q + 1 < n; ++q) gates.push_back(Gate::cnot(q, q + 1));
  }
  return AnsatzCircuit(n, std::move(gates), p);
}

RunConfig small_config(std::shared_ptr<const ParameterizedHamiltonian> h, Strategy s, std::size_t extra = 0) {
  RunConfig c{.hamiltonian = h, .ansatz = ladder(h->qubits(), 2), .topology = {s, extra}};
  c.initial_points = 4;
  c.iterations = 3;
  c.shots_opt = std::nullopt;
  c.shots_final = std::nullopt;
  c.fixed_noise = 1e-8;
  c.seed = 11;
  c.candidates = 64;
  c.refine_starts = 2;
  c.refine_evaluations = 30;
  return c;
}

std::shared_ptr<const ParameterizedHamiltonian> chain(std::size_t n, std::size_t points) {
  return std::make_shared<const ParameterizedHamiltonian>(build_spin_chain(n, PhysicalGrid::linspace(0.0, 0.9, points)));
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (auto s : {Strategy::Independent, Strategy::IndependentPlusRandom, Strategy::NearestNeighbour, Strategy::AllToAll})
    CHECK(parse_strategy(strategy_name(s)) == s);
  CHECK_THROWS_AS(parse_strategy("ring"), ConfigError);
}

TEST_CASE("neighbourhoods") {
  const auto line = PhysicalGrid::linspace(0.0, 1.0, 5);
  const SharingTopology nn{Strategy::NearestNeighbour, 0};
  CHECK(nn.neighbours(line, 0) == std::vector<std::size_t>{1});
  CHECK(nn.neighbours(line, 2) == std::vector<std::size_t>{1, 3});
  CHECK(nn.neighbours(line, 4) == std::vector<std::size_t>{3});
  const PhysicalGrid square({{0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}});
  CHECK(nn.neighbours(square, 4) == std::vector<std::size_t>{1, 3, 5, 7});
  CHECK(nn.neighbours(square, 0) == std::vector<std::size_t>{1, 3});
  CHECK(nn.neighbours(square, 8) == std::vector<std::size_t>{5, 7});
  const SharingTopology all{Strategy::AllToAll, 0};
  CHECK(all.neighbours(line, 1) == std::vector<std::size_t>{0, 2, 3, 4});
  CHECK(SharingTopology{Strategy::Independent, 0}.neighbours(line, 1).empty());
  CHECK(SharingTopology{Strategy::IndependentPlusRandom, 2}.neighbours(line, 1).empty());
  CHECK(nn.shares_initial_points());
  CHECK(all.shares_initial_points());
  CHECK_FALSE(SharingTopology{Strategy::Independent, 0}.shares_initial_points());
}

TEST_CASE("ledger count on an 8x8 grid") {
  std::vector<double> axis;
  for (int i = 0; i < 8; ++i) axis.push_back(0.1 * i);
  auto h = std::make_shared<const ParameterizedHamiltonian>(
      build_spin_chain(2, PhysicalGrid({axis, axis}, {"h_x", "h_z"}), FieldMode::Separate));
  auto c = small_config(h, Strategy::NearestNeighbour);
  c.ansatz = ladder(2, 1);
  c.initial_points = 10;
  c.iterations = 10;
  c.candidates = 32;
  c.refine_starts = 1;
  c.refine_evaluations = 10;
  const auto r = run_bois(c);
  CHECK(r.total_evaluations == 650);
  CHECK(r.initial_evaluations == 10);
  CHECK(r.final_evaluations == 64);
  CHECK(r.ledger.size() == 650 + 64);
}

TEST_CASE("ledger conservation and ingest counts per strategy") {
  const auto h = chain(3, 5);
  const std::size_t G = 5, M = 4, N = 3;
  for (auto [s, extra] : {std::pair{Strategy::Independent, 0}, std::pair{Strategy::IndependentPlusRandom, 2},
                          std::pair{Strategy::NearestNeighbour, 0}, std::pair{Strategy::AllToAll, 0}}) {
    auto c = small_config(h, s, static_cast<std::size_t>(extra));
    auto run = BoisRun::initialize(c);
    const std::size_t init = SharingTopology{s, 0}.shares_initial_points() ? M : M * G;
    CHECK(run.total_evaluations() == init);
    while (!run.done()) {
      const auto before = run.total_evaluations();
      run.iterate();
      CHECK(run.total_evaluations() - before == G * (1 + static_cast<std::size_t>(extra)));
    }
    CHECK_THROWS_AS(run.iterate(), StateError);
    const auto r = run.finalize();
    CHECK(r.total_evaluations == init + N * G + N * static_cast<std::size_t>(extra) * G);
    for (std::size_t a = 0; a < G; ++a) {
      std::size_t per_iteration = 1 + static_cast<std::size_t>(extra);
      if (s == Strategy::AllToAll) per_iteration = G;
      if (s == Strategy::NearestNeighbour) per_iteration = 1 + ((a == 0 || a == G - 1) ? 1 : 2);
      CHECK(r.points[a].evaluations_seen == M + N * per_iteration);
      CHECK(run.optimizers()[a].data().size() == M + N * per_iteration);
    }
  }
}

TEST_CASE("every ingested cost matches the dense expectation") {
  const auto h = chain(3, 4);
  for (auto s : {Strategy::NearestNeighbour, Strategy::AllToAll, Strategy::IndependentPlusRandom}) {
    auto c = small_config(h, s, s == Strategy::IndependentPlusRandom ? 1 : 0);
    auto run = BoisRun::initialize(c);
    while (!run.done()) run.iterate();
    for (std::size_t b = 0; b < h->grid().size(); ++b) {
      const auto dense = oracle::hamiltonian(*h, b);
      for (const auto& obs : run.optimizers()[b].data()) {
        const auto psi = oracle::run(c.ansatz, obs.theta);
        CHECK(std::abs(obs.cost - oracle::expectation(dense, psi)) < 1e-10);
      }
    }
  }
}

TEST_CASE("cross-evaluation of shared expectations on random triples") {
  const auto h = chain(4, 6);
  const auto ansatz = ladder(4, 3);
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
  std::uniform_int_distribution<std::size_t> point(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> theta(ansatz.parameters());
    for (auto& v : theta) v = angle(rng);
    const std::size_t alpha = point(rng), beta = point(rng);
    const auto e = measure(*h, simulate(ansatz, theta), std::nullopt, nullptr);
    const auto psi = oracle::run(ansatz, theta);
    CHECK(std::abs(energy_from_expectations(*h, beta, e.values) -
                   oracle::expectation(oracle::hamiltonian(*h, beta), psi)) < 1e-10);
    CHECK(std::abs(energy_from_expectations(*h, alpha, e.values) -
                   oracle::expectation(oracle::hamiltonian(*h, alpha), psi)) < 1e-10);
  }
}

TEST_CASE("initial designs are shared only by sharing strategies") {
  const auto h = chain(3, 3);
  for (auto s : {Strategy::Independent, Strategy::NearestNeighbour}) {
    auto run = BoisRun::initialize(small_config(h, s));
    const auto& a = run.optimizers()[0].data();
    const auto& b = run.optimizers()[2].data();
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == 4);
    CHECK((a[0].theta == b[0].theta) == (s == Strategy::NearestNeighbour));
    for (const auto& r : run.ledger()) CHECK(r.shared == (s == Strategy::NearestNeighbour));
  }
}

TEST_CASE("results do not depend on the worker count") {
  const auto h = chain(3, 6);
  for (auto s : {Strategy::IndependentPlusRandom, Strategy::NearestNeighbour}) {
    auto c = small_config(h, s, s == Strategy::IndependentPlusRandom ? 2 : 0);
    c.shots_opt = 256;
    c.shots_final = 1024;
    c.fixed_noise = std::nullopt;
    const auto one = run_bois(c);
    c.workers = 4;
    const auto four = run_bois(c);
    REQUIRE(one.ledger.size() == four.ledger.size());
    for (std::size_t i = 0; i < one.ledger.size(); ++i) {
      CHECK(one.ledger[i].theta == four.ledger[i].theta);
      CHECK(one.ledger[i].expectations.values == four.ledger[i].expectations.values);
      CHECK(one.ledger[i].origin == four.ledger[i].origin);
    }
    for (std::size_t a = 0; a < one.points.size(); ++a) {
      CHECK(one.points[a].energy == four.points[a].energy);
      CHECK(one.points[a].trace == four.points[a].trace);
    }
  }
}

TEST_CASE("exact mode: variational bound, monotone traces, finalize reports the best cost") {
  const auto h = chain(3, 5);
  const auto exact = exact_ground_energies(*h);
  const auto r = run_bois(small_config(h, Strategy::AllToAll));
  for (std::size_t a = 0; a < r.points.size(); ++a) {
    const auto& p = r.points[a];
    CHECK(p.energy == p.best_observed);
    CHECK(p.energy >= exact[a] - 1e-10);
    REQUIRE(p.trace.size() == 4);
    for (std::size_t t = 1; t < p.trace.size(); ++t) CHECK(p.trace[t] <= p.trace[t - 1]);
    CHECK(p.trace.back() == p.best_observed);
  }
  for (const auto& rec : r.ledger)
    for (std::size_t a = 0; a < r.points.size(); ++a)
      CHECK(energy_from_expectations(*h, a, rec.expectations.values) >= exact[a] - 1e-10);
}

TEST_CASE("one grid point with Independent is plain single-task BO") {
  auto h = chain(3, 1);
  auto c = small_config(h, Strategy::Independent);
  c.iterations = 4;
  const auto r = run_bois(c);

  BoOptions o;
  o.iterations = c.iterations;
  o.kappa0 = c.kappa0;
  o.fit.fixed_noise = c.fixed_noise;
  o.candidates = c.candidates;
  o.refine_starts = c.refine_starts;
  o.refine_evaluations = c.refine_evaluations;
  o.refine_step = c.refine_step;
  const auto box = BoundsBox::angles(c.ansatz.parameters());
  OptimizerState opt(box, o, derive_stream(c.seed, StreamTag::Optimizer, 0));
  auto cost = [&](const std::vector<double>& theta) { return exact_energy(*h, 0, simulate(c.ansatz, theta)); };
  std::vector<Observation> init;
  for (auto& theta : lhs_sample(c.initial_points, box, opt.rng())) init.push_back({theta, cost(theta)});
  opt.ingest(init);
  std::vector<double> trace{opt.best_point().cost};
  for (std::size_t t = 0; t < c.iterations; ++t) {
    const auto x = opt.propose_next();
    opt.ingest(std::vector<Observation>{{x, cost(x)}});
    opt.advance();
    trace.push_back(opt.best_point().cost);
  }
  CHECK(r.points[0].trace == trace);
  CHECK(r.points[0].theta == opt.best_point().theta);
}

TEST_CASE("configuration errors") {
  const auto h = chain(3, 3);
  auto c = small_config(h, Strategy::NearestNeighbour, 1);
  CHECK_THROWS_AS(BoisRun::initialize(c), ConfigError);
  c = small_config(h, Strategy::NearestNeighbour);
  c.ansatz = ladder(2, 2);
  CHECK_THROWS_AS(BoisRun::initialize(c), ConfigError);
  c = small_config(h, Strategy::NearestNeighbour);
  c.shots_opt = 0;
  CHECK_THROWS_AS(BoisRun::initialize(c), ConfigError);
  c = small_config(h, Strategy::NearestNeighbour);
  c.hamiltonian = nullptr;
  CHECK_THROWS_AS(BoisRun::initialize(c), ConfigError);
  auto run = BoisRun::initialize(small_config(h, Strategy::Independent));
  CHECK_THROWS_AS(run.finalize(), StateError);
}

TEST_CASE("summaries and empty comparisons") {
  const auto s = summarize({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(s.count == 5);
  CHECK(s.mean == 3.0);
  CHECK(s.median == 3.0);
  CHECK(s.q25 == 2.0);
  CHECK(s.q10 == doctest::Approx(1.4));
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(summarize({}).count == 0);
  const auto h = chain(3, 3);
  const auto cmp = compare_strategies(small_config(h, Strategy::Independent), {SharingTopology{}}, 0);
  REQUIRE(cmp.strategies.size() == 1);
  CHECK(cmp.strategies[0].errors.empty());
  CHECK(cmp.strategies[0].aggregate.count == 0);
  CHECK(cmp.exact_energies.size() == 3);
}
