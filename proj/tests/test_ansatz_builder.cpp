#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bois/ansatz_builder.hpp"
#include "bois/error.hpp"
#include "oracles.hpp"

using namespace bois;

namespace {

constexpr double kPi = std::numbers::pi;

QuantumState from_amplitudes(std::size_t n, std::vector<Complex> amps) {
  double norm = 0.0;
  for (const auto& a : amps) norm += std::norm(a);
  for (auto& a : amps) a /= std::sqrt(norm);
  return QuantumState(n, std::move(amps));
}

}  // namespace

TEST_CASE("connectivity graphs") {
  const auto line = ConnectivityGraph::line(4);
  CHECK(line.edges().size() == 3);
  CHECK(line.has_edge(1, 2));
  CHECK(line.has_edge(2, 1));
  CHECK_FALSE(line.has_edge(0, 2));
  CHECK_THROWS_AS(ConnectivityGraph(3, {{0, 0}, {1, 2}}), InvalidArgument);
  CHECK_THROWS_AS(ConnectivityGraph(3, {{0, 3}, {1, 2}}), InvalidArgument);
  CHECK_THROWS_AS(ConnectivityGraph(4, {{0, 1}, {2, 3}}), InvalidArgument);
}

TEST_CASE("layout search") {
  const auto line = ConnectivityGraph::line(3);
  const std::vector<std::pair<std::size_t, std::size_t>> star{{0, 1}, {0, 2}};
  const auto layout = find_layout(line, 3, star);
  REQUIRE(layout);
  CHECK((*layout)[0] == 1);
  for (auto [a, b] : star) CHECK(line.has_edge((*layout)[a], (*layout)[b]));
  const std::vector<std::pair<std::size_t, std::size_t>> triangle{{0, 1}, {1, 2}, {0, 2}};
  CHECK_FALSE(find_layout(line, 3, triangle));
  const auto identity = find_layout(line, 3, {});
  REQUIRE(identity);
  CHECK(*identity == std::vector<std::size_t>{0, 1, 2});
  CHECK(find_layout(ConnectivityGraph(3, {{0, 1}, {1, 2}, {0, 2}}), 3, triangle));
}

TEST_CASE("periodic distance") {
  CHECK(periodic_distance(0.0) == 0.0);
  CHECK(periodic_distance(0.1) == doctest::Approx(0.1));
  CHECK(periodic_distance(-0.1) == doctest::Approx(0.1));
  CHECK(periodic_distance(2 * kPi - 0.1) == doctest::Approx(0.1));
  CHECK(periodic_distance(4 * kPi + 0.2) == doctest::Approx(0.2));
  CHECK(periodic_distance(kPi) == doctest::Approx(kPi));
  for (double x = -10.0; x < 10.0; x += 0.173) {
    CHECK(periodic_distance(x) >= 0.0);
    CHECK(periodic_distance(x) <= kPi + 1e-12);
    CHECK(periodic_distance(x) == doctest::Approx(periodic_distance(x + 2 * kPi)));
  }
}

TEST_CASE("remove_gate renumbers parameters") {
  std::vector<Gate> gates{Gate::rotation(GateKind::RY, 0, FreeAngle{0}), Gate::rotation(GateKind::RY, 1, FreeAngle{1}),
                          Gate::cnot(0, 1), Gate::rotation(GateKind::RZ, 1, FreeAngle{2})};
  const AnsatzCircuit c(2, gates, 3);
  const std::vector<double> theta{0.4, 0.0, 1.3};
  const auto [smaller, reduced] = remove_gate(c, theta, 1);
  CHECK(smaller.parameters() == 2);
  CHECK(smaller.gates().size() == 3);
  CHECK(reduced == std::vector<double>{0.4, 1.3});
  CHECK((oracle::run(smaller, reduced) - oracle::run(c, theta)).norm() < 1e-14);
  const auto [no_cnot, same] = remove_gate(c, theta, 2);
  CHECK(no_cnot.parameters() == 3);
  CHECK(same == theta);
  CHECK_THROWS_AS(remove_gate(c, theta, 4), InvalidArgument);
}

TEST_CASE("adjacent same-axis rotations merge without changing the state") {
  std::vector<Gate> gates{Gate::rotation(GateKind::RY, 0, FreeAngle{0}), Gate::rotation(GateKind::RY, 0, FreeAngle{1}),
                          Gate::rotation(GateKind::RZ, 1, FreeAngle{2}), Gate::cnot(0, 1),
                          Gate::rotation(GateKind::RY, 1, FreeAngle{3}), Gate::rotation(GateKind::RZ, 1, FreeAngle{4}),
                          Gate::rotation(GateKind::RZ, 1, FreeAngle{5}), Gate::rotation(GateKind::RY, 0, FixedAngle{0.2}),
                          Gate::rotation(GateKind::RY, 0, FreeAngle{6})};
  const AnsatzCircuit c(2, gates, 7);
  const std::vector<double> theta{0.3, 0.4, 1.1, -0.7, 0.5, 0.9, 2.0};
  const auto [merged, values] = merge_rotations(c, theta);
  CHECK(merged.parameters() == 5);
  CHECK(merged.gates().size() == 7);
  CHECK(values[0] == doctest::Approx(0.7));
  CHECK((oracle::run(merged, values) - oracle::run(c, theta)).norm() < 1e-12);
  CHECK_THROWS_AS(merge_rotations(c, std::vector<double>{0.1}), DimensionError);

  // A shared parameter is left alone.
  const AnsatzCircuit shared(1, {Gate::rotation(GateKind::RY, 0, FreeAngle{0}), Gate::rotation(GateKind::RY, 0, FreeAngle{0})},
                             1);
  CHECK(merge_rotations(shared, std::vector<double>{0.5}).first.parameters() == 1);
}

TEST_CASE("angle search recovers a single-qubit state") {
  const AnsatzCircuit c(1, {Gate::rotation(GateKind::RY, 0, FreeAngle{0})}, 1);
  const std::vector<double> want{1.2};
  const auto target = simulate(c, want);
  Rng rng(3);
  const auto fit = optimize_angles(c, target, AngleSearch{3, 200, 0.0, {}}, rng);
  CHECK(1.0 - fit.fidelity < 1e-10);
  CHECK(fit.cost == doctest::Approx(1.0 - fit.fidelity));
  CHECK(std::abs(fidelity(simulate(c, fit.theta), target) - fit.fidelity) < 1e-12);
}

TEST_CASE("regularized search prefers angles near its anchor") {
  // Two RY gates on one qubit: only their sum matters to the fidelity.
  const AnsatzCircuit c(1, {Gate::rotation(GateKind::RY, 0, FreeAngle{0}), Gate::rotation(GateKind::RY, 0, FreeAngle{1})},
                        2);
  const auto target = simulate(c, std::vector<double>{0.8, 0.0});
  Rng rng(4);
  const auto fit = optimize_angles(c, target, AngleSearch{1, 400, 1e-3, {}}, rng, std::vector<double>{0.5, 0.3});
  CHECK(std::abs(fit.theta[0] + fit.theta[1] - 0.8) < 1e-2);
  CHECK(fit.cost == doctest::Approx(1.0 - fit.fidelity +
                                    1e-3 * (periodic_distance(fit.theta[0]) + periodic_distance(fit.theta[1]))));
  CHECK(fit.cost <= 1e-3 * 0.8 + 1e-9);
  Rng rng2(4);
  const auto anchored =
      optimize_angles(c, target, AngleSearch{1, 400, 1e-3, {0.3, 0.5}}, rng2, std::vector<double>{0.5, 0.3});
  CHECK(std::abs(anchored.theta[0] + anchored.theta[1] - 0.8) < 1e-2);
  CHECK(std::abs(anchored.theta[0] - 0.3) + std::abs(anchored.theta[1] - 0.5) < 0.05);
}

TEST_CASE("growth stops at zero blocks for a product state") {
  const AnsatzCircuit c(2, {Gate::rotation(GateKind::RY, 0, FreeAngle{0}), Gate::rotation(GateKind::RY, 1, FreeAngle{1})},
                        2);
  const auto target = simulate(c, std::vector<double>{0.7, 2.1});
  BuilderOptions o;
  o.rotations = RotationSet::RY;
  const auto g = grow(target, ConnectivityGraph::line(2), o);
  CHECK(g.converged);
  CHECK(g.blocks == 0);
  CHECK(g.circuit.entangler_count() == 0);
  CHECK(g.fidelity_history.size() == 1);
}

TEST_CASE("growth reaches entangled targets") {
  BuilderOptions o;
  o.rotations = RotationSet::RY;
  const auto bell = from_amplitudes(2, {1.0, 0.0, 0.0, 1.0});
  const auto g = grow(bell, ConnectivityGraph::line(2), o);
  CHECK(g.converged);
  CHECK(g.blocks >= 1);
  CHECK(g.infidelity < o.threshold);
  CHECK(std::abs(1.0 - fidelity(simulate(g.circuit, g.theta), bell) - g.infidelity) < 1e-12);

  // GHZ on a line needs two entangling blocks.
  const auto ghz = from_amplitudes(3, {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0});
  const auto g3 = grow(ghz, ConnectivityGraph::line(3), o);
  CHECK(g3.converged);
  CHECK(g3.blocks >= 2);
  for (std::size_t i = 1; i < g3.fidelity_history.size(); ++i)
    CHECK(g3.fidelity_history[i] >= g3.fidelity_history[i - 1] - 1e-9);
  REQUIRE(g3.layout.size() == 3);

  // A complex target with the ZYZ set.
  BuilderOptions z;
  const Complex i(0.0, 1.0);
  const auto phased = from_amplitudes(2, {1.0, 0.0, 0.0, i});
  const auto gz = grow(phased, ConnectivityGraph::line(2), z);
  CHECK(gz.converged);
  CHECK(std::abs(1.0 - fidelity(simulate(gz.circuit, gz.theta), phased) - gz.infidelity) < 1e-12);

  CHECK_THROWS_AS(grow(QuantumState(2, {1.0, 1.0, 0.0, 0.0}), ConnectivityGraph::line(2), o), InvalidArgument);
}

TEST_CASE("shrinkage removes redundant rotations on an over-parameterized circuit") {
  BuilderOptions o;
  o.rotations = RotationSet::RY;
  const auto bell = from_amplitudes(2, {1.0, 0.0, 0.0, 1.0});
  const auto g = grow(bell, ConnectivityGraph::line(2), o);
  REQUIRE(g.converged);
  auto gates = g.circuit.gates();
  std::size_t d = g.circuit.parameters();
  auto theta = g.theta;
  for (std::size_t q = 0; q < 2; ++q)
    for (int k = 0; k < 2; ++k) {
      gates.push_back(Gate::rotation(GateKind::RY, q, FreeAngle{d++}));
      theta.push_back(0.0);
    }
  const AnsatzCircuit padded(2, gates, d);
  const auto s = shrink(padded, theta, bell, o);
  CHECK(s.removed >= 1);
  CHECK(s.infidelity <= 10 * o.threshold);
  CHECK(s.circuit.parameters() == padded.parameters() - s.removed);
  CHECK(std::abs(1.0 - fidelity(simulate(s.circuit, s.theta), bell) - s.infidelity) < 1e-12);
  CHECK(s.circuit.entangler_count() == padded.entangler_count());
}

TEST_CASE("per-target optima and constant-angle fixing") {
  const AnsatzCircuit c(2, {Gate::rotation(GateKind::RY, 0, FreeAngle{0}), Gate::rotation(GateKind::RY, 1, FreeAngle{1}),
                            Gate::cnot(0, 1)},
                        2);
  std::vector<QuantumState> targets;
  for (double a : {0.4, 0.9, 1.4}) targets.push_back(simulate(c, std::vector<double>{a, 1.0}));
  BuilderOptions o;
  o.rotations = RotationSet::RY;
  const auto optima = optima_per_target(c, std::vector<double>{0.9, 1.0}, targets, o);
  REQUIRE(optima.size() == 3);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(1.0 - fidelity(simulate(c, optima[k]), targets[k]) < 1e-8);

  const auto fixed = fix_constant_angles(c, optima, 0.02);
  CHECK(fixed.kept == std::vector<std::size_t>{0});
  CHECK(fixed.circuit.parameters() == 1);
  const auto& slot = fixed.circuit.gates()[1].angles[0];
  REQUIRE(std::holds_alternative<FixedAngle>(slot));
  CHECK(std::abs(std::get<FixedAngle>(slot).value - 1.0) < 0.01);

  const auto manual = fix_constant_angles(c, {{1.0, 2.0}, {1.01, 3.0}}, 0.02);
  CHECK(manual.kept == std::vector<std::size_t>{1});
  CHECK(std::get<FixedAngle>(manual.circuit.gates()[0].angles[0]).value == doctest::Approx(1.005));
  CHECK(std::get<FreeAngle>(manual.circuit.gates()[1].angles[0]).index == 0);
  CHECK_THROWS_AS(fix_constant_angles(c, {{1.0}}, 0.02), DimensionError);
}
