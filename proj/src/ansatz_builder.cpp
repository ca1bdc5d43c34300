#include "bois/ansatz_builder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

#include <Eigen/Dense>

#include "bois/error.hpp"
#include "bois/parallel.hpp"

namespace bois {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kFdStep = 1e-5;

}  // namespace

ConnectivityGraph::ConnectivityGraph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges)
    : n_(n), edges_(std::move(edges)), adjacent_(n, std::vector<bool>(n, false)) {
  if (n_ < 1) throw InvalidArgument("connectivity graph needs at least one qubit");
  for (auto [a, b] : edges_) {
    if (a >= n_ || b >= n_ || a == b)
      throw InvalidArgument("invalid edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    adjacent_[a][b] = adjacent_[b][a] = true;
  }
  std::vector<bool> seen(n_, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (std::size_t w = 0; w < n_; ++w)
      if (adjacent_[v][w] && !seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw InvalidArgument("connectivity graph is not connected");
}

ConnectivityGraph ConnectivityGraph::line(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return ConnectivityGraph(n, std::move(edges));
}

bool ConnectivityGraph::has_edge(std::size_t a, std::size_t b) const {
  return a < n_ && b < n_ && adjacent_[a][b];
}

std::optional<std::vector<std::size_t>> find_layout(const ConnectivityGraph& graph, std::size_t virtual_qubits,
                                                    std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  if (virtual_qubits > graph.qubits()) return std::nullopt;
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> layout(virtual_qubits, kUnset);
  std::vector<bool> taken(graph.qubits(), false);

  std::vector<std::size_t> order;  // constrained virtual qubits, first use order
  for (auto [a, b] : pairs)
    for (auto v : {a, b})
      if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);

  std::function<bool(std::size_t)> place = [&](std::size_t depth) {
    if (depth == order.size()) return true;
    const auto v = order[depth];
    for (std::size_t p = 0; p < graph.qubits(); ++p) {
      if (taken[p]) continue;
      bool ok = true;
      for (auto [a, b] : pairs) {
        const auto other = a == v ? b : (b == v ? a : kUnset);
        if (other == kUnset || layout[other] == kUnset) continue;
        if (!graph.has_edge(p, layout[other])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      layout[v] = p;
      taken[p] = true;
      if (place(depth + 1)) return true;
      layout[v] = kUnset;
      taken[p] = false;
    }
    return false;
  };
  if (!place(0)) return std::nullopt;
  std::size_t next = 0;
  for (auto& slot : layout) {
    if (slot != kUnset) continue;
    while (taken[next]) ++next;
    slot = next;
    taken[next] = true;
  }
  return layout;
}

double periodic_distance(double phi) { return std::abs(phi - kTwoPi * std::round(phi / kTwoPi)); }

// ---------------------------------------------------------------------------
// Angle optimization

namespace {

struct Objective {
  const AnsatzCircuit& circuit;
  const QuantumState& target;
  double eta;
  std::span<const double> anchor;

  double offset(std::span<const double> theta, std::size_t j) const {
    const double phi = anchor.empty() ? theta[j] : theta[j] - anchor[j];
    return phi - kTwoPi * std::round(phi / kTwoPi);
  }

  double infidelity(std::span<const double> theta) const { return 1.0 - fidelity(simulate(circuit, theta), target); }

  double operator()(std::span<const double> theta) const {
    double c = infidelity(theta);
    if (eta > 0)
      for (std::size_t j = 0; j < theta.size(); ++j) c += eta * std::abs(offset(theta, j));
    return c;
  }

  // Finite differences for the fidelity part, exact subgradient for the
  // regularizer.
  Eigen::VectorXd grad(std::span<const double> theta) const {
    std::vector<double> x(theta.begin(), theta.end());
    Eigen::VectorXd g(static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = theta[j] + kFdStep;
      const double up = infidelity(x);
      x[j] = theta[j] - kFdStep;
      const double down = infidelity(x);
      x[j] = theta[j];
      double gj = (up - down) / (2 * kFdStep);
      if (eta > 0) {
        const double off = offset(theta, j);
        gj += eta * (off > 0 ? 1.0 : (off < 0 ? -1.0 : 0.0));
      }
      g[static_cast<Eigen::Index>(j)] = gj;
    }
    return g;
  }
};

// BFGS directions with Armijo backtracking; falls back to steepest descent
// whenever the quasi-Newton step fails.
std::pair<std::vector<double>, double> descend(const Objective& f, std::vector<double> x, std::size_t steps) {
  const auto d = static_cast<Eigen::Index>(x.size());
  double value = f(x);
  if (d == 0) return {x, value};
  Eigen::VectorXd g = f.grad(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(d, d);
  bool identity = true;
  std::vector<double> trial(x.size());
  for (std::size_t it = 0; it < steps; ++it) {
    if (g.norm() < 1e-12 || value < 1e-15) break;
    Eigen::VectorXd p = -hinv * g;
    double slope = g.dot(p);
    if (!(slope < 0)) {
      hinv.setIdentity();
      identity = true;
      p = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    double next = value;
    bool accepted = false;
    while (step > 1e-14) {
      for (Eigen::Index k = 0; k < d; ++k) trial[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] + step * p[k];
      next = f(trial);
      if (next <= value + 1e-4 * step * slope && next < value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (identity) break;
      hinv.setIdentity();
      identity = true;
      continue;
    }
    Eigen::VectorXd s = step * p;
    Eigen::VectorXd g_next = f.grad(trial);
    Eigen::VectorXd y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-18) {
      if (identity) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      Eigen::MatrixXd left = Eigen::MatrixXd::Identity(d, d) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
      identity = false;
    }
    x = trial;
    value = next;
    g = std::move(g_next);
  }
  return {x, value};
}

}  // namespace

AngleFit optimize_angles(const AnsatzCircuit& circuit, const QuantumState& target, const AngleSearch& search, Rng& rng,
                         std::span<const double> start, const std::vector<bool>& fresh) {
  const std::size_t d = circuit.parameters();
  if (!start.empty() && start.size() != d) throw DimensionError("start angles do not match the circuit");
  if (circuit.qubits() != target.qubits()) throw DimensionError("circuit and target qubit counts differ");
  if (!search.anchor.empty() && search.anchor.size() != d) throw DimensionError("anchor does not match the circuit");
  const Objective objective{circuit, target, search.eta, search.anchor};
  std::vector<double> base = start.empty() ? std::vector<double>(d, 0.0) : std::vector<double>(start.begin(), start.end());
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);

  AngleFit best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(search.restarts, 1); ++r) {
    std::vector<double> x = base;
    if (r > 0)
      for (std::size_t j = 0; j < d; ++j)
        if (fresh.empty() || fresh[j]) x[j] = angle(rng);
    auto [theta, cost] = descend(objective, std::move(x), search.steps);
    if (cost < best.cost) {
      best.cost = cost;
      best.fidelity = fidelity(simulate(circuit, theta), target);
      best.theta = std::move(theta);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Growth

namespace {

struct Builder {
  std::size_t n;
  RotationSet rotations;
  std::vector<Gate> gates;
  std::size_t d = 0;

  void rotation(std::vector<Gate>& out, std::size_t q) {
    if (rotations == RotationSet::RY) {
      out.push_back(Gate::rotation(GateKind::RY, q, FreeAngle{d++}));
    } else {
      out.push_back(Gate::rotation(GateKind::RZ, q, FreeAngle{d++}));
      out.push_back(Gate::rotation(GateKind::RY, q, FreeAngle{d++}));
      out.push_back(Gate::rotation(GateKind::RZ, q, FreeAngle{d++}));
    }
  }

  std::vector<Gate> block(std::size_t control, std::size_t target) {
    std::vector<Gate> out;
    rotation(out, control);
    rotation(out, target);
    out.push_back(Gate::cnot(control, target));
    rotation(out, control);
    rotation(out, target);
    return out;
  }

  AnsatzCircuit circuit() const { return AnsatzCircuit(n, gates, d); }
};

struct Candidate {
  int position;  // 0 = start, 1 = end
  std::size_t control, target;
};

}  // namespace

GrowthResult grow(const QuantumState& target, const ConnectivityGraph& graph, const BuilderOptions& options) {
  if (!(options.threshold > 0)) throw InvalidArgument("growth threshold must be positive");
  if (std::abs(target.norm_squared() - 1.0) > 1e-8) throw InvalidArgument("target state is not normalized");
  const std::size_t n = target.qubits();
  if (graph.qubits() < n) throw InvalidArgument("connectivity graph has fewer qubits than the target");

  Builder builder{n, options.rotations, {}, 0};
  for (std::size_t q = 0; q < n; ++q) builder.rotation(builder.gates, q);
  AngleSearch search{options.restarts, options.steps, 0.0, {}};

  GrowthResult result;
  Rng rng = derive_stream(options.seed, StreamTag::Builder, 0);
  auto circuit = builder.circuit();
  auto fit = optimize_angles(circuit, target, search, rng);
  std::vector<double> theta = fit.theta;
  double fid = fit.fidelity;
  result.fidelity_history.push_back(fid);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t step = 0;
  while (1.0 - fid >= options.threshold && result.blocks < options.max_blocks) {
    ++step;
    std::vector<Candidate> candidates;
    for (int position : {0, 1})
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t t = 0; t < n; ++t) {
          if (c == t) continue;
          auto trial_pairs = pairs;
          trial_pairs.emplace_back(std::min(c, t), std::max(c, t));
          if (find_layout(graph, n, trial_pairs)) candidates.push_back({position, c, t});
        }
    if (candidates.empty()) break;

    std::vector<AngleFit> fits(candidates.size());
    std::vector<AnsatzCircuit> circuits(candidates.size());
    parallel_for(candidates.size(), options.workers, [&](std::size_t i) {
      Builder b = builder;
      auto block = b.block(candidates[i].control, candidates[i].target);
      if (candidates[i].position == 0)
        b.gates.insert(b.gates.begin(), block.begin(), block.end());
      else
        b.gates.insert(b.gates.end(), block.begin(), block.end());
      circuits[i] = b.circuit();
      std::vector<double> start = theta;
      start.resize(b.d, 0.0);
      std::vector<bool> fresh(b.d, false);
      std::fill(fresh.begin() + static_cast<std::ptrdiff_t>(theta.size()), fresh.end(), true);
      Rng local = derive_stream(options.seed, StreamTag::Builder, step * 1000 + i + 1);
      fits[i] = optimize_angles(circuits[i], target, search, local, start, fresh);
    });

    std::size_t chosen = 0;
    for (std::size_t i = 1; i < fits.size(); ++i)
      if (fits[i].fidelity > fits[chosen].fidelity) chosen = i;
    const auto& cand = candidates[chosen];
    auto block = builder.block(cand.control, cand.target);
    if (cand.position == 0)
      builder.gates.insert(builder.gates.begin(), block.begin(), block.end());
    else
      builder.gates.insert(builder.gates.end(), block.begin(), block.end());
    pairs.emplace_back(std::min(cand.control, cand.target), std::max(cand.control, cand.target));
    ++result.blocks;
    // A start placement at zero angles leaves |0...0> unchanged, so the
    // chosen fidelity never drops below the incumbent.
    theta = fits[chosen].theta;
    fid = fits[chosen].fidelity;
    result.fidelity_history.push_back(fid);
  }

  result.circuit = builder.circuit();
  result.theta = theta;
  result.infidelity = 1.0 - fid;
  result.converged = 1.0 - fid < options.threshold;
  result.layout = *find_layout(graph, n, pairs);
  return result;
}

// ---------------------------------------------------------------------------
// Shrinkage

std::pair<AnsatzCircuit, std::vector<double>> remove_gate(const AnsatzCircuit& circuit, std::span<const double> theta,
                                                          std::size_t gate) {
  if (gate >= circuit.gates().size()) throw InvalidArgument("gate index out of range");
  if (theta.size() != circuit.parameters()) throw DimensionError("theta does not match the circuit");
  std::vector<Gate> gates = circuit.gates();
  gates.erase(gates.begin() + static_cast<std::ptrdiff_t>(gate));
  std::vector<bool> used(circuit.parameters(), false);
  for (const auto& g : gates)
    for (const auto& slot : g.angles)
      if (const auto* f = std::get_if<FreeAngle>(&slot)) used[f->index] = true;
  std::vector<std::size_t> remap(circuit.parameters(), 0);
  std::vector<double> reduced;
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (!used[j]) continue;
    remap[j] = reduced.size();
    reduced.push_back(theta[j]);
  }
  for (auto& g : gates)
    for (auto& slot : g.angles)
      if (auto* f = std::get_if<FreeAngle>(&slot)) f->index = remap[f->index];
  return {AnsatzCircuit(circuit.qubits(), std::move(gates), reduced.size()), std::move(reduced)};
}

std::pair<AnsatzCircuit, std::vector<double>> merge_rotations(const AnsatzCircuit& circuit,
                                                              std::span<const double> theta) {
  if (theta.size() != circuit.parameters()) throw DimensionError("theta does not match the circuit");
  AnsatzCircuit current = circuit;
  std::vector<double> values(theta.begin(), theta.end());
  auto single_free = [&](const Gate& g) -> std::optional<std::size_t> {
    if (g.kind != GateKind::RX && g.kind != GateKind::RY && g.kind != GateKind::RZ) return std::nullopt;
    const auto* f = std::get_if<FreeAngle>(&g.angles[0]);
    if (!f) return std::nullopt;
    return f->index;
  };
  bool merged = true;
  while (merged) {
    merged = false;
    std::vector<std::size_t> uses(current.parameters(), 0);
    for (const auto& g : current.gates())
      for (const auto& slot : g.angles)
        if (const auto* f = std::get_if<FreeAngle>(&slot)) ++uses[f->index];
    std::vector<std::optional<std::size_t>> last(current.qubits());
    const auto& gates = current.gates();
    for (std::size_t i = 0; i < gates.size() && !merged; ++i) {
      const auto& g = gates[i];
      if (g.qubits.size() == 1 && last[g.qubits[0]]) {
        const auto& prev = gates[*last[g.qubits[0]]];
        const auto a = single_free(prev), b = single_free(g);
        if (a && b && prev.kind == g.kind && *a != *b && uses[*a] == 1 && uses[*b] == 1) {
          values[*a] += values[*b];
          std::tie(current, values) = remove_gate(current, values, i);
          merged = true;
          break;
        }
      }
      for (auto q : g.qubits) last[q] = i;
    }
  }
  return {std::move(current), std::move(values)};
}

namespace {

// Single-qubit rotations with free angles, all within tol of 2pi k;
// smallest total distance first.
std::vector<std::size_t> removable_gates(const AnsatzCircuit& circuit, std::span<const double> theta, double tol) {
  std::vector<std::pair<double, std::size_t>> found;
  const auto& gates = circuit.gates();
  for (std::size_t g = 0; g < gates.size(); ++g) {
    if (gates[g].kind == GateKind::CNOT || gates[g].kind == GateKind::X) continue;
    bool any_free = false, all_small = true;
    double total = 0.0;
    for (const auto& slot : gates[g].angles) {
      const auto* f = std::get_if<FreeAngle>(&slot);
      if (!f) {
        all_small = false;
        break;
      }
      any_free = true;
      const double dist = periodic_distance(theta[f->index]);
      total += dist;
      if (dist > tol) all_small = false;
    }
    if (any_free && all_small) found.emplace_back(total, g);
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (const auto& [dist, g] : found) out.push_back(g);
  return out;
}

}  // namespace

ShrinkResult shrink(const AnsatzCircuit& circuit, std::span<const double> theta, const QuantumState& target,
                    const BuilderOptions& options) {
  const double bound = options.shrink_tolerance_factor * options.threshold;
  Rng rng = derive_stream(options.seed, StreamTag::Builder, 999'999);
  const AngleSearch plain{1, options.steps, 0.0, {}};

  auto [merged, merged_theta] = merge_rotations(circuit, theta);
  ShrinkResult result{merged, merged_theta, 1.0, circuit.parameters() - merged.parameters()};
  auto polished = optimize_angles(result.circuit, target, plain, rng, result.theta);
  result.theta = polished.theta;
  result.infidelity = 1.0 - polished.fidelity;

  for (double eta : options.eta_schedule) {
    const AngleSearch regularized{1, options.steps, eta, {}};
    const auto reg = optimize_angles(result.circuit, target, regularized, rng, result.theta);
    auto current = result.circuit;
    auto current_theta = reg.theta;
    bool removed_any = false;
    // Gate indices shift after each removal, so rescan until no candidate is
    // accepted.
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto g : removable_gates(current, current_theta, options.removal_tol)) {
        auto [trial, trial_theta] = remove_gate(current, current_theta, g);
        const auto refit = optimize_angles(trial, target, plain, rng, trial_theta);
        if (1.0 - refit.fidelity <= bound) {
          current = std::move(trial);
          current_theta = refit.theta;
          ++result.removed;
          removed_any = true;
          progress = true;
          break;
        }
      }
    }
    if (removed_any || eta == options.eta_schedule.back()) {
      const auto refit = optimize_angles(current, target, plain, rng, current_theta);
      result.circuit = std::move(current);
      result.theta = refit.theta;
      result.infidelity = 1.0 - refit.fidelity;
    }
  }
  return result;
}

std::vector<std::vector<double>> optima_per_target(const AnsatzCircuit& circuit, std::span<const double> theta,
                                                   const std::vector<QuantumState>& targets,
                                                   const BuilderOptions& options) {
  std::vector<std::vector<double>> out(targets.size());
  const AngleSearch search{1, options.steps, 0.0, {}};
  parallel_for(targets.size(), options.workers, [&](std::size_t i) {
    Rng rng = derive_stream(options.seed, StreamTag::Builder, 2'000'000 + i);
    out[i] = optimize_angles(circuit, targets[i], search, rng, theta).theta;
  });
  return out;
}

FixedResult fix_constant_angles(const AnsatzCircuit& circuit, const std::vector<std::vector<double>>& optima,
                                double const_tol) {
  const std::size_t d = circuit.parameters();
  for (const auto& row : optima)
    if (row.size() != d) throw DimensionError("optima row does not match the circuit");
  std::vector<bool> constant(d, false);
  std::vector<double> mean(d, 0.0);
  if (!optima.empty()) {
    for (std::size_t j = 0; j < d; ++j) {
      double lo = optima[0][j], hi = optima[0][j], sum = 0.0;
      for (const auto& row : optima) {
        lo = std::min(lo, row[j]);
        hi = std::max(hi, row[j]);
        sum += row[j];
      }
      constant[j] = hi - lo < const_tol;
      mean[j] = sum / static_cast<double>(optima.size());
    }
  }
  FixedResult out;
  std::vector<std::size_t> remap(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    if (constant[j]) continue;
    remap[j] = out.kept.size();
    out.kept.push_back(j);
  }
  std::vector<Gate> gates = circuit.gates();
  for (auto& g : gates)
    for (auto& slot : g.angles)
      if (auto* f = std::get_if<FreeAngle>(&slot)) {
        if (constant[f->index])
          slot = FixedAngle{mean[f->index]};
        else
          f->index = remap[f->index];
      }
  out.circuit = AnsatzCircuit(circuit.qubits(), std::move(gates), out.kept.size());
  return out;
}

}  // namespace bois
