#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bois/circuit.hpp"
#include "bois/random.hpp"

namespace bois {

/// Undirected coupling map over physical qubits.
class ConnectivityGraph {
 public:
  /// Throws InvalidArgument for out-of-range or self edges, or a
  /// disconnected graph.
  ConnectivityGraph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges);
  static ConnectivityGraph line(std::size_t n);

  std::size_t qubits() const { return n_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  bool has_edge(std::size_t a, std::size_t b) const;

 private:
  std::size_t n_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<bool>> adjacent_;
};

/// Virtual-to-physical assignment under which every pair lies on an edge,
/// searched by backtracking in lexicographic order. Virtual qubits that no
/// pair touches take the lowest unused physical qubits.
std::optional<std::vector<std::size_t>> find_layout(const ConnectivityGraph& graph, std::size_t virtual_qubits,
                                                    std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// Periodic distance between an angle and its nearest multiple of 2pi.
double periodic_distance(double phi);

enum class RotationSet {
  RY,   ///< real targets
  ZYZ,  ///< generic Bloch rotation as RZ RY RZ
};

struct AngleSearch {
  std::size_t restarts = 3;
  std::size_t steps = 500;
  /// Weight of the sum of periodic distances added to 1 - F.
  double eta = 0.0;
  /// When set, distances are measured from these angles instead of zero.
  std::vector<double> anchor;
};

struct AngleFit {
  std::vector<double> theta;
  double fidelity = 0.0;
  double cost = 0.0;
};

/// Multi-start quasi-Newton descent with backtracking line search on
/// 1 - F + eta sum_j D(theta_j). Restart 0 starts from `start` (zeros when
/// empty); later restarts redraw the entries flagged in `fresh` (all when
/// empty) uniformly in [0, 2pi).
AngleFit optimize_angles(const AnsatzCircuit& circuit, const QuantumState& target, const AngleSearch& search, Rng& rng,
                         std::span<const double> start = {}, const std::vector<bool>& fresh = {});

struct BuilderOptions {
  RotationSet rotations = RotationSet::ZYZ;
  double threshold = 1e-6;  ///< growth stops once 1 - F < threshold
  std::size_t max_blocks = 12;
  std::size_t restarts = 3;
  std::size_t steps = 500;
  std::vector<double> eta_schedule{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  double removal_tol = 0.05;
  /// Shrinkage never accepts a removal above this multiple of `threshold`.
  double shrink_tolerance_factor = 10.0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct GrowthResult {
  AnsatzCircuit circuit;
  std::vector<double> theta;
  double infidelity = 1.0;
  std::size_t blocks = 0;
  bool converged = false;
  std::vector<std::size_t> layout;
  /// Fidelity after the separable start and after each accepted block.
  std::vector<double> fidelity_history;
};

/// Greedy entangling-block growth towards `target`.
GrowthResult grow(const QuantumState& target, const ConnectivityGraph& graph, const BuilderOptions& options);

struct ShrinkResult {
  AnsatzCircuit circuit;
  std::vector<double> theta;
  double infidelity = 1.0;
  std::size_t removed = 0;
};

/// Regularized re-optimization with increasing eta, removing single-qubit
/// rotations whose angles sit within removal_tol of a multiple of 2pi.
ShrinkResult shrink(const AnsatzCircuit& circuit, std::span<const double> theta, const QuantumState& target,
                    const BuilderOptions& options);

/// Drops one gate and renumbers the remaining free parameters; `theta` is
/// reduced to match.
std::pair<AnsatzCircuit, std::vector<double>> remove_gate(const AnsatzCircuit& circuit, std::span<const double> theta,
                                                          std::size_t gate);

/// Folds each RX/RY/RZ into an immediately preceding rotation of the same
/// kind on the same qubit (nothing else touching that qubit in between).
/// Both angles must be free and used by that gate alone. Exact: the state
/// is unchanged.
std::pair<AnsatzCircuit, std::vector<double>> merge_rotations(const AnsatzCircuit& circuit,
                                                              std::span<const double> theta);

/// Optimal angles for each target, warm-started from `theta`.
std::vector<std::vector<double>> optima_per_target(const AnsatzCircuit& circuit, std::span<const double> theta,
                                                   const std::vector<QuantumState>& targets,
                                                   const BuilderOptions& options);

struct FixedResult {
  AnsatzCircuit circuit;
  /// Old parameter index of each remaining free parameter.
  std::vector<std::size_t> kept;
};

/// Fixes every free angle whose range over the optima table is below
/// const_tol at its mean value.
FixedResult fix_constant_angles(const AnsatzCircuit& circuit, const std::vector<std::vector<double>>& optima,
                                double const_tol);

}  // namespace bois
