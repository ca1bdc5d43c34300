#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "bois/circuit.hpp"
#include "bois/pauli.hpp"

namespace bois {

inline constexpr std::size_t kMaxDenseQubits = 12;

struct DenseHamiltonian {
  Eigen::MatrixXcd matrix;
  std::size_t qubits = 0;
  std::size_t point = 0;
};

/// Dense 2^n x 2^n matrix of a single Pauli string (qubit k is bit k of the
/// row index), built by explicit Kronecker products.
Eigen::MatrixXcd pauli_matrix(const PauliString& p);

/// sum_i c[point][i] P_i as a dense Hermitian matrix. Throws SizeError for
/// n > 12.
DenseHamiltonian dense_matrix(const ParameterizedHamiltonian& h, std::size_t point);

struct GroundState {
  double energy = 0.0;
  QuantumState state;
  /// Gap to the next eigenvalue (0 for a degenerate ground space).
  double gap = 0.0;
};

/// Smallest eigenpair. The eigenvector phase is fixed so that its
/// largest-magnitude amplitude (first one on ties) is real and positive.
GroundState ground_state(const DenseHamiltonian& dense);

}  // namespace bois
