#include "bois/exact.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "bois/error.hpp"

namespace bois {

namespace {

Eigen::Matrix2cd single_site(Pauli p) {
  using namespace std::complex_literals;
  Eigen::Matrix2cd m;
  switch (p) {
    case Pauli::I: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, -1i, 1i, 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

}  // namespace

Eigen::MatrixXcd pauli_matrix(const PauliString& p) {
  if (p.size() > kMaxDenseQubits) throw SizeError("dense Pauli matrix limited to 12 qubits");
  // Highest qubit is the leftmost Kronecker factor.
  Eigen::MatrixXcd m = single_site(p[p.size() - 1]);
  for (std::size_t k = p.size() - 1; k-- > 0;) {
    Eigen::MatrixXcd next = Eigen::kroneckerProduct(m, single_site(p[k]));
    m = std::move(next);
  }
  return m;
}

DenseHamiltonian dense_matrix(const ParameterizedHamiltonian& h, std::size_t point) {
  if (h.qubits() > kMaxDenseQubits)
    throw SizeError("dense Hamiltonian limited to 12 qubits, got " + std::to_string(h.qubits()));
  if (point >= h.grid().size()) throw InvalidArgument("grid index out of range");
  const auto dim = Eigen::Index{1} << h.qubits();
  DenseHamiltonian out{Eigen::MatrixXcd::Zero(dim, dim), h.qubits(), point};
  for (std::size_t i = 0; i < h.terms(); ++i) {
    const double c = h.coeff(point, i);
    if (c != 0.0) out.matrix += c * pauli_matrix(h.paulis()[i]);
  }
  return out;
}

GroundState ground_state(const DenseHamiltonian& dense) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dense.matrix);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
  const Eigen::VectorXcd v = solver.eigenvectors().col(0);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (std::abs(v[k]) > std::abs(v[best])) best = k;
  const Complex phase = std::abs(v[best]) > 0 ? std::conj(v[best]) / std::abs(v[best]) : Complex{1.0};
  std::vector<Complex> amps(v.size());
  const double norm = v.norm();
  for (Eigen::Index k = 0; k < v.size(); ++k) amps[k] = v[k] * phase / norm;
  amps[best] = Complex{std::abs(amps[best]), 0.0};
  const auto& values = solver.eigenvalues();
  const double gap = values.size() > 1 ? values[1] - values[0] : 0.0;
  return GroundState{values[0], QuantumState(dense.qubits, std::move(amps)), gap};
}

}  // namespace bois
