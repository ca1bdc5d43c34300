#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bois {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// n-qubit tensor product label. Character k of the text form acts on
/// qubit k, so "ZXII" is Z on qubit 0 and X on qubit 1.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::vector<Pauli> ops);

  /// Parses "IXYZ"-style labels; throws ParseError on any other character
  /// or an empty label.
  static PauliString parse(std::string_view text);
  /// Single-site or two-site operators padded with identities.
  static PauliString single(std::size_t n, std::size_t qubit, Pauli op);
  static PauliString pair(std::size_t n, std::size_t a, Pauli op_a, std::size_t b, Pauli op_b);

  std::size_t size() const { return ops_.size(); }
  Pauli operator[](std::size_t qubit) const { return ops_[qubit]; }
  std::span<const Pauli> ops() const { return ops_; }
  bool is_identity() const;

  // Bit masks over qubits (bit k = qubit k).
  std::uint64_t x_mask() const;  // X or Y
  std::uint64_t z_mask() const;  // Z or Y
  std::size_t y_count() const;

  std::string str() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend auto operator<=>(const PauliString& a, const PauliString& b) { return a.str() <=> b.str(); }

 private:
  std::vector<Pauli> ops_;
};

/// Cartesian grid of physical parameters (fields, bond lengths). Points are
/// enumerated in row-major axis order: the last axis varies fastest.
class PhysicalGrid {
 public:
  PhysicalGrid() = default;
  PhysicalGrid(std::vector<std::vector<double>> axes, std::vector<std::string> names = {});

  static PhysicalGrid linspace(double start, double stop, std::size_t count, std::string name = "h");

  std::size_t dims() const { return axes_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<std::vector<double>>& axes() const { return axes_; }
  const std::vector<std::string>& names() const { return names_; }

  std::vector<double> point(std::size_t index) const;
  /// Per-axis position of a flat index.
  std::vector<std::size_t> unravel(std::size_t index) const;
  std::size_t ravel(std::span<const std::size_t> coords) const;

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<std::string> names_;
  std::size_t size_ = 0;
};

/// H(x_a) = sum_i c[a][i] P_i over a fixed, shared Pauli list.
class ParameterizedHamiltonian {
 public:
  ParameterizedHamiltonian(std::size_t n, std::vector<PauliString> paulis, PhysicalGrid grid,
                           Eigen::MatrixXd coeffs);

  std::size_t qubits() const { return n_; }
  std::size_t terms() const { return paulis_.size(); }
  const std::vector<PauliString>& paulis() const { return paulis_; }
  const PhysicalGrid& grid() const { return grid_; }
  /// Rows are grid points, columns are terms.
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  double coeff(std::size_t point, std::size_t term) const { return coeffs_(point, term); }

 private:
  std::size_t n_;
  std::vector<PauliString> paulis_;
  PhysicalGrid grid_;
  Eigen::MatrixXd coeffs_;
};

enum class FieldMode {
  Shared,    ///< one axis h with h_X = h_Z = h
  Separate,  ///< two axes (h_X, h_Z)
};

/// Open-boundary chain sum_i Z_i Z_{i+1} - sum_i (h_X X_i + h_Z Z_i).
/// Term order: the n-1 bonds, then X_0..X_{n-1}, then Z_0..Z_{n-1}.
ParameterizedHamiltonian build_spin_chain(std::size_t n, const PhysicalGrid& grid,
                                          FieldMode mode = FieldMode::Shared);

ParameterizedHamiltonian load_hamiltonian_file(const std::filesystem::path& path);
ParameterizedHamiltonian parse_hamiltonian(std::string_view text);
std::string dump_hamiltonian(const ParameterizedHamiltonian& h);
void save_hamiltonian_file(const ParameterizedHamiltonian& h, const std::filesystem::path& path);

/// Cross-evaluation primitive: sum_i c[point][i] * e_i. The same
/// expectation vector serves every grid point.
double energy_from_expectations(const ParameterizedHamiltonian& h, std::size_t point,
                                std::span<const double> expectations);

}  // namespace bois
