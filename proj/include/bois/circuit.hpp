#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bois/pauli.hpp"
#include "bois/random.hpp"

namespace bois {

using Complex = std::complex<double>;

enum class GateKind { RX, RY, RZ, U3, X, CNOT };

std::string_view gate_name(GateKind kind);
std::size_t angle_slots(GateKind kind);
std::size_t qubit_arity(GateKind kind);

struct FixedAngle {
  double value = 0.0;
  friend bool operator==(const FixedAngle&, const FixedAngle&) = default;
};
struct FreeAngle {
  std::size_t index = 0;
  friend bool operator==(const FreeAngle&, const FreeAngle&) = default;
};
using AngleSlot = std::variant<FixedAngle, FreeAngle>;

/// One gate. For CNOT, qubits = {control, target}. U3 angles are
/// (theta, phi, lambda).
struct Gate {
  GateKind kind = GateKind::X;
  std::vector<std::size_t> qubits;
  std::vector<AngleSlot> angles;

  static Gate rotation(GateKind kind, std::size_t qubit, AngleSlot angle);
  static Gate u3(std::size_t qubit, AngleSlot theta, AngleSlot phi, AngleSlot lambda);
  static Gate x(std::size_t qubit);
  static Gate cnot(std::size_t control, std::size_t target);

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Shared parameterized circuit U(theta) acting on |0...0>.
class AnsatzCircuit {
 public:
  AnsatzCircuit() = default;
  /// Validates gate arity, qubit ranges and that every index in [0, d) is used.
  AnsatzCircuit(std::size_t n, std::vector<Gate> gates, std::size_t d);

  std::size_t qubits() const { return n_; }
  std::size_t parameters() const { return d_; }
  const std::vector<Gate>& gates() const { return gates_; }

  std::size_t entangler_count() const;

  friend bool operator==(const AnsatzCircuit&, const AnsatzCircuit&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Gate> gates_;
  std::size_t d_ = 0;
};

/// Statevector; amplitude index bit k is qubit k.
class QuantumState {
 public:
  explicit QuantumState(std::size_t n);  // |0...0>
  QuantumState(std::size_t n, std::vector<Complex> amplitudes);

  std::size_t qubits() const { return n_; }
  std::size_t dimension() const { return amps_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }
  const Complex& operator[](std::size_t k) const { return amps_[k]; }

  double norm_squared() const;

  void apply_single(std::size_t qubit, const Complex (&m)[2][2]);
  void apply_x(std::size_t qubit);
  void apply_cnot(std::size_t control, std::size_t target);

 private:
  std::size_t n_;
  std::vector<Complex> amps_;
};

/// Largest register the dense simulator accepts.
inline constexpr std::size_t kMaxSimQubits = 14;

/// Per-Pauli estimates aligned with a Hamiltonian's term list.
struct ExpectationSet {
  std::vector<double> values;
  std::optional<std::size_t> shots;  ///< empty means exact
};

/// Shifts one occurrence of an angle slot; used by the parameter-shift rule.
struct SlotShift {
  std::size_t gate = 0;
  std::size_t slot = 0;
  double delta = 0.0;
};

QuantumState simulate(const AnsatzCircuit& circuit, std::span<const double> theta,
                      std::optional<SlotShift> shift = std::nullopt);

double expval_exact(const QuantumState& state, const PauliString& p);
/// (2k/shots - 1) with k ~ Binomial(shots, (1 + <P>)/2).
double expval_sampled(const QuantumState& state, const PauliString& p, std::size_t shots, Rng& rng);
double sample_from_expectation(double exact, std::size_t shots, Rng& rng);

/// F = |<psi|target>|, not squared.
double fidelity(const QuantumState& state, const QuantumState& target);

/// Evaluates every term of `h`; identity terms are 1 and never sampled.
ExpectationSet measure(const ParameterizedHamiltonian& h, const QuantumState& state,
                       std::optional<std::size_t> shots, Rng* rng);

double exact_energy(const ParameterizedHamiltonian& h, std::size_t point, const QuantumState& state);

struct EnergyCost {
  const ParameterizedHamiltonian* hamiltonian;
  std::size_t point;
};
struct InfidelityCost {
  const QuantumState* target;
};
using CircuitCost = std::variant<EnergyCost, InfidelityCost>;

double evaluate_cost(const AnsatzCircuit& circuit, std::span<const double> theta, const CircuitCost& cost);

/// Energy: parameter-shift (+-pi/2 per slot occurrence). Infidelity:
/// central differences with step 1e-5.
std::vector<double> gradient(const AnsatzCircuit& circuit, std::span<const double> theta, const CircuitCost& cost);

/// Central finite-difference gradient of an arbitrary circuit cost.
std::vector<double> finite_difference_gradient(const AnsatzCircuit& circuit, std::span<const double> theta,
                                               const CircuitCost& cost, double step = 1e-5);

AnsatzCircuit parse_ansatz(std::string_view text);
std::string dump_ansatz(const AnsatzCircuit& circuit);
AnsatzCircuit load_ansatz_file(const std::filesystem::path& path);
void save_ansatz_file(const AnsatzCircuit& circuit, const std::filesystem::path& path);

}  // namespace bois
