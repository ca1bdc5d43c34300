#include "bois/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "bois/error.hpp"

namespace bois {

std::string_view gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::U3: return "U3";
    case GateKind::X: return "X";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

std::size_t angle_slots(GateKind kind) {
  switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ: return 1;
    case GateKind::U3: return 3;
    case GateKind::X:
    case GateKind::CNOT: return 0;
  }
  return 0;
}

std::size_t qubit_arity(GateKind kind) { return kind == GateKind::CNOT ? 2 : 1; }

Gate Gate::rotation(GateKind kind, std::size_t qubit, AngleSlot angle) {
  if (angle_slots(kind) != 1) throw InvalidArgument("not a single-angle rotation");
  return Gate{kind, {qubit}, {angle}};
}

Gate Gate::u3(std::size_t qubit, AngleSlot theta, AngleSlot phi, AngleSlot lambda) {
  return Gate{GateKind::U3, {qubit}, {theta, phi, lambda}};
}

Gate Gate::x(std::size_t qubit) { return Gate{GateKind::X, {qubit}, {}}; }

Gate Gate::cnot(std::size_t control, std::size_t target) { return Gate{GateKind::CNOT, {control, target}, {}}; }

// ---------------------------------------------------------------------------

AnsatzCircuit::AnsatzCircuit(std::size_t n, std::vector<Gate> gates, std::size_t d)
    : n_(n), gates_(std::move(gates)), d_(d) {
  if (n_ < 1) throw InvalidArgument("circuit needs at least one qubit");
  if (n_ > kMaxSimQubits) throw SizeError("circuit exceeds " + std::to_string(kMaxSimQubits) + " qubits");
  std::vector<bool> used(d_, false);
  for (std::size_t g = 0; g < gates_.size(); ++g) {
    const auto& gate = gates_[g];
    const std::string where = "gate " + std::to_string(g) + " (" + std::string(gate_name(gate.kind)) + ")";
    if (gate.qubits.size() != qubit_arity(gate.kind)) throw InvalidArgument(where + ": wrong qubit count");
    if (gate.angles.size() != angle_slots(gate.kind)) throw InvalidArgument(where + ": wrong angle count");
    for (auto q : gate.qubits)
      if (q >= n_) throw InvalidArgument(where + ": qubit index out of range");
    if (gate.qubits.size() == 2 && gate.qubits[0] == gate.qubits[1])
      throw InvalidArgument(where + ": control and target coincide");
    for (const auto& slot : gate.angles) {
      if (const auto* f = std::get_if<FreeAngle>(&slot)) {
        if (f->index >= d_) throw InvalidArgument(where + ": parameter index out of range");
        used[f->index] = true;
      } else if (!std::isfinite(std::get<FixedAngle>(slot).value)) {
        throw InvalidArgument(where + ": non-finite fixed angle");
      }
    }
  }
  for (std::size_t j = 0; j < d_; ++j)
    if (!used[j]) throw InvalidArgument("parameter " + std::to_string(j) + " is not used by any gate");
}

std::size_t AnsatzCircuit::entangler_count() const {
  return static_cast<std::size_t>(
      std::count_if(gates_.begin(), gates_.end(), [](const Gate& g) { return g.kind == GateKind::CNOT; }));
}

// ---------------------------------------------------------------------------

QuantumState::QuantumState(std::size_t n) : n_(n) {
  if (n_ < 1 || n_ > kMaxSimQubits) throw SizeError("state size must be 1.." + std::to_string(kMaxSimQubits) + " qubits");
  amps_.assign(std::size_t{1} << n_, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

QuantumState::QuantumState(std::size_t n, std::vector<Complex> amplitudes) : n_(n), amps_(std::move(amplitudes)) {
  if (n_ < 1 || n_ > kMaxSimQubits) throw SizeError("state size must be 1.." + std::to_string(kMaxSimQubits) + " qubits");
  if (amps_.size() != (std::size_t{1} << n_)) throw DimensionError("amplitude count must be 2^n");
}

double QuantumState::norm_squared() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

void QuantumState::apply_single(std::size_t qubit, const Complex (&m)[2][2]) {
  const std::size_t bit = std::size_t{1} << qubit;
  for (std::size_t k = 0; k < amps_.size(); ++k) {
    if (k & bit) continue;
    const Complex a0 = amps_[k];
    const Complex a1 = amps_[k | bit];
    amps_[k] = m[0][0] * a0 + m[0][1] * a1;
    amps_[k | bit] = m[1][0] * a0 + m[1][1] * a1;
  }
}

void QuantumState::apply_x(std::size_t qubit) {
  const std::size_t bit = std::size_t{1} << qubit;
  for (std::size_t k = 0; k < amps_.size(); ++k)
    if (!(k & bit)) std::swap(amps_[k], amps_[k | bit]);
}

void QuantumState::apply_cnot(std::size_t control, std::size_t target) {
  const std::size_t cbit = std::size_t{1} << control;
  const std::size_t tbit = std::size_t{1} << target;
  for (std::size_t k = 0; k < amps_.size(); ++k)
    if ((k & cbit) && !(k & tbit)) std::swap(amps_[k], amps_[k | tbit]);
}

// ---------------------------------------------------------------------------

namespace {

void apply_gate(QuantumState& state, const Gate& gate, const double* angle) {
  using namespace std::complex_literals;
  const std::size_t q = gate.qubits[0];
  switch (gate.kind) {
    case GateKind::RX: {
      const double c = std::cos(angle[0] / 2), s = std::sin(angle[0] / 2);
      const Complex m[2][2] = {{c, -1i * s}, {-1i * s, c}};
      state.apply_single(q, m);
      break;
    }
    case GateKind::RY: {
      const double c = std::cos(angle[0] / 2), s = std::sin(angle[0] / 2);
      const Complex m[2][2] = {{c, -s}, {s, c}};
      state.apply_single(q, m);
      break;
    }
    case GateKind::RZ: {
      const Complex m[2][2] = {{std::polar(1.0, -angle[0] / 2), 0.0}, {0.0, std::polar(1.0, angle[0] / 2)}};
      state.apply_single(q, m);
      break;
    }
    case GateKind::U3: {
      const double c = std::cos(angle[0] / 2), s = std::sin(angle[0] / 2);
      const double phi = angle[1], lambda = angle[2];
      const Complex m[2][2] = {{c, -std::polar(s, lambda)}, {std::polar(s, phi), std::polar(c, phi + lambda)}};
      state.apply_single(q, m);
      break;
    }
    case GateKind::X: state.apply_x(q); break;
    case GateKind::CNOT: state.apply_cnot(gate.qubits[0], gate.qubits[1]); break;
  }
}

}  // namespace

QuantumState simulate(const AnsatzCircuit& circuit, std::span<const double> theta, std::optional<SlotShift> shift) {
  if (theta.size() != circuit.parameters())
    throw DimensionError("circuit has " + std::to_string(circuit.parameters()) + " parameters, got " +
                         std::to_string(theta.size()));
  QuantumState state(circuit.qubits());
  double angle[3];
  const auto& gates = circuit.gates();
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const auto& gate = gates[g];
    for (std::size_t s = 0; s < gate.angles.size(); ++s) {
      const auto& slot = gate.angles[s];
      angle[s] = std::holds_alternative<FreeAngle>(slot) ? theta[std::get<FreeAngle>(slot).index]
                                                         : std::get<FixedAngle>(slot).value;
      if (shift && shift->gate == g && shift->slot == s) angle[s] += shift->delta;
    }
    apply_gate(state, gate, angle);
  }
  return state;
}

double expval_exact(const QuantumState& state, const PauliString& p) {
  if (p.size() != state.qubits()) throw DimensionError("Pauli and state qubit counts differ");
  if (p.is_identity()) return 1.0;
  const std::uint64_t flip = p.x_mask();
  const std::uint64_t zmask = p.z_mask();
  // P|k> = i^ny (-1)^popcount(k & zmask) |k ^ flip>
  static constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex phase = kIPow[p.y_count() % 4];
  const auto amps = state.amplitudes();
  Complex acc = 0.0;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    const double sign = (std::popcount(static_cast<std::uint64_t>(k) & zmask) & 1) ? -1.0 : 1.0;
    acc += std::conj(amps[k ^ flip]) * amps[k] * sign;
  }
  return std::clamp((phase * acc).real(), -1.0, 1.0);
}

double sample_from_expectation(double exact, std::size_t shots, Rng& rng) {
  if (shots == 0) throw InvalidArgument("shots must be positive");
  const double p = std::clamp((1.0 + exact) / 2.0, 0.0, 1.0);
  std::binomial_distribution<long long> draw(static_cast<long long>(shots), p);
  const auto k = draw(rng);
  return 2.0 * static_cast<double>(k) / static_cast<double>(shots) - 1.0;
}

double expval_sampled(const QuantumState& state, const PauliString& p, std::size_t shots, Rng& rng) {
  if (shots == 0) throw InvalidArgument("shots must be positive");
  return sample_from_expectation(expval_exact(state, p), shots, rng);
}

double fidelity(const QuantumState& state, const QuantumState& target) {
  if (state.dimension() != target.dimension()) throw DimensionError("state sizes differ");
  Complex overlap = 0.0;
  for (std::size_t k = 0; k < state.dimension(); ++k) overlap += std::conj(state[k]) * target[k];
  return std::min(1.0, std::abs(overlap));
}

ExpectationSet measure(const ParameterizedHamiltonian& h, const QuantumState& state, std::optional<std::size_t> shots,
                       Rng* rng) {
  if (h.qubits() != state.qubits()) throw DimensionError("Hamiltonian and state qubit counts differ");
  if (shots && !rng) throw InvalidArgument("shot sampling needs a random stream");
  ExpectationSet out;
  out.shots = shots;
  out.values.reserve(h.terms());
  for (const auto& p : h.paulis()) {
    const double exact = expval_exact(state, p);
    out.values.push_back(shots && !p.is_identity() ? sample_from_expectation(exact, *shots, *rng) : exact);
  }
  return out;
}

double exact_energy(const ParameterizedHamiltonian& h, std::size_t point, const QuantumState& state) {
  return energy_from_expectations(h, point, measure(h, state, std::nullopt, nullptr).values);
}

double evaluate_cost(const AnsatzCircuit& circuit, std::span<const double> theta, const CircuitCost& cost) {
  const auto state = simulate(circuit, theta);
  if (const auto* e = std::get_if<EnergyCost>(&cost)) return exact_energy(*e->hamiltonian, e->point, state);
  return 1.0 - fidelity(state, *std::get<InfidelityCost>(cost).target);
}

std::vector<double> finite_difference_gradient(const AnsatzCircuit& circuit, std::span<const double> theta,
                                               const CircuitCost& cost, double step) {
  std::vector<double> shifted(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    shifted[j] = theta[j] + step;
    const double up = evaluate_cost(circuit, shifted, cost);
    shifted[j] = theta[j] - step;
    const double down = evaluate_cost(circuit, shifted, cost);
    shifted[j] = theta[j];
    grad[j] = (up - down) / (2 * step);
  }
  return grad;
}

std::vector<double> gradient(const AnsatzCircuit& circuit, std::span<const double> theta, const CircuitCost& cost) {
  if (theta.size() != circuit.parameters()) throw DimensionError("theta length does not match circuit");
  const auto* energy = std::get_if<EnergyCost>(&cost);
  if (!energy) return finite_difference_gradient(circuit, theta, cost, 1e-5);

  // Every slot is a single-angle rotation (U3 = RZ RY RZ up to phase), so
  // each occurrence contributes [E(+pi/2) - E(-pi/2)] / 2.
  constexpr double kShift = std::numbers::pi / 2;
  std::vector<double> grad(theta.size(), 0.0);
  const auto& gates = circuit.gates();
  for (std::size_t g = 0; g < gates.size(); ++g) {
    for (std::size_t s = 0; s < gates[g].angles.size(); ++s) {
      const auto* free = std::get_if<FreeAngle>(&gates[g].angles[s]);
      if (!free) continue;
      const double up = exact_energy(*energy->hamiltonian, energy->point, simulate(circuit, theta, SlotShift{g, s, kShift}));
      const double down =
          exact_energy(*energy->hamiltonian, energy->point, simulate(circuit, theta, SlotShift{g, s, -kShift}));
      grad[free->index] += (up - down) / 2;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Ansatz file format

namespace {

using nlohmann::json;

GateKind parse_kind(const std::string& name, const std::string& where) {
  for (auto kind : {GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::U3, GateKind::X, GateKind::CNOT})
    if (gate_name(kind) == name) return kind;
  throw ParseError(where + ": unknown gate kind '" + name + "'");
}

}  // namespace

AnsatzCircuit parse_ansatz(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("ansatz: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ParseError("ansatz document must be an object");
    const auto n = doc.at("n").get<std::size_t>();
    const auto d = doc.at("d").get<std::size_t>();
    std::vector<Gate> gates;
    std::size_t index = 0;
    for (const auto& g : doc.at("gates")) {
      const std::string where = "gate " + std::to_string(index++);
      Gate gate;
      gate.kind = parse_kind(g.at("kind").get<std::string>(), where);
      gate.qubits = g.at("qubits").get<std::vector<std::size_t>>();
      if (g.contains("angles")) {
        for (const auto& a : g.at("angles")) {
          if (a.contains("free"))
            gate.angles.emplace_back(FreeAngle{a.at("free").get<std::size_t>()});
          else if (a.contains("fixed"))
            gate.angles.emplace_back(FixedAngle{a.at("fixed").get<double>()});
          else
            throw ParseError(where + ": angle must be {\"free\": i} or {\"fixed\": value}");
        }
      }
      gates.push_back(std::move(gate));
    }
    return AnsatzCircuit(n, std::move(gates), d);
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(std::string("ansatz: ") + e.what());
  } catch (const Error& e) {
    throw ParseError(std::string("ansatz: ") + e.what());
  }
}

std::string dump_ansatz(const AnsatzCircuit& circuit) {
  json gates = json::array();
  for (const auto& gate : circuit.gates()) {
    json angles = json::array();
    for (const auto& slot : gate.angles) {
      if (const auto* f = std::get_if<FreeAngle>(&slot))
        angles.push_back({{"free", f->index}});
      else
        angles.push_back({{"fixed", std::get<FixedAngle>(slot).value}});
    }
    gates.push_back({{"kind", gate_name(gate.kind)}, {"qubits", gate.qubits}, {"angles", angles}});
  }
  json doc;
  doc["n"] = circuit.qubits();
  doc["d"] = circuit.parameters();
  doc["gates"] = std::move(gates);
  return doc.dump(2) + "\n";
}

AnsatzCircuit load_ansatz_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ansatz file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_ansatz(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_ansatz_file(const AnsatzCircuit& circuit, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write ansatz file '" + path.string() + "'");
  out << dump_ansatz(circuit);
}

}  // namespace bois
