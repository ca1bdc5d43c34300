#include "bois/pauli.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bois/error.hpp"

namespace bois {

namespace {

char to_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  return '?';
}

constexpr std::size_t kMaxMaskQubits = 64;

}  // namespace

PauliString::PauliString(std::vector<Pauli> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw InvalidArgument("PauliString needs at least one qubit");
  if (ops_.size() > kMaxMaskQubits) throw SizeError("PauliString limited to 64 qubits");
}

PauliString PauliString::parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty Pauli label");
  std::vector<Pauli> ops;
  ops.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case 'I': ops.push_back(Pauli::I); break;
      case 'X': ops.push_back(Pauli::X); break;
      case 'Y': ops.push_back(Pauli::Y); break;
      case 'Z': ops.push_back(Pauli::Z); break;
      default:
        throw ParseError("invalid character '" + std::string(1, c) + "' in Pauli label '" +
                         std::string(text) + "'");
    }
  }
  return PauliString(std::move(ops));
}

PauliString PauliString::single(std::size_t n, std::size_t qubit, Pauli op) {
  if (qubit >= n) throw InvalidArgument("qubit index out of range");
  std::vector<Pauli> ops(n, Pauli::I);
  ops[qubit] = op;
  return PauliString(std::move(ops));
}

PauliString PauliString::pair(std::size_t n, std::size_t a, Pauli op_a, std::size_t b, Pauli op_b) {
  if (a >= n || b >= n || a == b) throw InvalidArgument("invalid qubit pair");
  std::vector<Pauli> ops(n, Pauli::I);
  ops[a] = op_a;
  ops[b] = op_b;
  return PauliString(std::move(ops));
}

bool PauliString::is_identity() const {
  return std::all_of(ops_.begin(), ops_.end(), [](Pauli p) { return p == Pauli::I; });
}

std::uint64_t PauliString::x_mask() const {
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < ops_.size(); ++k)
    if (ops_[k] == Pauli::X || ops_[k] == Pauli::Y) m |= (std::uint64_t{1} << k);
  return m;
}

std::uint64_t PauliString::z_mask() const {
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < ops_.size(); ++k)
    if (ops_[k] == Pauli::Z || ops_[k] == Pauli::Y) m |= (std::uint64_t{1} << k);
  return m;
}

std::size_t PauliString::y_count() const {
  return static_cast<std::size_t>(std::count(ops_.begin(), ops_.end(), Pauli::Y));
}

std::string PauliString::str() const {
  std::string s;
  s.reserve(ops_.size());
  for (Pauli p : ops_) s.push_back(to_char(p));
  return s;
}

// ---------------------------------------------------------------------------

PhysicalGrid::PhysicalGrid(std::vector<std::vector<double>> axes, std::vector<std::string> names)
    : axes_(std::move(axes)), names_(std::move(names)) {
  if (axes_.empty() || axes_.size() > 2) throw InvalidArgument("grid must have 1 or 2 axes");
  if (names_.empty()) {
    for (std::size_t k = 0; k < axes_.size(); ++k) names_.push_back("x" + std::to_string(k + 1));
  }
  if (names_.size() != axes_.size()) throw InvalidArgument("axis name count does not match axes");
  size_ = 1;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const auto& axis = axes_[k];
    if (axis.empty()) throw InvalidArgument("axis '" + names_[k] + "' is empty");
    for (std::size_t i = 1; i < axis.size(); ++i) {
      if (!(axis[i] > axis[i - 1]))
        throw InvalidArgument("axis '" + names_[k] + "' is not strictly increasing at entry " +
                              std::to_string(i));
    }
    size_ *= axis.size();
  }
}

PhysicalGrid PhysicalGrid::linspace(double start, double stop, std::size_t count, std::string name) {
  if (count == 0) throw InvalidArgument("linspace needs at least one point");
  std::vector<double> axis(count);
  for (std::size_t i = 0; i < count; ++i)
    axis[i] = count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  if (count > 1) axis.back() = stop;
  return PhysicalGrid({std::move(axis)}, {std::move(name)});
}

std::vector<std::size_t> PhysicalGrid::unravel(std::size_t index) const {
  if (index >= size_) throw InvalidArgument("grid index out of range");
  std::vector<std::size_t> coords(axes_.size());
  for (std::size_t k = axes_.size(); k-- > 0;) {
    coords[k] = index % axes_[k].size();
    index /= axes_[k].size();
  }
  return coords;
}

std::size_t PhysicalGrid::ravel(std::span<const std::size_t> coords) const {
  if (coords.size() != axes_.size()) throw DimensionError("coordinate rank mismatch");
  std::size_t index = 0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    if (coords[k] >= axes_[k].size()) throw InvalidArgument("grid coordinate out of range");
    index = index * axes_[k].size() + coords[k];
  }
  return index;
}

std::vector<double> PhysicalGrid::point(std::size_t index) const {
  auto coords = unravel(index);
  std::vector<double> x(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) x[k] = axes_[k][coords[k]];
  return x;
}

// ---------------------------------------------------------------------------

ParameterizedHamiltonian::ParameterizedHamiltonian(std::size_t n, std::vector<PauliString> paulis,
                                                   PhysicalGrid grid, Eigen::MatrixXd coeffs)
    : n_(n), paulis_(std::move(paulis)), grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (n_ < 1) throw InvalidArgument("Hamiltonian needs at least one qubit");
  for (const auto& p : paulis_) {
    if (p.size() != n_)
      throw DimensionError("Pauli '" + p.str() + "' acts on " + std::to_string(p.size()) +
                           " qubits, expected " + std::to_string(n_));
  }
  std::vector<std::string> labels;
  for (const auto& p : paulis_) labels.push_back(p.str());
  std::sort(labels.begin(), labels.end());
  auto dup = std::adjacent_find(labels.begin(), labels.end());
  if (dup != labels.end()) throw InvalidArgument("duplicate Pauli term '" + *dup + "'");
  if (static_cast<std::size_t>(coeffs_.rows()) != grid_.size() ||
      static_cast<std::size_t>(coeffs_.cols()) != paulis_.size())
    throw DimensionError("coefficient table must be (grid points x terms)");
  if (!coeffs_.allFinite()) throw InvalidArgument("non-finite Hamiltonian coefficient");
}

ParameterizedHamiltonian build_spin_chain(std::size_t n, const PhysicalGrid& grid, FieldMode mode) {
  if (n < 2) throw InvalidArgument("spin chain needs n >= 2, got " + std::to_string(n));
  const std::size_t need_dims = mode == FieldMode::Shared ? 1 : 2;
  if (grid.dims() != need_dims)
    throw InvalidArgument("spin chain field mode needs a " + std::to_string(need_dims) + "-axis grid");

  std::vector<PauliString> paulis;
  for (std::size_t i = 0; i + 1 < n; ++i) paulis.push_back(PauliString::pair(n, i, Pauli::Z, i + 1, Pauli::Z));
  for (std::size_t i = 0; i < n; ++i) paulis.push_back(PauliString::single(n, i, Pauli::X));
  for (std::size_t i = 0; i < n; ++i) paulis.push_back(PauliString::single(n, i, Pauli::Z));

  Eigen::MatrixXd coeffs(grid.size(), paulis.size());
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const auto x = grid.point(a);
    const double hx = x[0];
    const double hz = mode == FieldMode::Shared ? x[0] : x[1];
    std::size_t col = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) coeffs(a, col++) = 1.0;
    for (std::size_t i = 0; i < n; ++i) coeffs(a, col++) = -hx;
    for (std::size_t i = 0; i < n; ++i) coeffs(a, col++) = -hz;
  }
  return ParameterizedHamiltonian(n, std::move(paulis), grid, std::move(coeffs));
}

// ---------------------------------------------------------------------------
// Hamiltonian file format

namespace {

using nlohmann::json;

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": key '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

ParameterizedHamiltonian from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("Hamiltonian document must be an object");
  const auto n = require<long long>(doc, "n", "hamiltonian");
  if (n < 1) throw ParseError("hamiltonian: 'n' must be positive");
  auto axes = require<std::vector<std::vector<double>>>(doc, "axes", "hamiltonian");
  std::vector<std::string> names;
  if (doc.contains("axis_names")) names = require<std::vector<std::string>>(doc, "axis_names", "hamiltonian");

  PhysicalGrid grid;
  try {
    grid = PhysicalGrid(std::move(axes), std::move(names));
  } catch (const Error& e) {
    throw ParseError(std::string("hamiltonian axes: ") + e.what());
  }

  if (!doc.contains("terms") || !doc.at("terms").is_array()) throw ParseError("hamiltonian: 'terms' must be an array");
  std::map<std::string, std::vector<double>> merged;  // sorted by label
  std::size_t index = 0;
  for (const auto& term : doc.at("terms")) {
    const std::string where = "term " + std::to_string(index++);
    const auto label = require<std::string>(term, "pauli", where);
    const std::string named = where + " ('" + label + "')";
    PauliString p;
    try {
      p = PauliString::parse(label);
    } catch (const Error& e) {
      throw ParseError(named + ": " + e.what());
    }
    if (p.size() != static_cast<std::size_t>(n))
      throw ParseError(named + ": acts on " + std::to_string(p.size()) + " qubits but n = " + std::to_string(n));
    if (!term.contains("coeffs") || !term.at("coeffs").is_array())
      throw ParseError(named + ": 'coeffs' must be an array");
    const auto& raw = term.at("coeffs");
    if (raw.size() != grid.size())
      throw ParseError(named + ": has " + std::to_string(raw.size()) + " coefficients for " +
                       std::to_string(grid.size()) + " grid points");
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t a = 0; a < raw.size(); ++a) {
      if (raw[a].is_null()) continue;  // absent at this point
      if (!raw[a].is_number()) throw ParseError(named + ": coefficient " + std::to_string(a) + " is not a number");
      values[a] = raw[a].get<double>();
    }
    if (!merged.emplace(label, std::move(values)).second) throw ParseError(named + ": duplicate Pauli label");
  }

  std::vector<PauliString> paulis;
  Eigen::MatrixXd coeffs(grid.size(), merged.size());
  std::size_t col = 0;
  for (const auto& [label, values] : merged) {
    paulis.push_back(PauliString::parse(label));
    for (std::size_t a = 0; a < values.size(); ++a) coeffs(a, col) = values[a];
    ++col;
  }
  try {
    return ParameterizedHamiltonian(static_cast<std::size_t>(n), std::move(paulis), std::move(grid), std::move(coeffs));
  } catch (const Error& e) {
    throw ParseError(std::string("hamiltonian: ") + e.what());
  }
}

}  // namespace

ParameterizedHamiltonian parse_hamiltonian(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("hamiltonian: ") + e.what());
  }
  return from_json(doc);
}

ParameterizedHamiltonian load_hamiltonian_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open Hamiltonian file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_hamiltonian(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string dump_hamiltonian(const ParameterizedHamiltonian& h) {
  json doc;
  doc["n"] = h.qubits();
  doc["axes"] = h.grid().axes();
  doc["axis_names"] = h.grid().names();
  json terms = json::array();
  for (std::size_t i = 0; i < h.terms(); ++i) {
    std::vector<double> column(h.grid().size());
    for (std::size_t a = 0; a < column.size(); ++a) column[a] = h.coeff(a, i);
    terms.push_back({{"pauli", h.paulis()[i].str()}, {"coeffs", column}});
  }
  doc["terms"] = std::move(terms);
  return doc.dump(2) + "\n";
}

void save_hamiltonian_file(const ParameterizedHamiltonian& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write Hamiltonian file '" + path.string() + "'");
  out << dump_hamiltonian(h);
}

double energy_from_expectations(const ParameterizedHamiltonian& h, std::size_t point,
                                std::span<const double> expectations) {
  if (expectations.size() != h.terms())
    throw DimensionError("expected " + std::to_string(h.terms()) + " expectation values, got " +
                         std::to_string(expectations.size()));
  if (point >= h.grid().size()) throw InvalidArgument("grid index out of range");
  double energy = 0.0;
  for (std::size_t i = 0; i < expectations.size(); ++i) energy += h.coeff(point, i) * expectations[i];
  return energy;
}

}  // namespace bois
