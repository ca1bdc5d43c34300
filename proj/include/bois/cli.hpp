#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bois/ansatz_builder.hpp"
#include "bois/orchestrator.hpp"
#include "bois/pauli.hpp"

namespace bois::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitConfigError = 2;

/// How the Hamiltonian family is obtained.
struct HamiltonianSource {
  std::optional<std::filesystem::path> file;
  // Spin chain generator.
  std::size_t spin_n = 0;
  FieldMode field_mode = FieldMode::Shared;
};

struct BuilderSection {
  /// Target coordinates (spin-chain sources) or a one-point Hamiltonian file.
  std::vector<double> target_point;
  std::optional<std::filesystem::path> target_hamiltonian;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::string rotations = "auto";
  BuilderOptions options;
  double const_tol = 0.02;
  bool fix_constant = true;
};

/// Parsed experiment document. Relative paths are resolved against the
/// directory of the config file.
struct ExperimentConfig {
  std::filesystem::path source;
  HamiltonianSource hamiltonian_source;
  std::shared_ptr<const ParameterizedHamiltonian> hamiltonian;
  std::optional<std::filesystem::path> ansatz_path;
  RunConfig run;  ///< ansatz left empty until a command loads it
  bool exact_backend = true;
  std::size_t repetitions = 20;
  std::vector<SharingTopology> strategies;
  std::filesystem::path output_dir = "out";
  std::optional<BuilderSection> builder;
};

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir);
/// Throws ConfigError (with the path and parser position) on failure.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Each command writes its data files into config.output_dir and a short
/// human-readable report to `log`. Return value is the process exit code.
int cmd_build_ansatz(const ExperimentConfig& config, std::ostream& log);
int cmd_run(const ExperimentConfig& config, std::ostream& log);
int cmd_compare(const ExperimentConfig& config, std::ostream& log);
int cmd_exact(const ExperimentConfig& config, std::ostream& log);

/// "%.12g"
std::string format_float(double v);

/// Full argument handling for the bois_cli executable.
int main(int argc, char** argv);

}  // namespace bois::cli
