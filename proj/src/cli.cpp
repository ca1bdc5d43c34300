#include "bois/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bois/error.hpp"
#include "bois/exact.hpp"

namespace bois::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<double> parse_axis(const json& axis, const std::string& where) {
  if (axis.is_array()) return axis.get<std::vector<double>>();
  if (axis.is_object()) {
    const double start = axis.at("start").get<double>();
    const double stop = axis.at("stop").get<double>();
    const auto count = axis.at("count").get<std::size_t>();
    return PhysicalGrid::linspace(start, stop, count).axes()[0];
  }
  throw ConfigError(where + " must be a list or {start, stop, count}");
}

SharingTopology parse_topology(const std::string& name, std::size_t extra) {
  SharingTopology t;
  t.variant = parse_strategy(name);
  if (t.variant == Strategy::IndependentPlusRandom) t.extra = extra;
  return t;
}

std::shared_ptr<const ParameterizedHamiltonian> load_hamiltonian(const json& section, const fs::path& base,
                                                                 HamiltonianSource& source) {
  if (section.contains("file")) {
    source.file = resolve(base, section.at("file").get<std::string>());
    return std::make_shared<const ParameterizedHamiltonian>(load_hamiltonian_file(*source.file));
  }
  if (section.contains("spin_chain")) {
    const auto& sc = section.at("spin_chain");
    source.spin_n = sc.at("n").get<std::size_t>();
    if (sc.contains("h")) {
      source.field_mode = FieldMode::Shared;
      PhysicalGrid grid({parse_axis(sc.at("h"), "spin_chain.h")}, {"h"});
      return std::make_shared<const ParameterizedHamiltonian>(build_spin_chain(source.spin_n, grid, FieldMode::Shared));
    }
    source.field_mode = FieldMode::Separate;
    PhysicalGrid grid({parse_axis(sc.at("h_x"), "spin_chain.h_x"), parse_axis(sc.at("h_z"), "spin_chain.h_z")},
                      {"h_x", "h_z"});
    return std::make_shared<const ParameterizedHamiltonian>(build_spin_chain(source.spin_n, grid, FieldMode::Separate));
  }
  throw ConfigError("hamiltonian section needs 'file' or 'spin_chain'");
}

ExperimentConfig from_json(const json& doc, const fs::path& base) {
  if (!doc.is_object()) throw ConfigError("config must be an object");
  ExperimentConfig cfg;
  if (!doc.contains("hamiltonian")) throw ConfigError("config needs a 'hamiltonian' section");
  cfg.hamiltonian = load_hamiltonian(doc.at("hamiltonian"), base, cfg.hamiltonian_source);
  cfg.run.hamiltonian = cfg.hamiltonian;
  if (doc.contains("ansatz")) cfg.ansatz_path = resolve(base, doc.at("ansatz").get<std::string>());

  const auto backend = doc.value("backend", std::string("exact"));
  if (backend != "exact" && backend != "shots") throw ConfigError("backend must be 'exact' or 'shots'");
  cfg.exact_backend = backend == "exact";

  auto& run = cfg.run;
  const auto extra = doc.value("extra", std::size_t{2});
  run.topology = parse_topology(doc.value("strategy", std::string("nearest_neighbour")), extra);
  run.initial_points = doc.value("initial_points", std::size_t{10});
  run.iterations = doc.value("iterations", std::size_t{30});
  run.kappa0 = doc.value("kappa0", 2.0);
  const auto shots_opt = doc.value("shots_opt", std::size_t{1024});
  const auto shots_final = doc.value("shots_final", std::size_t{8192});
  run.shots_opt = cfg.exact_backend ? std::nullopt : std::optional<std::size_t>(shots_opt);
  run.shots_final = cfg.exact_backend ? std::nullopt : std::optional<std::size_t>(shots_final);
  run.seed = doc.value("seed", std::uint64_t{1});
  run.workers = doc.value("workers", std::size_t{1});
  if (doc.contains("gp_noise") && doc.at("gp_noise").is_string()) {
    if (doc.at("gp_noise").get<std::string>() != "fit") throw ConfigError("gp_noise must be a number or \"fit\"");
    run.fixed_noise = std::nullopt;
  } else if (doc.contains("gp_noise")) {
    run.fixed_noise = doc.at("gp_noise").get<double>();
  } else {
    run.fixed_noise = cfg.exact_backend ? std::optional<double>(1e-8) : std::nullopt;
  }
  if (doc.contains("acquisition")) {
    const auto& acq = doc.at("acquisition");
    run.candidates = acq.value("candidates", run.candidates);
    run.refine_starts = acq.value("refine_starts", run.refine_starts);
    run.refine_evaluations = acq.value("refine_evaluations", run.refine_evaluations);
    run.refine_step = acq.value("refine_step", run.refine_step);
  }
  cfg.repetitions = doc.value("repetitions", std::size_t{20});
  if (doc.contains("strategies")) {
    for (const auto& s : doc.at("strategies")) cfg.strategies.push_back(parse_topology(s.get<std::string>(), extra));
  } else {
    for (auto name : {"independent", "independent_plus_random", "nearest_neighbour", "all_to_all"})
      cfg.strategies.push_back(parse_topology(name, extra));
  }
  if (doc.contains("output_dir")) cfg.output_dir = resolve(base, doc.at("output_dir").get<std::string>());
  else cfg.output_dir = base / "out";

  if (doc.contains("builder")) {
    const auto& b = doc.at("builder");
    BuilderSection section;
    if (b.contains("target")) section.target_point = b.at("target").get<std::vector<double>>();
    if (b.contains("target_hamiltonian"))
      section.target_hamiltonian = resolve(base, b.at("target_hamiltonian").get<std::string>());
    if (b.contains("edges")) {
      for (const auto& e : b.at("edges")) {
        const auto pair = e.get<std::vector<std::size_t>>();
        if (pair.size() != 2) throw ConfigError("builder edge must have two endpoints");
        section.edges.emplace_back(pair[0], pair[1]);
      }
    }
    section.rotations = b.value("rotations", std::string("auto"));
    if (section.rotations != "auto" && section.rotations != "ry" && section.rotations != "zyz")
      throw ConfigError("builder.rotations must be auto, ry or zyz");
    auto& o = section.options;
    o.threshold = b.value("threshold", o.threshold);
    o.max_blocks = b.value("max_blocks", o.max_blocks);
    o.restarts = b.value("restarts", o.restarts);
    o.steps = b.value("steps", o.steps);
    if (b.contains("eta_schedule")) o.eta_schedule = b.at("eta_schedule").get<std::vector<double>>();
    o.removal_tol = b.value("removal_tol", o.removal_tol);
    section.const_tol = b.value("const_tol", section.const_tol);
    section.fix_constant = b.value("fix_constant", section.fix_constant);
    cfg.builder = std::move(section);
  }
  return cfg;
}

// ---------------------------------------------------------------------------

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::string coordinate_header(const PhysicalGrid& grid) {
  std::string s;
  for (const auto& name : grid.names()) s += "," + name;
  return s;
}

std::string coordinate_cells(const PhysicalGrid& grid, std::size_t point) {
  std::string s;
  for (double x : grid.point(point)) s += "," + format_float(x);
  return s;
}

AnsatzCircuit load_ansatz(const ExperimentConfig& config) {
  if (!config.ansatz_path) throw ConfigError("config has no 'ansatz' path");
  return load_ansatz_file(*config.ansatz_path);
}

RunConfig with_ansatz(const ExperimentConfig& config) {
  RunConfig run = config.run;
  run.ansatz = load_ansatz(config);
  return run;
}

json params_json(const KernelParams& p) {
  return {{"signal_variance", p.signal_variance}, {"lengthscale", p.lengthscale}, {"noise_variance", p.noise_variance}};
}

void write_summary_row(std::ostream& out, const Summary& s) {
  out << s.count << ',' << format_float(s.mean) << ',' << format_float(s.median) << ',' << format_float(s.q10) << ','
      << format_float(s.q25) << ',' << format_float(s.q75) << ',' << format_float(s.q90) << ',' << format_float(s.min)
      << ',' << format_float(s.max);
}

constexpr const char* kSummaryHeader = "count,mean,median,q10,q25,q75,q90,min,max";

bool same_point(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > 1e-12) return false;
  return true;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  try {
    return from_json(doc, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    auto cfg = parse_experiment_config(buffer.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
    cfg.source = path;
    return cfg;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

int cmd_build_ansatz(const ExperimentConfig& config, std::ostream& log) {
  if (!config.builder) throw ConfigError("config has no 'builder' section");
  const auto& section = *config.builder;
  const auto& h = *config.hamiltonian;

  std::shared_ptr<const ParameterizedHamiltonian> target_h;
  if (section.target_hamiltonian) {
    target_h = std::make_shared<const ParameterizedHamiltonian>(load_hamiltonian_file(*section.target_hamiltonian));
    if (target_h->grid().size() != 1) throw ConfigError("target Hamiltonian file must have exactly one grid point");
  } else if (config.hamiltonian_source.spin_n > 0) {
    if (section.target_point.size() != h.grid().dims())
      throw ConfigError("builder.target needs " + std::to_string(h.grid().dims()) + " coordinates");
    std::vector<std::vector<double>> axes;
    for (double x : section.target_point) axes.push_back({x});
    target_h = std::make_shared<const ParameterizedHamiltonian>(
        build_spin_chain(config.hamiltonian_source.spin_n, PhysicalGrid(axes, h.grid().names()),
                         config.hamiltonian_source.field_mode));
  } else {
    throw ConfigError("builder needs 'target' (spin chain) or 'target_hamiltonian'");
  }
  if (target_h->qubits() != h.qubits()) throw ConfigError("target Hamiltonian qubit count differs");
  const auto target_x = target_h->grid().point(0);
  for (std::size_t a = 0; a < h.grid().size(); ++a)
    if (same_point(h.grid().point(a), target_x))
      throw ConfigError("builder target coincides with optimizer grid point " + std::to_string(a));

  const auto target = ground_state(dense_matrix(*target_h, 0)).state;
  BuilderOptions options = section.options;
  options.seed = config.run.seed;
  options.workers = config.run.workers;
  if (section.rotations == "auto") {
    bool real = true;
    for (const auto& a : target.amplitudes()) real = real && std::abs(a.imag()) < 1e-12;
    options.rotations = real ? RotationSet::RY : RotationSet::ZYZ;
  } else {
    options.rotations = section.rotations == "ry" ? RotationSet::RY : RotationSet::ZYZ;
  }
  const auto graph = section.edges.empty() ? ConnectivityGraph::line(h.qubits())
                                           : ConnectivityGraph(h.qubits(), section.edges);

  const fs::path out_path = config.ansatz_path.value_or(config.output_dir / "ansatz.json");
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());

  auto grown = grow(target, graph, options);
  log << "growth: blocks=" << grown.blocks << " infidelity=" << format_float(grown.infidelity)
      << " converged=" << (grown.converged ? "yes" : "no") << "\n";
  if (!grown.converged) {
    save_ansatz_file(grown.circuit, out_path);
    log << "ansatz (not converged) written to " << out_path.string() << "\n";
    return kExitNotConverged;
  }

  auto shrunk = shrink(grown.circuit, grown.theta, target, options);
  log << "shrinkage: removed=" << shrunk.removed << " infidelity=" << format_float(shrunk.infidelity) << "\n";

  AnsatzCircuit final_circuit = shrunk.circuit;
  if (section.fix_constant) {
    std::vector<QuantumState> targets;
    for (std::size_t a = 0; a < h.grid().size(); ++a) {
      auto gs = ground_state(dense_matrix(h, a));
      if (gs.gap > 1e-8) targets.push_back(std::move(gs.state));
    }
    const auto optima = optima_per_target(shrunk.circuit, shrunk.theta, targets, options);
    final_circuit = fix_constant_angles(shrunk.circuit, optima, section.const_tol).circuit;
  }
  save_ansatz_file(final_circuit, out_path);
  log << "layout:";
  for (auto p : grown.layout) log << ' ' << p;
  log << "\nblocks=" << final_circuit.entangler_count() << " parameters=" << final_circuit.parameters()
      << " infidelity=" << format_float(shrunk.infidelity) << "\n";
  log << "ansatz written to " << out_path.string() << "\n";
  return kExitOk;
}

int cmd_run(const ExperimentConfig& config, std::ostream& log) {
  const auto run_config = with_ansatz(config);
  const auto& h = *config.hamiltonian;
  const auto result = run_bois(run_config);
  ensure_dir(config.output_dir);

  std::vector<double> exact(h.grid().size(), std::nan(""));
  if (h.qubits() <= kMaxDenseQubits) exact = exact_ground_energies(h);

  {
    auto out = open_out(config.output_dir / "points.csv");
    out << "point" << coordinate_header(h.grid()) << ",E_star,E_exact,error\n";
    for (std::size_t a = 0; a < result.points.size(); ++a) {
      const auto& p = result.points[a];
      out << a << coordinate_cells(h.grid(), a) << ',' << format_float(p.energy) << ',' << format_float(exact[a]) << ','
          << format_float(p.energy - exact[a]) << '\n';
    }
  }
  {
    auto out = open_out(config.output_dir / "traces.csv");
    out << "point,iteration,best\n";
    for (std::size_t a = 0; a < result.points.size(); ++a)
      for (std::size_t t = 0; t < result.points[a].trace.size(); ++t)
        out << a << ',' << t << ',' << format_float(result.points[a].trace[t]) << '\n';
  }
  {
    json doc;
    doc["strategy"] = strategy_name(run_config.topology.variant);
    doc["extra"] = run_config.topology.extra;
    doc["seed"] = run_config.seed;
    doc["initial_points"] = run_config.initial_points;
    doc["iterations"] = run_config.iterations;
    doc["kappa0"] = run_config.kappa0;
    doc["backend"] = run_config.shots_opt ? "shots" : "exact";
    doc["ledger"] = {{"initial_evaluations", result.initial_evaluations},
                     {"total_evaluations", result.total_evaluations},
                     {"final_evaluations", result.final_evaluations}};
    json points = json::array();
    for (std::size_t a = 0; a < result.points.size(); ++a) {
      const auto& p = result.points[a];
      points.push_back({{"coordinates", p.coordinates},
                        {"energy", p.energy},
                        {"exact", exact[a]},
                        {"best_observed", p.best_observed},
                        {"theta", p.theta},
                        {"trace", p.trace},
                        {"evaluations_seen", p.evaluations_seen},
                        {"hyperparameters", params_json(p.hyperparameters)},
                        {"refits", p.refits}});
    }
    doc["points"] = std::move(points);
    json records = json::array();
    for (const auto& r : result.ledger) {
      records.push_back({{"kind", record_kind_name(r.kind)},
                         {"origin", r.origin},
                         {"iteration", r.iteration},
                         {"shared", r.shared},
                         {"theta", r.theta},
                         {"expectations", r.expectations.values},
                         {"shots", r.expectations.shots ? json(*r.expectations.shots) : json(nullptr)}});
    }
    doc["records"] = std::move(records);
    auto out = open_out(config.output_dir / "results.json");
    out << doc.dump(2) << '\n';
  }
  log << "ledger: total theta evaluations = " << result.total_evaluations << " (initial " << result.initial_evaluations
      << ", final re-evaluations " << result.final_evaluations << ")\n";
  log << "results written to " << config.output_dir.string() << "\n";
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& config, std::ostream& log) {
  if (!config.exact_backend) throw ConfigError("compare needs the exact backend");
  const auto run_config = with_ansatz(config);
  const auto& grid = config.hamiltonian->grid();
  const auto result = compare_strategies(run_config, config.strategies, config.repetitions);
  ensure_dir(config.output_dir);

  auto raw = open_out(config.output_dir / "compare_raw.csv");
  raw << "strategy,repetition,point" << coordinate_header(grid) << ",error\n";
  auto summary = open_out(config.output_dir / "compare_summary.csv");
  summary << "strategy," << kSummaryHeader << '\n';
  for (const auto& sc : result.strategies) {
    const std::string name(strategy_name(sc.topology.variant));
    for (std::size_t r = 0; r < sc.errors.size(); ++r)
      for (std::size_t a = 0; a < sc.errors[r].size(); ++a)
        raw << name << ',' << r << ',' << a << coordinate_cells(grid, a) << ',' << format_float(sc.errors[r][a]) << '\n';
    auto table = open_out(config.output_dir / ("compare_" + name + ".csv"));
    table << "point" << coordinate_header(grid) << ",E_exact," << kSummaryHeader << '\n';
    for (std::size_t a = 0; a < sc.per_point.size(); ++a) {
      table << a << coordinate_cells(grid, a) << ',' << format_float(result.exact_energies[a]) << ',';
      write_summary_row(table, sc.per_point[a]);
      table << '\n';
    }
    summary << name << ',';
    write_summary_row(summary, sc.aggregate);
    summary << '\n';
    log << name << ": mean error " << format_float(sc.aggregate.mean) << ", median " << format_float(sc.aggregate.median)
        << " over " << sc.aggregate.count << " samples\n";
  }
  return kExitOk;
}

int cmd_exact(const ExperimentConfig& config, std::ostream& log) {
  const auto& h = *config.hamiltonian;
  if (h.qubits() > kMaxDenseQubits) throw SizeError("exact reference limited to 12 qubits");
  const auto energies = exact_ground_energies(h);
  ensure_dir(config.output_dir);
  auto out = open_out(config.output_dir / "exact.csv");
  out << "point" << coordinate_header(h.grid()) << ",E_exact\n";
  for (std::size_t a = 0; a < energies.size(); ++a)
    out << a << coordinate_cells(h.grid(), a) << ',' << format_float(energies[a]) << '\n';
  log << "exact energies for " << energies.size() << " grid points written to "
      << (config.output_dir / "exact.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimisation with information sharing for families of VQE problems"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;

  std::vector<std::pair<std::string, int (*)(const ExperimentConfig&, std::ostream&)>> commands{
      {"build-ansatz", &cmd_build_ansatz}, {"run", &cmd_run}, {"compare", &cmd_compare}, {"exact", &cmd_exact}};
  const std::vector<std::string> help{"Grow and shrink an ansatz for the builder target",
                                      "Run one BOIS experiment", "Compare sharing strategies against exact energies",
                                      "Tabulate exact ground-state energies"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the master seed");
    sub->add_option("--workers", workers, "Worker threads (results do not depend on it)");
    sub->add_option("--out", out_dir, "Output directory");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    auto config = load_experiment_config(config_path);
    if (seed) config.run.seed = *seed;
    if (workers) config.run.workers = *workers;
    if (out_dir) config.output_dir = *out_dir;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].second(config, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace bois::cli
