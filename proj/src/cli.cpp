#include "kramers/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "kramers/errors.hpp"
#include "kramers/harness.hpp"

namespace kramers {

namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"fundamental", "scan-domain", "stability-region", "exit-sets",
                                              "predict",     "simulate",    "mc",               "gauss-compare"};
  return names;
}

namespace {

std::string describe(const std::string& name) {
  static const std::map<std::string, std::string> text{
      {"fundamental", "fundamental solution x*, its extremes and decay rate"},
      {"scan-domain", "M and m over a grid of (A~, B~) and the M = 1, m = 0 mask"},
      {"stability-region", "boundary of the stability region of y' = A~ y + B~ y(t - 1)"},
      {"exit-sets", "jump-size thresholds that lead to an exit"},
      {"predict", "limit exit rate, mean exit time and exit-location law"},
      {"simulate", "one noisy path and its first exit"},
      {"mc", "Monte Carlo exit times and locations against the predictions"},
      {"gauss-compare", "Gaussian constant G and the Kramers exponent over a grid"}};
  return text.at(name);
}

}  // namespace

Json resolve_config(const Command& cmd) {
  Json cfg = default_config();
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      cfg["sim"]["seed"] = static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string(kSeedEnv) + " must be a nonnegative integer");
    }
  }
  if (cmd.config_path) merge_config(cfg, load_config_file(*cmd.config_path));
  for (const auto& o : cmd.overrides) apply_override(cfg, o);
  if (cmd.seed) cfg["sim"]["seed"] = *cmd.seed;
  if (cmd.workers) cfg["experiment"]["workers"] = *cmd.workers;

  // Align dt to every memory and coefficient delay.
  const MemoryMeasure mu = measure_from_json(cfg["measure"]);
  std::vector<Atom> atoms(mu.atoms().begin(), mu.atoms().end());
  const DiffusionCoefficient coef = coefficient_from_json(cfg["diffusion"]);
  for (double d : coef.delays()) atoms.push_back({-d, 0.0});
  const MemoryMeasure probe(mu.horizon(), std::move(atoms));
  const double dt = cfg["sim"]["dt"].get<double>();
  cfg["sim"]["dt"] = aligned_step(probe, dt);
  cfg["noise"] = to_json(noise_from_json(cfg["noise"]));
  return cfg;
}

fs::path resolve_out_dir(const Command& cmd) {
  if (cmd.out_dir) return *cmd.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "kramers-out";
}

namespace {

// Files written by one run, removed again if the run fails.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void open() {
    std::error_code ec;
    created_dir_ = !fs::exists(dir_, ec);
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  fs::path file(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  void rollback() noexcept {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_dir_ = false;
};

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Segment initial_segment(const Json& cfg, const MemoryMeasure& mu, double dt) {
  const std::string type = cfg["initial"]["type"].get<std::string>();
  if (type == "constant") return Segment::constant(mu.horizon(), dt, cfg["initial"]["value"].get<double>());
  if (type == "fundamental") return Segment::fundamental(mu.horizon(), dt);
  throw ConfigError("initial.type must be 'constant' or 'fundamental'");
}

std::optional<GaussianComparison> retarded_gauss(const MemoryMeasure& mu) {
  if (!mu.is_retarded()) return std::nullopt;
  const double at = mu.retarded_a() * mu.horizon(), bt = mu.retarded_b() * mu.horizon();
  if (!inside_stability_region(at, bt)) return std::nullopt;
  return gaussian_G(at, bt, false);
}

Json extremes_json(const ExtremesResult& ex) {
  Json j;
  j["M"] = ex.extremes.max_value;
  j["m"] = ex.extremes.min_value;
  j["argmax_time"] = ex.extremes.argmax_time;
  j["min_attained"] = ex.extremes.min_attained;
  j["argmin_time"] = ex.extremes.argmin_time ? Json(*ex.extremes.argmin_time) : Json(nullptr);
  j["truncation_bound"] = ex.extremes.truncation_bound;
  j["abscissa"] = ex.stability.abscissa;
  j["decay_rate"] = *ex.stability.decay_rate;
  j["envelope_constant"] = *ex.stability.envelope_constant;
  return j;
}

ScanGrid scan_grid(const Json& s) {
  ScanGrid g;
  g.a_min = s["a_min"].get<double>();
  g.a_max = s["a_max"].get<double>();
  g.a_points = s["a_points"].get<std::size_t>();
  g.b_min = s["b_min"].get<double>();
  g.b_max = s["b_max"].get<double>();
  g.b_points = s["b_points"].get<std::size_t>();
  return g;
}

void run_command(const std::string& name, const Json& cfg, Outputs& outs, std::ostream& out) {
  const MemoryMeasure mu = measure_from_json(cfg["measure"]);
  const NoiseSpec noise = noise_from_json(cfg["noise"]);
  const DiffusionCoefficient coef = coefficient_from_json(cfg["diffusion"]);
  const SimParams sim = sim_from_json(cfg["sim"]);
  const double dt = sim.dt;

  if (name == "fundamental") {
    const GridPath xs = fundamental_solution(mu, cfg["fundamental"]["horizon"].get<double>(), dt);
    write_path_csv(outs.file("fundamental.csv"), xs);
    const StabilityReport rep = spectral_abscissa(mu, dt);
    Json j{{"abscissa", rep.abscissa}, {"stable", rep.stable}, {"fit_estimate", rep.fit_estimate}};
    if (rep.root_estimate) j["root_estimate"] = *rep.root_estimate;
    if (rep.stable) j["extremes"] = extremes_json(compute_extremes(mu, dt));
    write_json(outs.file("fundamental.json"), j);
    out << "wrote " << (outs.dir() / "fundamental.csv").string() << '\n';
  } else if (name == "stability-region") {
    const StabilityBoundary sb = stability_boundary(cfg["stability_region"]["n"].get<std::size_t>());
    CsvWriter lower(outs.file("boundary.csv"), {"a_tilde", "b_tilde"});
    for (const auto& p : sb.lower) lower.row({p.a_tilde, p.b_tilde});
    lower.close();
    CsvWriter upper(outs.file("upper_line.csv"), {"a_tilde", "b_tilde"});
    upper.row({sb.upper_start.a_tilde, sb.upper_start.b_tilde});
    upper.row({sb.upper_start.a_tilde + 10.0 * sb.upper_direction.a_tilde,
               sb.upper_start.b_tilde + 10.0 * sb.upper_direction.b_tilde});
    upper.close();
    out << "wrote " << sb.lower.size() << " boundary points\n";
  } else if (name == "scan-domain") {
    const auto cells = scan_trivial_domain(scan_grid(cfg["scan"]), dt, cfg["experiment"]["workers"].get<std::size_t>(),
                                           cfg["scan"]["tol"].get<double>());
    CsvWriter csv(outs.file("scan.csv"), {"a_tilde", "b_tilde", "valid", "M", "m", "trivial"});
    std::size_t trivial = 0;
    for (const auto& c : cells) {
      csv.row({format_double(c.a_tilde), format_double(c.b_tilde), c.valid ? "1" : "0",
               c.valid ? format_double(c.max_value) : "nan", c.valid ? format_double(c.min_value) : "nan",
               c.trivial ? "1" : "0"});
      trivial += c.trivial;
    }
    csv.close();
    out << "scanned " << cells.size() << " points, " << trivial << " with M = 1 and m = 0\n";
  } else if (name == "exit-sets" || name == "predict") {
    const ExtremesResult ex = compute_extremes(mu, dt);
    const ExitSets sets = ExitSets::from(ex, coef.base(), sim.a, sim.b);
    if (name == "exit-sets") {
      Json j = extremes_json(ex);
      auto fin = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
      j["e_minus"] = fin(sets.e_minus());
      j["e_plus"] = fin(sets.e_plus());
      j["F0"] = coef.base();
      j["a"] = sim.a;
      j["b"] = sim.b;
      write_json(outs.file("exit_sets.json"), j);
      out << j.dump(2) << '\n';
    } else {
      const ExitPrediction p = exit_rate(noise, sets, sim.eps);
      const LocationMixture mix = location_mixture(noise, sets);
      Json j = prediction_report({sets.e_minus(), sets.e_plus()}, p, mix, retarded_gauss(mu));
      write_json(outs.file("prediction.json"), j);
      out << j.dump(2) << '\n';
    }
  } else if (name == "simulate") {
    Rng rng(sim.seed);
    const Segment init = initial_segment(cfg, mu, dt);
    SimParams capped = sim;
    if (capped.t_max <= 0.0) capped.t_max = cfg["sim"]["horizon"].get<double>();
    std::vector<double> inc;
    const GridPath path = simulate_path(mu, coef, noise, capped, init, cfg["sim"]["horizon"].get<double>(), rng, &inc);
    write_path_csv(outs.file("path.csv"), path);
    const ExitRecord rec = first_exit(mu, coef, noise, capped, init);
    Json j{{"seed", sim.seed},           {"tau", rec.tau},       {"location", rec.location},
           {"taxonomy", to_string(rec.taxonomy)}, {"censored", rec.censored}};
    write_json(outs.file("simulate.json"), j);
    out << "wrote " << path.size() << " samples; first exit " << j.dump() << '\n';
  } else if (name == "mc") {
    ExperimentConfig ec;
    ec.measure = mu;
    ec.noise = noise;
    ec.coefficient = coef;
    ec.sim = sim;
    const Segment init = initial_segment(cfg, mu, dt);
    if (cfg["initial"]["type"].get<std::string>() != "constant") throw ConfigError("mc needs a constant initial segment");
    ec.initial_value = init.at_zero();
    ec.replicates = cfg["experiment"]["replicates"].get<std::size_t>();
    ec.workers = cfg["experiment"]["workers"].get<std::size_t>();
    ec.eta = cfg["experiment"]["eta"].get<double>();
    ec.out_dir = outs.dir();
    outs.file("records.csv");
    outs.file("summary.csv");
    outs.file("plot.gp");
    const ExperimentResult res = run_experiment(ec);
    const SummaryStats& s = res.summary;
    out << "mean tau " << s.mean_tau << " +- " << s.stderr_tau << ", predicted " << s.predicted_mean << ", ratio "
        << s.ratio << ", KS " << s.ks << ", censored " << s.censored << '\n';
  } else if (name == "gauss-compare") {
    const Json& g = cfg["gauss"];
    const ScanGrid grid = scan_grid(g);
    const bool cross = g["cross_check"].get<bool>();
    CsvWriter csv(outs.file("gauss.csv"), {"a_tilde", "b_tilde", "branch", "G", "time_integral",
                                           "frequency_integral", "kramers_exponent"});
    std::size_t rows = 0;
    for (std::size_t j = 0; j < grid.b_points; ++j) {
      for (std::size_t i = 0; i < grid.a_points; ++i) {
        auto coord = [](double lo, double hi, std::size_t n, std::size_t k) {
          return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        };
        const double at = coord(grid.a_min, grid.a_max, grid.a_points, i);
        const double bt = coord(grid.b_min, grid.b_max, grid.b_points, j);
        if (!inside_stability_region(at, bt)) continue;
        const GaussianComparison gc = gaussian_G(at, bt, cross, dt);
        const double h = std::min(-g["a"].get<double>(), g["b"].get<double>());
        const double exponent = h * h / (g["r"].get<double>() * gc.g);
        csv.row({format_double(at), format_double(bt), to_string(gc.branch), format_double(gc.g),
                 gc.time_integral ? format_double(*gc.time_integral) : "nan",
                 gc.frequency_integral ? format_double(*gc.frequency_integral) : "nan", format_double(exponent)});
        ++rows;
      }
    }
    csv.close();
    out << "wrote " << rows << " stable grid points\n";
  } else {
    throw ConfigError("unknown subcommand '" + name + "'");
  }
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << Json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int dispatch(const Command& cmd, std::ostream& out, std::ostream& err) {
  Outputs outs(resolve_out_dir(cmd));
  try {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), cmd.subcommand) == names.end()) {
      throw ConfigError("unknown subcommand '" + cmd.subcommand + "'");
    }
    const Json cfg = resolve_config(cmd);
    outs.open();
    write_json(outs.file("manifest.json"), Json{{"command", cmd.subcommand}, {"config", cfg}});
    run_command(cmd.subcommand, cfg, outs, out);
    return 0;
  } catch (const Error& e) {
    outs.rollback();
    report_error(err, e.kind(), e.what());
    return e.kind() == "config" ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    outs.rollback();
    report_error(err, "config", e.what());
    return 2;
  } catch (const std::exception& e) {
    outs.rollback();
    report_error(err, "internal", e.what());
    return 1;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exit problems of linear delay equations driven by heavy-tailed noise", "kramers"};
  app.require_subcommand(1);
  Command cmd;
  std::string config, out_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--out", out_dir, "output directory (default $KRAMERS_OUT_DIR or ./kramers-out)");
    sub->add_option("--set", cmd.overrides, "override a config value, key=value (repeatable)");
    sub->add_option("--seed", seed, "master seed (default $KRAMERS_SEED or the config)");
    sub->add_option("--workers", workers, "worker threads for mc and scan-domain (0 = all cores)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    report_error(err, "usage", e.what());
    return 2;
  }
  for (auto* sub : app.get_subcommands()) {
    cmd.subcommand = sub->get_name();
    if (sub->count("--config")) cmd.config_path = config;
    if (sub->count("--out")) cmd.out_dir = out_dir;
    if (sub->count("--seed")) cmd.seed = seed;
    if (sub->count("--workers")) cmd.workers = workers;
  }
  return dispatch(cmd, out, err);
}

}  // namespace kramers
