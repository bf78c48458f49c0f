#include "kramers/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "kramers/errors.hpp"

namespace kramers {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), out_(path), columns_(header.size()) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw LengthMismatchError("CSV row width differs from the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw IoError("failed writing " + path_.string());
}

void write_path_csv(const std::filesystem::path& path, const GridPath& p, bool from_zero) {
  CsvWriter csv(path, {"t", "value"});
  const std::size_t start = from_zero ? p.zero_index() : 0;
  for (std::size_t i = start; i < p.size(); ++i) csv.row({p.time(i), p[i]});
  csv.close();
}

// ---------------------------------------------------------------------------
// Config documents

Json default_config() {
  return Json::parse(R"({
    "measure": {"r": 1.0, "atoms": [[0.0, -1.0], [-1.0, 0.0]], "density": null},
    "noise": {"variant": "alpha_stable", "alpha": 1.5, "beta": 0.0, "c": null,
              "c_minus": 1.0, "c_plus": 1.0, "alpha1": 1.0, "alpha2": 0.5,
              "sigma2": 0.0, "drift": 0.0},
    "diffusion": {"type": "constant", "f0": 1.0, "delays": [], "coefficients": []},
    "sim": {"eps": 0.1, "a": -1.0, "b": 1.0, "dt": 0.001, "t_max": 0.0, "seed": 1,
            "mode": "marginal", "rho": 0.0, "small_jump_cutoff": 0.0, "horizon": 10.0},
    "initial": {"type": "constant", "value": 0.0},
    "experiment": {"replicates": 100, "workers": 0, "eta": 0.0},
    "fundamental": {"horizon": 10.0},
    "stability_region": {"n": 200},
    "scan": {"a_min": -3.0, "a_max": 0.9, "a_points": 40, "b_min": -2.0, "b_max": 2.0,
             "b_points": 41, "tol": 0.0001},
    "gauss": {"a_min": -3.0, "a_max": 0.9, "a_points": 14, "b_min": -3.0, "b_max": 1.0,
              "b_points": 14, "cross_check": true, "a": -1.0, "b": 1.0, "r": 1.0}
  })");
}

void merge_config(Json& base, const Json& overlay, const std::string& where) {
  if (!overlay.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.is_object() || !base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge_config(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  // Build a nested overlay from the dotted key and merge it.
  Json overlay = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    Json wrap = Json::object();
    wrap[*it] = std::move(overlay);
    overlay = std::move(wrap);
  }
  merge_config(config, overlay);
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

namespace {

double num(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("config value '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> num_list(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string("config value '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(std::string("config array '") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

MemoryMeasure measure_from_json(const Json& j) {
  std::vector<Atom> atoms;
  if (!j.at("atoms").is_array()) throw ConfigError("measure.atoms must be a list of [u, w] pairs");
  for (const auto& a : j.at("atoms")) {
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
      throw ConfigError("measure.atoms entries must be [u, w] number pairs");
    }
    atoms.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  std::optional<PiecewiseDensity> density;
  const Json& d = j.at("density");
  if (!d.is_null()) {
    if (!d.is_object() || !d.contains("breakpoints") || !d.contains("values") || d.size() != 2) {
      throw ConfigError("measure.density must be {breakpoints: [...], values: [...]}");
    }
    density = PiecewiseDensity{num_list(d, "breakpoints"), num_list(d, "values")};
  }
  return MemoryMeasure(num(j, "r"), std::move(atoms), std::move(density));
}

Json to_json(const MemoryMeasure& m) {
  Json j;
  j["r"] = m.horizon();
  j["atoms"] = Json::array();
  for (const auto& a : m.atoms()) j["atoms"].push_back({a.delay, a.weight});
  if (m.density()) {
    j["density"] = {{"breakpoints", m.density()->breakpoints}, {"values", m.density()->values}};
  } else {
    j["density"] = nullptr;
  }
  return j;
}

NoiseSpec noise_from_json(const Json& j) {
  const Json& variant = j.at("variant");
  if (!variant.is_string()) throw ConfigError("noise.variant must be a string");
  NoiseSpec s;
  s.variant = parse_noise_variant(variant.get<std::string>());
  s.alpha = num(j, "alpha");
  s.beta = num(j, "beta");
  s.c_minus = num(j, "c_minus");
  s.c_plus = num(j, "c_plus");
  s.alpha1 = num(j, "alpha1");
  s.alpha2 = num(j, "alpha2");
  s.sigma2 = num(j, "sigma2");
  s.drift = num(j, "drift");
  if (s.variant == NoiseVariant::alpha_stable && j.at("c").is_null()) {
    const NoiseSpec st = NoiseSpec::stable_from_levy_density(s.alpha, s.c_minus, s.c_plus);
    s.beta = st.beta;
    s.c = st.c;
  } else if (!j.at("c").is_null()) {
    s.c = num(j, "c");
  }
  s.validate();
  return s;
}

Json to_json(const NoiseSpec& s) {
  return {{"variant", to_string(s.variant)}, {"alpha", s.alpha},   {"beta", s.beta},       {"c", s.c},
          {"c_minus", s.c_minus},            {"c_plus", s.c_plus}, {"alpha1", s.alpha1},   {"alpha2", s.alpha2},
          {"sigma2", s.sigma2},              {"drift", s.drift}};
}

DiffusionCoefficient coefficient_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") return DiffusionCoefficient::constant(num(j, "f0"));
  if (type == "affine") return DiffusionCoefficient::affine(num(j, "f0"), num_list(j, "delays"), num_list(j, "coefficients"));
  throw ConfigError("diffusion.type must be 'constant' or 'affine'");
}

SimParams sim_from_json(const Json& j) {
  SimParams p;
  p.eps = num(j, "eps");
  p.a = num(j, "a");
  p.b = num(j, "b");
  p.dt = num(j, "dt");
  p.t_max = num(j, "t_max");
  if (!j.at("seed").is_number_unsigned()) throw ConfigError("sim.seed must be a nonnegative integer");
  p.seed = j.at("seed").get<std::uint64_t>();
  p.mode = parse_noise_mode(j.at("mode").get<std::string>());
  p.rho = num(j, "rho");
  p.small_cutoff = num(j, "small_jump_cutoff");
  return p;
}

Json prediction_report(const Thresholds& th, const ExitPrediction& p, const LocationMixture& mix,
                       const std::optional<GaussianComparison>& gauss) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j;
  j["e_minus"] = finite_or_null(th.e_minus);
  j["e_plus"] = finite_or_null(th.e_plus);
  j["nu_bar_E"] = p.rate;
  j["lambda_eps"] = p.lambda_eps;
  j["mean_pred"] = p.mean;
  j["Pi"] = {mix.pi_a_jump, mix.pi_a_cont, mix.pi_b_cont, mix.pi_b_jump};
  if (gauss) {
    j["G"] = gauss->g;
    j["branch"] = to_string(gauss->branch);
  } else {
    j["G"] = nullptr;
    j["branch"] = nullptr;
  }
  return j;
}

}  // namespace kramers
