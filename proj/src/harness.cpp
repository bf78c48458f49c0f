#include "kramers/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "kramers/errors.hpp"
#include "kramers/io.hpp"
#include "kramers/parallel.hpp"

namespace kramers {

double ExperimentConfig::drift_scale() const {
  return measure.total_variation() * std::max(-sim.a, sim.b);
}

double ExperimentConfig::default_eta() const {
  return std::max(5.0 * sim.dt * drift_scale(), 0.01 * (sim.b - sim.a));
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw EmptyInputError("KS statistic of an empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

double ks_statistic(std::span<const double> samples, double rate) {
  if (!(rate > 0.0)) throw ConfigError("KS rate must be positive");
  return ks_statistic(samples, [rate](double u) { return u <= 0.0 ? 0.0 : -std::expm1(-rate * u); });
}

double ks_pvalue(double statistic, std::size_t n) {
  if (n == 0) throw EmptyInputError("KS p-value needs n >= 1");
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Locations

LocationComparison summarize_locations(std::span<const ExitRecord> records, double a, double b, double eta,
                                       const LocationMixture& mixture) {
  LocationComparison out;
  std::vector<double> up, down;
  std::size_t near_a = 0, near_b = 0;
  for (const auto& r : records) {
    if (r.censored) continue;
    ++out.exits;
    const double x = r.location;
    if (x > b + eta) {
      up.push_back(x);
    } else if (x >= b) {
      ++near_b;
    } else if (x < a - eta) {
      down.push_back(x);
    } else {
      ++near_a;
    }
  }
  if (out.exits == 0) throw EmptyInputError("every replicate was censored");
  const double n = static_cast<double>(out.exits);
  auto frac = [&](std::size_t k, double& f, double& se) {
    f = static_cast<double>(k) / n;
    se = std::sqrt(f * (1.0 - f) / n);
  };
  frac(near_a, out.near_a, out.near_a_se);
  frac(near_b, out.near_b, out.near_b_se);
  frac(down.size(), out.far_down, out.far_down_se);
  frac(up.size(), out.far_up, out.far_up_se);

  // Beyond the window the limit law is the power density conditioned on X > b + eta.
  const double up0 = b + eta, down0 = a - eta;
  if (!up.empty()) {
    const double s0 = 1.0 - mixture.cdf_up(up0);
    out.ks_up = ks_statistic(up, [&](double x) { return (mixture.cdf_up(x) - mixture.cdf_up(up0)) / s0; });
    out.ks_up_pvalue = ks_pvalue(*out.ks_up, up.size());
  }
  if (!down.empty()) {
    const double s0 = 1.0 - mixture.cdf_down(down0);
    // Mirror so the CDF is increasing in -x.
    std::vector<double> mirrored(down.size());
    std::transform(down.begin(), down.end(), mirrored.begin(), [](double x) { return -x; });
    out.ks_down = ks_statistic(mirrored, [&](double y) { return (mixture.cdf_down(-y) - mixture.cdf_down(down0)) / s0; });
    out.ks_down_pvalue = ks_pvalue(*out.ks_down, down.size());
  }

  constexpr int kBins = 12;
  const double lo = up0 / b, hi = 100.0;
  if (hi > lo) {
    out.hist_edges.resize(kBins + 1);
    for (int i = 0; i <= kBins; ++i) out.hist_edges[i] = b * lo * std::pow(hi / lo, static_cast<double>(i) / kBins);
    out.hist_empirical.assign(kBins, 0.0);
    out.hist_predicted.assign(kBins, 0.0);
    for (double x : up) {
      const auto it = std::upper_bound(out.hist_edges.begin(), out.hist_edges.end(), x);
      if (it == out.hist_edges.begin() || it == out.hist_edges.end()) continue;
      out.hist_empirical[static_cast<std::size_t>(it - out.hist_edges.begin()) - 1] += 1.0 / n;
    }
    const double jump_share = mixture.pi_b_jump;
    for (int i = 0; i < kBins; ++i) {
      out.hist_predicted[i] = jump_share * (mixture.cdf_up(out.hist_edges[i + 1]) - mixture.cdf_up(out.hist_edges[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.replicates < 1) throw ConfigError("replicate count must be at least 1");
  config.sim.validate(true);
  config.noise.validate();
  config.coefficient.validate(config.measure.horizon());
  const double eta = config.eta > 0.0 ? config.eta : config.default_eta();
  if (eta < 2.0 * config.sim.dt * config.drift_scale()) {
    throw ConfigError("eta must be at least 2 dt |mu| max(|a|, b) so growth exits land inside the window");
  }
  if (!(config.sim.eps > 0.0)) throw ConfigError("Monte Carlo experiments need eps > 0");

  const double f0 = config.coefficient.base();
  const ExtremesResult ext = compute_extremes(config.measure, config.sim.dt);
  const ExitSets sets = ExitSets::from(ext, f0, config.sim.a, config.sim.b);
  const ExitPrediction prediction = exit_rate(config.noise, sets, config.sim.eps);
  const LocationMixture mixture = location_mixture(config.noise, sets);

  SimParams sim = config.sim;
  if (sim.rho <= 0.0) {
    const double e = std::min(std::fabs(sets.e_minus()), sets.e_plus());
    sim.rho = std::max(1.5, 0.5 * e / (sim.eps * std::fabs(f0)));
  }
  if (sim.t_max <= 0.0) sim.t_max = 50.0 * prediction.mean;

  const Segment initial = Segment::constant(config.measure.horizon(), sim.dt, config.initial_value);
  std::shared_ptr<const JumpDecomposition> shared;
  if (sim.mode == NoiseMode::decomposition) shared = make_decomposition(config.noise, sim, f0);

  ExperimentResult result;
  result.records.resize(config.replicates);
  parallel_for(config.replicates, config.workers, [&](std::size_t i) {
    SimParams p = sim;
    p.seed = replicate_seed(config.sim.seed, i);
    auto source = make_source(config.noise, p, f0, Rng(p.seed), shared);
    ExitRecord rec = first_exit(config.measure, config.coefficient, p, initial, *source);
    rec.replicate = i;
    result.records[i] = rec;
  });

  SummaryStats& s = result.summary;
  s.replicates = config.replicates;
  s.eta = eta;
  s.rho = sim.rho;
  s.t_max = sim.t_max;
  s.max_value = ext.extremes.max_value;
  s.min_value = ext.extremes.min_value;
  s.thresholds = {sets.e_minus(), sets.e_plus()};
  s.prediction = prediction;
  s.mixture = mixture;
  s.predicted_mean = prediction.mean;

  std::vector<double> taus, scaled;
  std::size_t near_a = 0, near_b = 0, far_down = 0, far_up = 0;
  for (const auto& r : result.records) {
    if (r.censored) {
      ++s.censored;
      continue;
    }
    (r.taxonomy == Taxonomy::jump_exit ? s.jump_exits : s.growth_exits)++;
    taus.push_back(r.tau);
    scaled.push_back(prediction.lambda_eps * r.tau);
    if (r.location > sim.b + eta) {
      ++far_up;
    } else if (r.location >= sim.b) {
      ++near_b;
    } else if (r.location < sim.a - eta) {
      ++far_down;
    } else {
      ++near_a;
    }
  }
  const double n_all = static_cast<double>(s.replicates);
  s.frac_near_a = static_cast<double>(near_a) / n_all;
  s.frac_near_b = static_cast<double>(near_b) / n_all;
  s.frac_far_down = static_cast<double>(far_down) / n_all;
  s.frac_far_up = static_cast<double>(far_up) / n_all;
  s.censored_fraction = static_cast<double>(s.censored) / n_all;
  if (!taus.empty()) {
    const double n = static_cast<double>(taus.size());
    s.mean_tau = std::accumulate(taus.begin(), taus.end(), 0.0) / n;
    double ss = 0.0;
    for (double t : taus) ss += (t - s.mean_tau) * (t - s.mean_tau);
    s.stderr_tau = taus.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    s.ratio = s.mean_tau / s.predicted_mean;
    s.ks = ks_statistic(scaled, prediction.rate);
    s.ks_pvalue = ks_pvalue(s.ks, scaled.size());
    s.locations = summarize_locations(result.records, sim.a, sim.b, eta, mixture);
  }

  if (config.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.out_dir->string() + ": " + ec.message());
    write_records_csv(*config.out_dir / "records.csv", result.records);
    write_summary_csv(*config.out_dir / "summary.csv", s);
    write_plot_script(*config.out_dir / "plot.gp", s);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

void write_records_csv(const std::filesystem::path& path, std::span<const ExitRecord> records) {
  CsvWriter csv(path, {"replicate", "seed", "tau", "location", "taxonomy", "censored", "last_jump_gap"});
  for (const auto& r : records) {
    csv.row({std::to_string(r.replicate), std::to_string(r.seed), format_double(r.tau), format_double(r.location),
             to_string(r.taxonomy), r.censored ? "1" : "0", format_double(r.last_jump_gap)});
  }
  csv.close();
}

void write_summary_csv(const std::filesystem::path& path, const SummaryStats& s) {
  CsvWriter csv(path, {"key", "value"});
  auto put = [&](const std::string& k, double v) { csv.row({k, format_double(v)}); };
  put("replicates", static_cast<double>(s.replicates));
  put("censored", static_cast<double>(s.censored));
  put("jump_exits", static_cast<double>(s.jump_exits));
  put("growth_exits", static_cast<double>(s.growth_exits));
  put("mean_tau", s.mean_tau);
  put("stderr_tau", s.stderr_tau);
  put("predicted_mean", s.predicted_mean);
  put("ratio", s.ratio);
  put("ks", s.ks);
  put("ks_pvalue", s.ks_pvalue);
  put("nu_bar_E", s.prediction.rate);
  put("lambda_eps", s.prediction.lambda_eps);
  put("e_minus", s.thresholds.e_minus);
  put("e_plus", s.thresholds.e_plus);
  put("M", s.max_value);
  put("m", s.min_value);
  put("eta", s.eta);
  put("rho", s.rho);
  put("t_max", s.t_max);
  put("frac_near_a", s.frac_near_a);
  put("frac_near_b", s.frac_near_b);
  put("frac_far_down", s.frac_far_down);
  put("frac_far_up", s.frac_far_up);
  put("censored_fraction", s.censored_fraction);
  put("pi_a_jump", s.mixture.pi_a_jump);
  put("pi_a_cont", s.mixture.pi_a_cont);
  put("pi_b_cont", s.mixture.pi_b_cont);
  put("pi_b_jump", s.mixture.pi_b_jump);
  if (s.locations.ks_up) put("ks_far_up", *s.locations.ks_up);
  if (s.locations.ks_up_pvalue) put("ks_far_up_pvalue", *s.locations.ks_up_pvalue);
  if (s.locations.ks_down) put("ks_far_down", *s.locations.ks_down);
  if (s.locations.ks_down_pvalue) put("ks_far_down_pvalue", *s.locations.ks_down_pvalue);
  csv.close();
}

void write_plot_script(const std::filesystem::path& path, const SummaryStats& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const double rate = s.prediction.rate;
  const double lam = s.prediction.lambda_eps;
  out << "# gnuplot script; run from this directory: gnuplot plot.gp\n"
      << "set datafile separator ','\n"
      << "set terminal pngcairo size 1200,450\n"
      << "set output 'exits.png'\n"
      << "set multiplot layout 1,2\n"
      << "set title 'scaled exit times vs limit survival'\n"
      << "set xlabel 'lambda_eps * tau'\nset ylabel 'P(> u)'\nset logscale y\n"
      << "stats 'records.csv' using 3 every ::1 nooutput\n"
      << "n = STATS_records\n"
      << "plot '< tail -n +2 records.csv | awk -F, \"\\$6==0\" | sort -t, -k3 -g' using ($3*" << lam
      << "):(1-($0+0.5)/n) with points pt 7 ps 0.3 title 'empirical', exp(-" << rate << "*x) title 'limit'\n"
      << "unset logscale y\n"
      << "set title 'exit locations'\nset xlabel 'X(tau)'\nset ylabel 'count'\n"
      << "binwidth = " << format_double(std::max(s.eta, 1e-3)) << "\n"
      << "bin(x) = binwidth * floor(x / binwidth)\n"
      << "set boxwidth binwidth\n"
      << "plot 'records.csv' using (($6==0 && abs($4) < 5) ? bin($4) : 1/0):(1.0) every ::1 smooth freq with boxes "
         "title 'X(tau)'\n"
      << "unset multiplot\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace kramers
