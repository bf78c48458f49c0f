#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kramers/dde.hpp"
#include "kramers/exit_theory.hpp"
#include "kramers/levy.hpp"
#include "kramers/sdde.hpp"

namespace kramers {

struct ExperimentConfig {
  MemoryMeasure measure = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
  NoiseSpec noise = NoiseSpec::stable_from_levy_density(1.5, 1.0, 1.0);
  DiffusionCoefficient coefficient = DiffusionCoefficient::constant(1.0);
  /// sim.t_max <= 0 selects 50 times the predicted mean exit time; sim.seed
  /// is the master seed.
  SimParams sim{};
  double initial_value = 0.0;  // constant initial segment
  std::size_t replicates = 100;
  std::size_t workers = 0;     // 0 = hardware concurrency
  double eta = 0.0;            // boundary-atom window; <= 0 selects the default
  std::optional<std::filesystem::path> out_dir;

  /// Largest drift speed at the interval edges: |mu|[-r,0] * max(|a|, b).
  double drift_scale() const;
  double default_eta() const;
};

/// Exit locations sorted into the four regions of the limit law.
struct LocationComparison {
  std::size_t exits = 0;
  double near_a = 0.0;    // X in [a - eta, a]
  double near_b = 0.0;    // X in [b, b + eta]
  double far_down = 0.0;  // X < a - eta
  double far_up = 0.0;    // X > b + eta
  double near_a_se = 0.0, near_b_se = 0.0, far_down_se = 0.0, far_up_se = 0.0;
  // Kolmogorov-Smirnov tests of far-region locations against the normalised
  // power densities conditioned beyond the window.
  std::optional<double> ks_up, ks_up_pvalue, ks_down, ks_down_pvalue;
  // Log-spaced histogram of X/b over (1 + eta/b, 100]: empirical vs limit.
  std::vector<double> hist_edges;
  std::vector<double> hist_empirical;
  std::vector<double> hist_predicted;
};

struct SummaryStats {
  std::size_t replicates = 0;
  std::size_t censored = 0;
  std::size_t jump_exits = 0;
  std::size_t growth_exits = 0;
  double mean_tau = 0.0;
  double stderr_tau = 0.0;
  double predicted_mean = 0.0;
  double ratio = 0.0;
  double ks = 0.0;  // of lambda_eps * tau against Exp(nu_bar(E))
  double ks_pvalue = 0.0;
  // Fractions over all replicates; with censored_fraction they sum to 1.
  double frac_near_a = 0.0, frac_near_b = 0.0, frac_far_down = 0.0, frac_far_up = 0.0, censored_fraction = 0.0;
  double eta = 0.0;
  double rho = 0.0;
  double t_max = 0.0;
  double max_value = 0.0;
  double min_value = 0.0;
  Thresholds thresholds{};
  ExitPrediction prediction{};
  LocationMixture mixture{};
  LocationComparison locations{};
};

struct ExperimentResult {
  SummaryStats summary;
  std::vector<ExitRecord> records;
};

/// Runs config.replicates independent first exits (replicate i seeded with
/// replicate_seed(master, i)) and compares them with the limit predictions.
/// Writes records.csv, summary.csv and plot.gp when out_dir is set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// sup_u |F_n(u) - (1 - e^{-rate u})|. Throws EmptyInputError on no samples.
double ks_statistic(std::span<const double> samples, double rate);
/// Same against an arbitrary continuous CDF.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);
/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
double ks_pvalue(double statistic, std::size_t n);

/// Throws EmptyInputError when every record is censored.
LocationComparison summarize_locations(std::span<const ExitRecord> records, double a, double b, double eta,
                                       const LocationMixture& mixture);

void write_records_csv(const std::filesystem::path& path, std::span<const ExitRecord> records);
void write_summary_csv(const std::filesystem::path& path, const SummaryStats& s);
void write_plot_script(const std::filesystem::path& path, const SummaryStats& s);

}  // namespace kramers
