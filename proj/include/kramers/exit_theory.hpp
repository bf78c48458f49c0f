#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kramers/dde.hpp"
#include "kramers/levy.hpp"

namespace kramers {

enum class ExitSide { none, up, down };
std::string to_string(ExitSide s);

struct SideResult {
  ExitSide side = ExitSide::none;
  std::optional<double> crossing_time;  // linearly interpolated
};

/// Which boundary z * F0 * x*(t) crosses first. Throws
/// InsufficientHorizonError when the envelope tail beyond the computed x*
/// (`tail_bound` scaled by |z F0|) could still reach a boundary.
SideResult classify_exit_side(double z, const GridPath& x_star, double f0, double a, double b,
                              double tail_bound = 0.0);

struct Thresholds {
  double e_minus;  // <= 0, possibly -inf
  double e_plus;   // >= 0, possibly +inf
};

/// [e_minus, e_plus] is the set of jump sizes with no later exit of the
/// noise-free response. F0 < 0 is reduced to F0 > 0 by z -> -z.
Thresholds exit_thresholds(const PathExtremes& extremes, double f0, double a, double b);

class ExitSets {
 public:
  ExitSets(std::shared_ptr<const GridPath> x_star, const PathExtremes& extremes, double f0, double a, double b);
  /// Convenience: keeps the x* of a compute_extremes result.
  static ExitSets from(const ExtremesResult& result, double f0, double a, double b);

  double e_minus() const noexcept { return th_.e_minus; }
  double e_plus() const noexcept { return th_.e_plus; }
  double f0() const noexcept { return f0_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  const PathExtremes& extremes() const noexcept { return extremes_; }
  const GridPath& x_star() const noexcept { return *x_star_; }
  SideResult classify(double z) const;

 private:
  std::shared_ptr<const GridPath> x_star_;
  PathExtremes extremes_;
  double f0_, a_, b_;
  Thresholds th_;
};

struct ExitPrediction {
  double rate = 0.0;        // nu_bar(E)
  double eps = 0.0;
  double lambda_eps = 0.0;  // nu(|z| > 1/eps)
  double mean = 0.0;        // 1 / (lambda_eps * rate)

  /// Limit of P(lambda_eps tau > u).
  double survival(double u) const;
};

/// nu_bar(E) = c_minus |e_minus|^{-alpha} / alpha + c_plus e_plus^{-alpha} / alpha.
/// Throws DegenerateExitError when both thresholds are infinite.
double exit_rate_value(const LimitMeasure& limit, const Thresholds& th);
ExitPrediction exit_rate(const NoiseSpec& spec, const ExitSets& sets, double eps);
double exit_law(const ExitPrediction& prediction, double u);

/// Mean exit time of the retarded equation with symmetric jump density
/// c |z|^{-1-alpha} and F0 = 1 in terms of the extremes of x*:
/// alpha / (c eps^alpha S), S = max(M^a/|a|^a, |m|^a/b^a) + max(|m|^a/|a|^a, M^a/b^a).
double symmetric_mean_exit_time(double max_value, double min_value, double a, double b, double alpha, double eps,
                                double density_coefficient);

/// Limit law of X(tau): atoms at a and b (growth exits) and normalised power
/// densities on (-inf, a) and (b, inf) (jump exits).
struct LocationMixture {
  double a = -1.0, b = 1.0, alpha = 1.0;
  double pi_a_jump = 0.0;  // mass of jumps landing below a
  double pi_a_cont = 0.0;  // atom at a
  double pi_b_cont = 0.0;  // atom at b
  double pi_b_jump = 0.0;  // mass of jumps landing above b

  double total() const noexcept { return pi_a_jump + pi_a_cont + pi_b_cont + pi_b_jump; }
  /// Conditional law of a jump exit location above b: P(X <= x | X > b).
  double cdf_up(double x) const;
  /// Conditional law below a: P(X >= x | X < a).
  double cdf_down(double x) const;
  double density_up(double x) const;
  double density_down(double x) const;
};

LocationMixture location_mixture(const NoiseSpec& spec, const ExitSets& sets);

enum class GaussBranch { oscillatory, critical, overdamped, numeric_integral };
std::string to_string(GaussBranch b);

struct GaussianComparison {
  double a_tilde = 0.0;
  double b_tilde = 0.0;
  double g = 0.0;
  GaussBranch branch = GaussBranch::numeric_integral;
  std::optional<double> branch_value;
  std::optional<double> time_integral;       // 2 int (y*)^2 dt by Euler + Richardson
  std::optional<double> frequency_integral;  // (2/pi) int_0^inf |char(i w)|^{-2} dw
};

/// G(A~, B~) = 2 int_0^inf y*(t)^2 dt for y' = A~ y(t) + B~ y(t - 1).
/// Throws DomainError outside the stability region.
GaussianComparison gaussian_G(double a_tilde, double b_tilde, bool cross_check = true, double dt = 1e-3);

/// Exponent min(|a|, b)^2 / (r G) of the Gaussian exit time.
double gaussian_kramers(double a, double b, double r, double a_tilde, double b_tilde);

struct ScanCell {
  double a_tilde = 0.0;
  double b_tilde = 0.0;
  bool valid = false;   // stable and extremes resolved
  double max_value = 0.0;
  double min_value = 0.0;
  bool trivial = false;  // M <= 1 + tol and m >= -tol
};

struct ScanGrid {
  double a_min = -3.0, a_max = 0.9;
  std::size_t a_points = 40;
  double b_min = -2.0, b_max = 2.0;
  std::size_t b_points = 41;
};

/// Row-major over b_tilde (outer) and a_tilde (inner).
std::vector<ScanCell> scan_trivial_domain(const ScanGrid& grid, double dt, std::size_t workers = 0,
                                          double tol = 1e-4);

}  // namespace kramers
