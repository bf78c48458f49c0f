#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kramers/random.hpp"

namespace kramers {

enum class NoiseVariant { alpha_stable, power_tail, tempered, contaminated, gaussian };

std::string to_string(NoiseVariant v);
/// Throws ConfigError for unknown names.
NoiseVariant parse_noise_variant(const std::string& name);

/// Levy triplet (sigma2, drift, nu) of the driving noise. Which of the jump
/// fields are read depends on the variant:
///   alpha_stable  alpha, beta, c  (char. function exp(-c|u|^a (1 - i beta tan(pi a/2) sgn u)))
///   power_tail    alpha, c_minus, c_plus          nu = c_pm |z|^{-1-alpha} dz
///   tempered      alpha1, alpha2, c_minus, c_plus nu = c_pm |z|^{-1-alpha1} (1+z^2)^{-alpha2/2} dz
///   contaminated  alpha, c_minus, c_plus          nu = l_pm(z) |z|^{-1-alpha} dz,
///                 l_pm(z) = c_pm (2 + |z|) / (1 + |z|) -> c_pm
///   gaussian      no jumps (sigma2 and drift only)
/// `drift` is added to the process as d*t; for alpha_stable the stable part
/// itself is centred as in the characteristic function above.
struct NoiseSpec {
  NoiseVariant variant = NoiseVariant::alpha_stable;
  double alpha = 1.5;
  double beta = 0.0;
  double c = 1.0;
  double c_minus = 1.0;
  double c_plus = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 0.5;
  double sigma2 = 0.0;
  double drift = 0.0;

  static NoiseSpec alpha_stable(double alpha, double beta, double c);
  /// Stable law whose Levy density is c_minus |z|^{-1-alpha} on z < 0 and
  /// c_plus z^{-1-alpha} on z > 0.
  static NoiseSpec stable_from_levy_density(double alpha, double c_minus, double c_plus);
  static NoiseSpec power_tail(double alpha, double c_minus, double c_plus);
  static NoiseSpec tempered(double alpha1, double alpha2, double c_minus, double c_plus);
  static NoiseSpec contaminated(double alpha, double l_minus, double l_plus);
  static NoiseSpec gaussian(double sigma2, double drift = 0.0);

  /// Throws ConfigError when parameters are out of range.
  void validate() const;

  bool has_jumps() const noexcept { return variant != NoiseVariant::gaussian; }
  /// Index of regular variation of the tails (alpha1 + alpha2 for tempered).
  double tail_index() const noexcept;
  /// Levy density at z != 0.
  double density(double z) const noexcept;
  /// nu((x, inf)) and nu((-inf, -x)) for x > 0.
  double tail_above(double x) const;
  double tail_below(double x) const;
  /// Drift of the triplet with truncation 1{|z| <= 1}.
  double triplet_drift() const noexcept;
  /// Density coefficients c_minus, c_plus of the stable variant.
  double stable_c_minus() const noexcept;
  double stable_c_plus() const noexcept;
};

/// Homogeneous limit of the rescaled tails, normalised so that
/// nu_bar({|z| > 1}) = 1: density c_minus |z|^{-1-alpha} / c_plus z^{-1-alpha}.
struct LimitMeasure {
  double alpha;
  double c_minus;
  double c_plus;

  double mass_above(double v) const { return c_plus * std::pow(v, -alpha) / alpha; }
  double mass_below(double v) const { return c_minus * std::pow(-v, -alpha) / alpha; }
  double density(double z) const {
    return (z < 0.0 ? c_minus : c_plus) * std::pow(std::fabs(z), -1.0 - alpha);
  }
};

/// Throws DomainError for the jump-free gaussian variant.
LimitMeasure limit_measure(const NoiseSpec& spec);

/// lambda_eps = nu({|z| > 1/eps}), eps in (0, 1].
double tail_mass(const NoiseSpec& spec, double eps);

/// nu_bar((v, inf)) for v > 0, nu_bar((-inf, v)) for v < 0. Throws
/// InfiniteMassError at v = 0.
double limit_tail(const NoiseSpec& spec, double v);

/// Standard stable variate S_alpha(1, beta, 0) by the Chambers-Mallows-Stuck
/// transform, with the (alpha, beta) constants precomputed.
class StableDraw {
 public:
  StableDraw(double alpha, double beta);
  double operator()(Rng& rng) const;

 private:
  double alpha_;
  double beta_;
  double shift_ = 0.0;
  double scale_ = 1.0;
  double inv_alpha_ = 1.0;
  double outer_ = 0.0;
};

double standard_stable(double alpha, double beta, Rng& rng);

/// Inverse-CDF sampler for jump magnitudes of one sign restricted to
/// (lo, hi]; hi may be infinite. Tabulated on log-spaced knots with monotone
/// cubic interpolation; beyond the last knot of an infinite range the tail is
/// continued as a power law.
class MagnitudeTable {
 public:
  MagnitudeTable(const NoiseSpec& spec, int sign, double lo, double hi, std::size_t knots = 4096);

  double mass() const noexcept { return mass_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double sample(Rng& rng) const;
  /// P(|J| > x) under the tabulated law, for checks against quadrature.
  double survival(double x) const;

 private:
  // key = -log(T(x)/T(lo)) for an infinite range, the normalised CDF otherwise.
  double log_x_of_key(double key) const;

  int sign_;
  double lo_;
  double hi_;
  double mass_ = 0.0;
  bool unbounded_;
  double key_max_ = 0.0;
  double log_x_max_ = 0.0;
  double tail_exponent_ = 1.0;  // d(-log T)/d(log x) at the last knot
  std::function<double(double)> key_to_log_x_;
  std::function<double(double)> log_x_to_key_;
};

/// Split Z = eta^rho + xi^rho into large jumps |z| > rho (compound Poisson
/// with rate beta_rho) and the remainder. The remainder is simulated as drift
/// d_rho, Gaussian part sigma2 + int_{|z|<=cut} z^2 nu, and compensated
/// compound Poisson jumps with cut < |z| <= rho.
class JumpDecomposition {
 public:
  JumpDecomposition(const NoiseSpec& spec, double rho, double small_cutoff);

  double rho() const noexcept { return rho_; }
  double small_cutoff() const noexcept { return cutoff_; }
  double large_rate() const noexcept { return beta_rho_; }
  double small_drift() const noexcept { return d_rho_; }
  double small_variance_rate() const noexcept { return small_var_; }
  double medium_rate() const noexcept { return mid_rate_; }
  double medium_mean_rate() const noexcept { return mid_mean_; }

  /// Signed large jump J with |J| > rho.
  double sample_large(Rng& rng) const;
  /// Exponential waiting time to the next large jump.
  double sample_wait(Rng& rng) const { return rng.exponential() / beta_rho_; }
  /// Increment of xi^rho over a step dt.
  double sample_small(double dt, Rng& rng) const;
  const MagnitudeTable& large_table(int sign) const { return sign > 0 ? *large_plus_ : *large_minus_; }

 private:
  double rho_;
  double cutoff_;
  double beta_rho_ = 0.0;
  double p_plus_ = 0.5;
  double d_rho_ = 0.0;
  double small_var_ = 0.0;
  double mid_rate_ = 0.0;
  double mid_p_plus_ = 0.5;
  double mid_mean_ = 0.0;
  std::shared_ptr<const MagnitudeTable> large_plus_, large_minus_, mid_plus_, mid_minus_;
};

/// Throws ConfigError unless rho > 1 and the spec has jumps. A non-positive
/// `small_cutoff` selects the default 1e-3 * rho.
JumpDecomposition decompose(const NoiseSpec& spec, double rho, double small_cutoff = -1.0);

/// Sampler of the marginal increment Z(t + dt) - Z(t). Exact for the stable
/// and gaussian variants; decomposition based (jumps above `cutoff` explicit,
/// Gaussian surrogate below) otherwise.
class IncrementSampler {
 public:
  IncrementSampler(const NoiseSpec& spec, double dt, double cutoff = 1e-3);
  double operator()(Rng& rng) const;
  double dt() const noexcept { return dt_; }

 private:
  NoiseSpec spec_;
  double dt_;
  StableDraw stable_;
  double stable_scale_ = 0.0;
  double stable_shift_ = 0.0;
  std::shared_ptr<const JumpDecomposition> decomposition_;
};

/// One increment; builds the sampler on each call, so loops should hold an
/// IncrementSampler instead.
double sample_increment(const NoiseSpec& spec, double dt, Rng& rng);

}  // namespace kramers
