#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kramers {

/// Point mass of the memory measure: weight `weight` at delay `delay` in [-r, 0].
struct Atom {
  double delay;
  double weight;
};

/// Piecewise-constant density on [-r, 0]; values[i] holds on
/// [breakpoints[i], breakpoints[i+1]).
struct PiecewiseDensity {
  std::vector<double> breakpoints;
  std::vector<double> values;
};

/// One nonzero entry of a memory measure discretized on a grid: the drift at
/// step k picks up weight * x[k - lag].
struct LagWeight {
  std::size_t lag;
  double weight;
};

/// Finite signed measure on [-r, 0] driving the linear delay drift
/// x'(t) = \int x(t+u) mu(du).
class MemoryMeasure {
 public:
  MemoryMeasure(double horizon, std::vector<Atom> atoms,
                std::optional<PiecewiseDensity> density = std::nullopt);

  /// x'(t) = A x(t) + B x(t - r).
  static MemoryMeasure retarded(double a, double b, double r);

  double horizon() const noexcept { return horizon_; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  const std::optional<PiecewiseDensity>& density() const noexcept { return density_; }

  double total_variation() const noexcept;
  /// Value of the density at u (0 outside the breakpoints or without density).
  double density_at(double u) const noexcept;

  /// True when the measure is exactly A*delta_0 + B*delta_{-r} (either weight
  /// may be zero) with no density part.
  bool is_retarded() const noexcept;
  /// (A, B) of the retarded form; only meaningful when is_retarded().
  double retarded_a() const noexcept;
  double retarded_b() const noexcept;

  /// Lag weights on a grid of step dt. Atoms must sit on the grid; density
  /// cells contribute g(midpoint) * dt / 2 to both endpoint lags.
  std::vector<LagWeight> discretize(double dt) const;

 private:
  double horizon_;
  std::vector<Atom> atoms_;
  std::optional<PiecewiseDensity> density_;
};

/// Number of grid steps covering `length`; throws ConfigError when dt does not
/// divide it to within rounding.
std::size_t grid_steps(double length, double dt);

/// Largest dt' <= dt that divides r and every atom delay of the measure.
double aligned_step(const MemoryMeasure& measure, double dt);

/// Initial segment phi sampled at -r, -r+dt, ..., 0.
class Segment {
 public:
  Segment(double horizon, double dt, std::vector<double> values);

  static Segment constant(double horizon, double dt, double value);
  /// phi* = 0 on [-r, 0), phi*(0) = 1.
  static Segment fundamental(double horizon, double dt);

  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return values_.size() - 1; }
  std::span<const double> values() const noexcept { return values_; }
  double at_zero() const noexcept { return values_.back(); }
  double sup_norm() const noexcept;

 private:
  double horizon_;
  double dt_;
  std::vector<double> values_;
};

/// Uniformly sampled trajectory; values[i] is the value at start + i*dt.
class GridPath {
 public:
  GridPath(double start, double dt, std::vector<double> values, bool has_initial_segment);

  double start() const noexcept { return start_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool has_initial_segment() const noexcept { return has_initial_segment_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double time(std::size_t i) const noexcept { return start_ + static_cast<double>(i) * dt_; }
  double end_time() const noexcept { return time(values_.size() - 1); }

  /// Index of grid time t; throws ConfigError if t is off-grid or out of range.
  std::size_t index_of(double t) const;
  /// Index of t = 0.
  std::size_t zero_index() const { return index_of(0.0); }
  double at(double t) const { return values_[index_of(t)]; }
  /// Values on [0, end].
  std::span<const double> from_zero() const { return values().subspan(zero_index()); }
  /// Segment x_t on [t - r, t].
  Segment segment_at(double t, double horizon) const;

 private:
  double start_;
  double dt_;
  std::vector<double> values_;
  bool has_initial_segment_;
};

struct PathExtremes {
  double max_value;          // M >= 1
  double min_value;          // m <= 0
  double argmax_time;
  bool min_attained;
  std::optional<double> argmin_time;
  double truncation_bound;   // bound on |x*| beyond the computed horizon
};

struct StabilityReport {
  double abscissa;                       // -Lambda, primary estimate
  std::optional<double> root_estimate;   // characteristic-root route (retarded case)
  double fit_estimate;                   // envelope-fit route
  bool stable;
  std::optional<double> decay_rate;      // lambda = 0.9 * Lambda
  std::optional<double> envelope_constant;  // K with |x*(t)| <= K e^{-lambda t}
  double fit_horizon;                    // horizon of the x* used for the fit and for K
};

/// Explicit Euler solution of the deterministic delay equation on [-r, T].
GridPath solve_dde(const MemoryMeasure& measure, const Segment& initial, double horizon, double dt);

/// Solution started from phi*; x*(0) = 1.
GridPath fundamental_solution(const MemoryMeasure& measure, double horizon, double dt);

/// Variation-of-constants representation of x(t; phi) through x*, evaluated
/// with trapezoidal quadrature. Independent of the recursion in solve_dde.
GridPath convolution_solution(const MemoryMeasure& measure, const Segment& initial,
                              const GridPath& x_star, double horizon);

/// Max/min of x* over t >= 0. The tail beyond the computed horizon is bounded
/// with the (lambda, K) envelope from `stability`; throws
/// InsufficientHorizonError when that bound exceeds `accuracy`.
PathExtremes path_extremes(const GridPath& x_star, bool refine, const StabilityReport& stability,
                           double accuracy = 1e-6);

/// Computes x* on a horizon long enough for `accuracy` and returns its
/// extremes together with the stability report used for the tail bound.
struct ExtremesResult {
  GridPath x_star;
  StabilityReport stability;
  PathExtremes extremes;
};
ExtremesResult compute_extremes(const MemoryMeasure& measure, double dt, bool refine = true,
                                double accuracy = 1e-6, double max_horizon = 1e4);

/// Rightmost characteristic root estimate plus an envelope fit of |x*|.
StabilityReport spectral_abscissa(const MemoryMeasure& measure, double dt);

/// Rightmost root of lambda = A + B e^{-lambda r} via the principal Lambert W
/// branch, polished by Newton iteration on the characteristic equation.
double retarded_rightmost_root(double a, double b, double r);

struct PlanePoint {
  double a_tilde;
  double b_tilde;
};

/// Stability region of y' = A~ y(t) + B~ y(t-1): the lower parametric curve
/// (zeta cot zeta, -zeta / sin zeta) and the upper line A~ + B~ = 0, A~ < 1.
struct StabilityBoundary {
  std::vector<PlanePoint> lower;   // zeta_i = i * pi / n, i = 0..n-1; i = 0 is the limit (1, -1)
  PlanePoint upper_start{1.0, -1.0};
  PlanePoint upper_direction{-1.0, 1.0};
};

StabilityBoundary stability_boundary(std::size_t n);

/// Lower boundary B~ as a function of A~ < 1.
double lower_boundary_b(double a_tilde);
bool inside_stability_region(double a_tilde, double b_tilde);
/// Euclidean distance to the region boundary, positive inside, negative outside.
double signed_boundary_distance(double a_tilde, double b_tilde);

}  // namespace kramers
