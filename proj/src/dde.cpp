#include "kramers/dde.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>

#include "kramers/errors.hpp"

namespace kramers {

namespace {

constexpr double kGridTol = 1e-9;

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// Euler recursion for the fundamental solution that stops (instead of
// throwing) once |x| leaves [0, limit]. Returns values on t >= 0.
std::vector<double> fundamental_guarded(std::span<const LagWeight> lags, std::size_t n_steps,
                                        double dt, double limit) {
  std::size_t max_lag = 0;
  for (const auto& lw : lags) max_lag = std::max(max_lag, lw.lag);
  std::vector<double> x(max_lag + n_steps + 1, 0.0);
  x[max_lag] = 1.0;
  std::size_t last = max_lag + n_steps;
  for (std::size_t k = max_lag; k < max_lag + n_steps; ++k) {
    double drift = 0.0;
    for (const auto& lw : lags) drift += lw.weight * x[k - lw.lag];
    x[k + 1] = x[k] + dt * drift;
    if (std::fabs(x[k + 1]) < 1e-280) x[k + 1] = 0.0;
    if (!(std::fabs(x[k + 1]) < limit)) {
      last = k;
      break;
    }
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(max_lag),
          x.begin() + static_cast<std::ptrdiff_t>(last) + 1};
}

// Least-squares slope of log|x| against t on the late part of the path.
// Oscillating paths are fitted through the peaks of |x|.
double envelope_slope(std::span<const double> x, double dt) {
  constexpr double kFloor = 1e-250;
  std::size_t end = x.size();
  while (end > 1 && std::fabs(x[end - 1]) < kFloor) --end;
  if (end < 8) return -std::numeric_limits<double>::infinity();
  const std::size_t begin = end / 2;

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = std::max<std::size_t>(begin, 1); i + 1 < end; ++i) {
    const double v = std::fabs(x[i]);
    if (v >= std::fabs(x[i - 1]) && v > std::fabs(x[i + 1]) && v > kFloor) {
      pts.emplace_back(static_cast<double>(i) * dt, std::log(v));
    }
  }
  if (pts.size() < 4) {
    pts.clear();
    for (std::size_t i = begin; i < end; ++i) {
      if (std::fabs(x[i]) > kFloor) pts.emplace_back(static_cast<double>(i) * dt, std::log(std::fabs(x[i])));
    }
  }
  if (pts.size() < 2) return -std::numeric_limits<double>::infinity();
  double st = 0, sy = 0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
  }
  const double n = static_cast<double>(pts.size());
  const double tm = st / n, ym = sy / n;
  double num = 0, den = 0;
  for (const auto& [t, y] : pts) {
    num += (t - tm) * (y - ym);
    den += (t - tm) * (t - tm);
  }
  return den > 0 ? num / den : 0.0;
}

// |x| e^{s} without overflow for tiny |x| and large s.
double scaled_magnitude(double x, double s) {
  // Subnormal values stall under Euler decay and would be blown up by e^{s}.
  return std::fabs(x) < 1e-280 ? 0.0 : std::exp(std::log(std::fabs(x)) + s);
}

std::complex<double> lambert_w0(std::complex<double> z) {
  using C = std::complex<double>;
  if (std::abs(z) < 1e-300) return C(0.0, 0.0);
  const double e = std::numbers::e;
  C w;
  const C branch = 2.0 * (e * z + 1.0);
  // Real z below -1/e has a complex W0; a real starting guess would never leave the axis.
  const bool below_cut = z.imag() == 0.0 && z.real() < -1.0 / e;
  if (std::abs(branch) < 3.0 || (below_cut && std::abs(z) < 1.5)) {
    const C p = std::sqrt(branch);
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (std::abs(z) < 1.0) {
    w = z * (1.0 - z);
  } else {
    const C l1 = std::log(z);
    w = l1 - std::log(l1);
  }
  for (int it = 0; it < 100; ++it) {
    const C ew = std::exp(w);
    const C f = w * ew - z;
    const C wp1 = w + 1.0;
    if (std::abs(wp1) < 1e-14) break;
    const C step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// MemoryMeasure

MemoryMeasure::MemoryMeasure(double horizon, std::vector<Atom> atoms,
                             std::optional<PiecewiseDensity> density)
    : horizon_(horizon), atoms_(std::move(atoms)), density_(std::move(density)) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw ConfigError("memory horizon r must be positive and finite, got " + fmt(horizon_));
  }
  const double slack = 1e-12 * horizon_;
  for (auto& atom : atoms_) {
    if (!std::isfinite(atom.weight) || !std::isfinite(atom.delay)) {
      throw ConfigError("memory atom has a non-finite delay or weight");
    }
    if (atom.delay < -horizon_ - slack || atom.delay > slack) {
      throw ConfigError("atom delay " + fmt(atom.delay) + " outside [-r, 0]");
    }
    atom.delay = std::clamp(atom.delay, -horizon_, 0.0);
  }
  if (density_) {
    const auto& bp = density_->breakpoints;
    const auto& vals = density_->values;
    if (bp.size() < 2 || vals.size() + 1 != bp.size()) {
      throw ConfigError("density needs n+1 breakpoints for n values");
    }
    for (std::size_t i = 0; i < bp.size(); ++i) {
      if (bp[i] < -horizon_ - slack || bp[i] > slack) {
        throw ConfigError("density breakpoint " + fmt(bp[i]) + " outside [-r, 0]");
      }
      if (i > 0 && !(bp[i] > bp[i - 1])) {
        throw ConfigError("density breakpoints must be strictly increasing");
      }
    }
    if (!finite_all(vals)) throw ConfigError("density values must be finite");
  }
}

MemoryMeasure MemoryMeasure::retarded(double a, double b, double r) {
  return MemoryMeasure(r, {{0.0, a}, {-r, b}});
}

double MemoryMeasure::total_variation() const noexcept {
  double tv = 0.0;
  for (const auto& atom : atoms_) tv += std::fabs(atom.weight);
  if (density_) {
    const auto& bp = density_->breakpoints;
    for (std::size_t i = 0; i < density_->values.size(); ++i) {
      tv += std::fabs(density_->values[i]) * (bp[i + 1] - bp[i]);
    }
  }
  return tv;
}

double MemoryMeasure::density_at(double u) const noexcept {
  if (!density_) return 0.0;
  const auto& bp = density_->breakpoints;
  if (u < bp.front() || u >= bp.back()) return 0.0;
  const auto it = std::upper_bound(bp.begin(), bp.end(), u);
  return density_->values[static_cast<std::size_t>(it - bp.begin()) - 1];
}

bool MemoryMeasure::is_retarded() const noexcept {
  if (density_) return false;
  const double tol = 1e-12 * horizon_;
  return std::all_of(atoms_.begin(), atoms_.end(), [&](const Atom& atom) {
    return std::fabs(atom.delay) <= tol || std::fabs(atom.delay + horizon_) <= tol;
  });
}

double MemoryMeasure::retarded_a() const noexcept {
  double a = 0.0;
  for (const auto& atom : atoms_) {
    if (std::fabs(atom.delay) <= 1e-12 * horizon_) a += atom.weight;
  }
  return a;
}

double MemoryMeasure::retarded_b() const noexcept {
  double b = 0.0;
  for (const auto& atom : atoms_) {
    if (std::fabs(atom.delay) > 1e-12 * horizon_) b += atom.weight;
  }
  return b;
}

std::vector<LagWeight> MemoryMeasure::discretize(double dt) const {
  const std::size_t n = grid_steps(horizon_, dt);
  std::vector<double> dense(n + 1, 0.0);
  for (const auto& atom : atoms_) {
    const std::size_t lag = grid_steps(-atom.delay, dt);
    dense[std::min(lag, n)] += atom.weight;
  }
  if (density_) {
    for (std::size_t j = 0; j < n; ++j) {
      const double mid = -(static_cast<double>(j) + 0.5) * dt;
      const double g = density_at(mid);
      dense[j] += 0.5 * g * dt;
      dense[j + 1] += 0.5 * g * dt;
    }
  }
  std::vector<LagWeight> out;
  for (std::size_t lag = 0; lag <= n; ++lag) {
    if (dense[lag] != 0.0) out.push_back({lag, dense[lag]});
  }
  return out;
}

std::size_t grid_steps(double length, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("step dt must be positive, got " + fmt(dt));
  if (length < 0.0) throw ConfigError("negative grid length " + fmt(length));
  const double q = length / dt;
  const double n = std::round(q);
  if (std::fabs(q - n) > kGridTol * std::max(1.0, q)) {
    throw ConfigError("dt = " + fmt(dt) + " does not divide " + fmt(length));
  }
  return static_cast<std::size_t>(n);
}

double aligned_step(const MemoryMeasure& measure, double dt) {
  if (!(dt > 0.0)) throw ConfigError("step dt must be positive");
  const double r = measure.horizon();
  const auto n0 = static_cast<std::size_t>(std::ceil(r / dt - kGridTol));
  for (std::size_t n = std::max<std::size_t>(n0, 1); n <= 1000 * std::max<std::size_t>(n0, 1); ++n) {
    const double cand = r / static_cast<double>(n);
    const bool ok = std::all_of(measure.atoms().begin(), measure.atoms().end(), [&](const Atom& atom) {
      const double q = -atom.delay / cand;
      return std::fabs(q - std::round(q)) <= kGridTol * std::max(1.0, q);
    });
    if (ok) return cand;
  }
  throw ConfigError("no grid step <= " + fmt(dt) + " aligns with all memory delays");
}

// ---------------------------------------------------------------------------
// Segment / GridPath

Segment::Segment(double horizon, double dt, std::vector<double> values)
    : horizon_(horizon), dt_(dt), values_(std::move(values)) {
  const std::size_t n = grid_steps(horizon_, dt_);
  if (values_.size() != n + 1) {
    throw ConfigError("segment needs r/dt + 1 = " + std::to_string(n + 1) + " values, got " +
                      std::to_string(values_.size()));
  }
  if (!finite_all(values_)) throw ConfigError("segment values must be finite");
}

Segment Segment::constant(double horizon, double dt, double value) {
  return Segment(horizon, dt, std::vector<double>(grid_steps(horizon, dt) + 1, value));
}

Segment Segment::fundamental(double horizon, double dt) {
  std::vector<double> v(grid_steps(horizon, dt) + 1, 0.0);
  v.back() = 1.0;
  return Segment(horizon, dt, std::move(v));
}

double Segment::sup_norm() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

GridPath::GridPath(double start, double dt, std::vector<double> values, bool has_initial_segment)
    : start_(start), dt_(dt), values_(std::move(values)), has_initial_segment_(has_initial_segment) {
  if (!(dt_ > 0.0)) throw ConfigError("path step must be positive");
  if (values_.empty()) throw ConfigError("path must contain at least one value");
  if (!finite_all(values_)) throw ConfigError("path values must be finite");
}

std::size_t GridPath::index_of(double t) const {
  const double q = (t - start_) / dt_;
  const double n = std::round(q);
  if (std::fabs(q - n) > 1e-6 || n < 0.0 || n > static_cast<double>(values_.size() - 1)) {
    throw ConfigError("time " + fmt(t) + " is not a grid point of the path");
  }
  return static_cast<std::size_t>(n);
}

Segment GridPath::segment_at(double t, double horizon) const {
  const std::size_t i = index_of(t);
  const std::size_t n = grid_steps(horizon, dt_);
  if (i < n) throw ConfigError("segment at " + fmt(t) + " reaches before the path start");
  return Segment(horizon, dt_,
                 std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(i - n),
                                     values_.begin() + static_cast<std::ptrdiff_t>(i) + 1));
}

// ---------------------------------------------------------------------------
// Solvers

GridPath solve_dde(const MemoryMeasure& measure, const Segment& initial, double horizon, double dt) {
  if (!(horizon > 0.0)) throw ConfigError("solve horizon T must be positive");
  if (std::fabs(initial.dt() - dt) > 1e-12 * dt) throw ConfigError("initial segment step differs from dt");
  if (std::fabs(initial.horizon() - measure.horizon()) > 1e-12 * measure.horizon()) {
    throw ConfigError("initial segment length differs from the memory horizon");
  }
  const auto lags = measure.discretize(dt);
  const std::size_t n_r = initial.steps();
  const auto n_t = static_cast<std::size_t>(std::ceil(horizon / dt - kGridTol));

  std::vector<double> x(n_r + n_t + 1);
  std::copy(initial.values().begin(), initial.values().end(), x.begin());
  for (std::size_t k = n_r; k < n_r + n_t; ++k) {
    double drift = 0.0;
    for (const auto& lw : lags) drift += lw.weight * x[k - lw.lag];
    x[k + 1] = x[k] + dt * drift;
    if (!std::isfinite(x[k + 1])) {
      throw DivergenceError(k + 1 - n_r, "delay solution diverged at step " + std::to_string(k + 1 - n_r));
    }
  }
  return GridPath(-measure.horizon(), dt, std::move(x), true);
}

GridPath fundamental_solution(const MemoryMeasure& measure, double horizon, double dt) {
  return solve_dde(measure, Segment::fundamental(measure.horizon(), dt), horizon, dt);
}

GridPath convolution_solution(const MemoryMeasure& measure, const Segment& initial,
                              const GridPath& x_star, double horizon) {
  const double dt = initial.dt();
  if (std::fabs(x_star.dt() - dt) > 1e-12 * dt) throw ConfigError("x* and the initial segment use different steps");
  if (std::fabs(initial.horizon() - measure.horizon()) > 1e-12 * measure.horizon()) {
    throw ConfigError("initial segment length differs from the memory horizon");
  }
  const auto n_t = static_cast<std::size_t>(std::ceil(horizon / dt - kGridTol));
  const std::size_t z = x_star.zero_index();
  if (z + n_t >= x_star.size() + 0 && z + n_t > x_star.size() - 1) {
    throw ConfigError("x* does not cover the requested horizon");
  }
  const auto xs = x_star.values();
  const auto phi = initial.values();
  const std::size_t n_r = initial.steps();
  const auto lags = measure.discretize(dt);

  // Each lag L contributes w_L \int_u^0 x*(t - s + u) phi(s) ds with s = -m dt,
  // u = -L dt. Only phi on [u, 0) matters, so s = 0 takes the left limit
  // phi(-dt). Collecting the trapezoid terms by j = L - m turns the double sum
  // into sum_j kernel[j] x*(t - j dt).
  std::vector<double> kernel(n_r + 1, 0.0);
  for (const auto& lw : lags) {
    const std::size_t big_l = lw.lag;
    if (big_l == 0) continue;
    for (std::size_t m = 0; m <= big_l; ++m) {
      const double w = (m == 0 || m == big_l) ? 0.5 : 1.0;
      kernel[big_l - m] += lw.weight * dt * w * phi[n_r - std::max<std::size_t>(m, 1)];
    }
  }

  std::vector<double> out(n_r + n_t + 1);
  std::copy(phi.begin(), phi.end(), out.begin());
  for (std::size_t k = 0; k <= n_t; ++k) {
    double value = initial.at_zero() * xs[z + k];
    const std::size_t top = std::min(k, n_r);
    for (std::size_t j = 0; j <= top; ++j) value += kernel[j] * xs[z + k - j];
    out[n_r + k] = value;
  }
  return GridPath(-measure.horizon(), dt, std::move(out), true);
}

// ---------------------------------------------------------------------------
// Extremes

namespace {

// Vertex of the parabola through (i-1, i, i+1), or the grid value when the
// point looks like a derivative kink (second difference far above its
// neighbours) or the vertex falls outside the bracket.
double refine_extremum(std::span<const double> v, std::size_t i, double dt, double& t_out) {
  t_out = static_cast<double>(i) * dt;
  if (i == 0 || i + 1 >= v.size()) return v[i];
  const double d2 = v[i - 1] - 2.0 * v[i] + v[i + 1];
  auto second_diff = [&](std::size_t j) {
    return (j == 0 || j + 1 >= v.size()) ? 0.0 : std::fabs(v[j - 1] - 2.0 * v[j] + v[j + 1]);
  };
  const double neighbours = std::max(second_diff(i - 1), second_diff(i + 1));
  if (d2 == 0.0 || std::fabs(d2) > 4.0 * neighbours + 1e-300) return v[i];
  const double delta = 0.5 * (v[i - 1] - v[i + 1]) / d2;
  if (std::fabs(delta) > 0.5) return v[i];
  t_out = (static_cast<double>(i) + delta) * dt;
  return v[i] - 0.25 * (v[i - 1] - v[i + 1]) * delta;
}

}  // namespace

PathExtremes path_extremes(const GridPath& x_star, bool refine, const StabilityReport& stability,
                           double accuracy) {
  if (!stability.stable || !stability.decay_rate || !stability.envelope_constant) {
    throw DomainError("extremes of x* need a stable memory measure");
  }
  const auto v = x_star.from_zero();
  const double dt = x_star.dt();
  const double lambda = *stability.decay_rate;

  double k_env = *stability.envelope_constant;
  for (std::size_t i = 0; i < v.size(); ++i) {
    k_env = std::max(k_env, scaled_magnitude(v[i], lambda * static_cast<double>(i) * dt));
  }
  const double t_end = static_cast<double>(v.size() - 1) * dt;
  const double tail = k_env * std::exp(-lambda * t_end);
  if (tail > accuracy) {
    throw InsufficientHorizonError("x* horizon " + fmt(t_end) + " leaves a tail bound " + fmt(tail) +
                                   " above the requested accuracy " + fmt(accuracy));
  }

  const auto imax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const auto imin = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());

  PathExtremes ex{};
  ex.truncation_bound = tail;
  ex.argmax_time = static_cast<double>(imax) * dt;
  ex.max_value = v[imax];
  if (refine) {
    double t = 0.0;
    ex.max_value = std::max(v[imax], refine_extremum(v, imax, dt, t));
    ex.argmax_time = t;
  }
  ex.max_value = std::max(ex.max_value, 1.0);

  if (v[imin] < 0.0) {
    ex.min_value = v[imin];
    double t = static_cast<double>(imin) * dt;
    if (refine) ex.min_value = std::min(v[imin], refine_extremum(v, imin, dt, t));
    ex.min_attained = true;
    ex.argmin_time = t;
  } else {
    ex.min_value = 0.0;
    ex.min_attained = v[imin] == 0.0;
    if (ex.min_attained) ex.argmin_time = static_cast<double>(imin) * dt;
  }
  return ex;
}

ExtremesResult compute_extremes(const MemoryMeasure& measure, double dt, bool refine, double accuracy,
                                double max_horizon) {
  StabilityReport stab = spectral_abscissa(measure, dt);
  if (!stab.stable) throw DomainError("memory measure is unstable (abscissa " + fmt(stab.abscissa) + ")");
  const double lambda = *stab.decay_rate;
  const double k_env = *stab.envelope_constant;
  double horizon = std::max(std::log(std::max(k_env, 1.0) / accuracy) / lambda * 1.05,
                            2.0 * measure.horizon());
  for (;;) {
    horizon = std::min(horizon, max_horizon);
    GridPath xs = fundamental_solution(measure, horizon, dt);
    try {
      PathExtremes ex = path_extremes(xs, refine, stab, accuracy);
      return {std::move(xs), std::move(stab), ex};
    } catch (const InsufficientHorizonError&) {
      if (horizon >= max_horizon) throw;
      horizon *= 2.0;
    }
  }
}

// ---------------------------------------------------------------------------
// Stability

double retarded_rightmost_root(double a, double b, double r) {
  if (b == 0.0 || r == 0.0) return a + (r == 0.0 ? b : 0.0);
  using C = std::complex<double>;
  const C z(b * r * std::exp(-a * r), 0.0);
  C lam = a + lambert_w0(z) / r;
  // Newton polish on lambda - a - b e^{-lambda r} = 0.
  for (int it = 0; it < 50; ++it) {
    const C e = std::exp(-lam * r);
    const C f = lam - a - b * e;
    const C fp = 1.0 + b * r * e;
    if (std::abs(fp) < 1e-300) break;
    const C step = f / fp;
    lam -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(lam))) break;
  }
  return lam.real();
}

StabilityReport spectral_abscissa(const MemoryMeasure& measure, double dt) {
  constexpr double kAgreement = 5e-2;
  constexpr double kOverflow = 1e250;
  const double r = measure.horizon();
  StabilityReport rep{};

  std::optional<double> root;
  if (measure.is_retarded()) root = retarded_rightmost_root(measure.retarded_a(), measure.retarded_b(), r);

  // The envelope fit is done at dt and dt/2 and Richardson-extrapolated so
  // the first-order drift of Euler's discrete decay rate does not pollute it.
  auto fit_at = [&](double horizon) {
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const auto coarse = fundamental_guarded(measure.discretize(dt), steps, dt, kOverflow);
    const auto fine = fundamental_guarded(measure.discretize(dt / 2), 2 * steps, dt / 2, kOverflow);
    const double s1 = envelope_slope(coarse, dt);
    const double s2 = envelope_slope(fine, dt / 2);
    if (!std::isfinite(s1) || !std::isfinite(s2)) return std::pair{std::min(s1, s2), coarse};
    return std::pair{2.0 * s2 - s1, coarse};
  };

  double horizon = 60.0 * std::max(r, 1.0);
  auto [fit, path] = fit_at(horizon);
  const double guess = root.value_or(fit);
  // Long enough that |x*| e^{0.9 Lambda t} has peaked (e^{-0.1 Lambda T} < e^{-3}).
  if (guess < 0.0 && std::isfinite(guess)) {
    const double wanted = std::min(30.0 / (-guess), 2e4 * std::max(r, 1.0));
    if (wanted > horizon) {
      horizon = wanted;
      std::tie(fit, path) = fit_at(horizon);
    }
  }

  rep.fit_estimate = fit;
  rep.root_estimate = root;
  rep.fit_horizon = horizon;
  rep.abscissa = root.value_or(fit);
  if (root && std::isfinite(fit) && std::fabs(*root - fit) > kAgreement) {
    throw AmbiguousStabilityError("characteristic root " + fmt(*root) + " and envelope fit " + fmt(fit) +
                                  " disagree; refine dt or the horizon");
  }
  rep.stable = rep.abscissa < 0.0;
  if (rep.stable) {
    const double lambda = -0.9 * rep.abscissa;
    double k_env = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      k_env = std::max(k_env, scaled_magnitude(path[i], lambda * static_cast<double>(i) * dt));
    }
    rep.decay_rate = lambda;
    rep.envelope_constant = k_env;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Stability region of the rescaled retarded equation

StabilityBoundary stability_boundary(std::size_t n) {
  if (n < 2) throw ConfigError("stability boundary needs n >= 2 samples");
  StabilityBoundary out;
  out.lower.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double zeta = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    if (i == 0) {
      out.lower.push_back({1.0, -1.0});
    } else {
      out.lower.push_back({zeta / std::tan(zeta), -zeta / std::sin(zeta)});
    }
  }
  return out;
}

namespace {

// zeta in (0, pi) with zeta cot zeta = a_tilde (a_tilde < 1); bisection on
// the strictly decreasing map.
double zeta_for(double a_tilde) {
  double lo = 0.0, hi = std::numbers::pi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double val = mid == 0.0 ? 1.0 : mid / std::tan(mid);
    (val > a_tilde ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double lower_boundary_b(double a_tilde) {
  if (!(a_tilde < 1.0)) throw DomainError("lower stability boundary defined for A~ < 1 only");
  const double zeta = zeta_for(a_tilde);
  return zeta < 1e-12 ? -1.0 : -zeta / std::sin(zeta);
}

bool inside_stability_region(double a_tilde, double b_tilde) {
  if (!(a_tilde < 1.0)) return false;
  return a_tilde + b_tilde < 0.0 && b_tilde > lower_boundary_b(a_tilde);
}

double signed_boundary_distance(double a_tilde, double b_tilde) {
  // Upper ray (1 - s, -1 + s), s >= 0.
  const double s = std::max(0.0, 0.5 * ((1.0 - a_tilde) + (b_tilde + 1.0)));
  double best = std::hypot(a_tilde - (1.0 - s), b_tilde - (-1.0 + s));

  auto curve = [](double zeta) {
    return zeta < 1e-9 ? PlanePoint{1.0, -1.0} : PlanePoint{zeta / std::tan(zeta), -zeta / std::sin(zeta)};
  };
  auto dist = [&](double zeta) {
    const auto p = curve(zeta);
    return std::hypot(a_tilde - p.a_tilde, b_tilde - p.b_tilde);
  };
  constexpr int kSamples = 4000;
  const double zmax = std::numbers::pi * (1.0 - 1e-6);
  int arg = 0;
  double dmin = dist(0.0);
  for (int i = 1; i <= kSamples; ++i) {
    const double d = dist(zmax * i / kSamples);
    if (d < dmin) {
      dmin = d;
      arg = i;
    }
  }
  // Golden-section refinement on the bracketing samples.
  double lo = zmax * std::max(arg - 1, 0) / kSamples;
  double hi = zmax * std::min(arg + 1, kSamples) / kSamples;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  for (int it = 0; it < 80; ++it) {
    if (dist(c) < dist(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - g * (hi - lo);
    d = lo + g * (hi - lo);
  }
  dmin = std::min(dmin, dist(0.5 * (lo + hi)));
  best = std::min(best, dmin);
  return inside_stability_region(a_tilde, b_tilde) ? best : -best;
}

}  // namespace kramers
