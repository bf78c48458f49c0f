#include "kramers/exit_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kramers/errors.hpp"
#include "kramers/parallel.hpp"
#include "kramers/quadrature.hpp"

namespace kramers {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_div(double num, double den) { return den == 0.0 ? kInf : num / den; }

// Thresholds of the landing value w = z * F0 (F0 = 1).
Thresholds landing_thresholds(const PathExtremes& ex, double a, double b) {
  const double big = ex.max_value;
  const double small = std::fabs(ex.min_value);
  return {-std::min(safe_div(-a, big), safe_div(b, small)), std::min(safe_div(-a, small), safe_div(b, big))};
}

}  // namespace

std::string to_string(ExitSide s) {
  switch (s) {
    case ExitSide::none: return "none";
    case ExitSide::up: return "up";
    case ExitSide::down: return "down";
  }
  return "none";
}

SideResult classify_exit_side(double z, const GridPath& x_star, double f0, double a, double b, double tail_bound) {
  if (!(a < 0.0 && b > 0.0)) throw ConfigError("interval must satisfy a < 0 < b");
  const double s = z * f0;
  if (s == 0.0) return {};
  const auto v = x_star.from_zero();
  const double dt = x_star.dt();
  double prev = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double g = s * v[i];
    if (g > b || g < a) {
      const double level = g > b ? b : a;
      double t = 0.0;
      if (i > 0) t = (static_cast<double>(i - 1) + (level - prev) / (g - prev)) * dt;
      return {g > b ? ExitSide::up : ExitSide::down, t};
    }
    prev = g;
  }
  if (std::fabs(s) * tail_bound >= std::min(-a, b)) {
    throw InsufficientHorizonError("x* horizon too short to rule out a late crossing for z = " + std::to_string(z));
  }
  return {};
}

Thresholds exit_thresholds(const PathExtremes& extremes, double f0, double a, double b) {
  if (!(a < 0.0 && b > 0.0)) throw ConfigError("interval must satisfy a < 0 < b");
  if (f0 == 0.0) throw ConfigError("F0 must be nonzero");
  const Thresholds w = landing_thresholds(extremes, a, b);
  const double s = std::fabs(f0);
  if (f0 > 0.0) return {w.e_minus / s, w.e_plus / s};
  return {-w.e_plus / s, -w.e_minus / s};
}

ExitSets::ExitSets(std::shared_ptr<const GridPath> x_star, const PathExtremes& extremes, double f0, double a, double b)
    : x_star_(std::move(x_star)), extremes_(extremes), f0_(f0), a_(a), b_(b),
      th_(exit_thresholds(extremes, f0, a, b)) {
  if (!x_star_) throw ConfigError("exit sets need the fundamental solution");
}

ExitSets ExitSets::from(const ExtremesResult& result, double f0, double a, double b) {
  return ExitSets(std::make_shared<GridPath>(result.x_star), result.extremes, f0, a, b);
}

SideResult ExitSets::classify(double z) const {
  return classify_exit_side(z, *x_star_, f0_, a_, b_, extremes_.truncation_bound);
}

// ---------------------------------------------------------------------------
// Rates

double ExitPrediction::survival(double u) const { return std::exp(-u * rate); }

double exit_law(const ExitPrediction& prediction, double u) {
  if (!(u >= 0.0)) throw ConfigError("exit law needs u >= 0");
  return prediction.survival(u);
}

double exit_rate_value(const LimitMeasure& limit, const Thresholds& th) {
  double rate = 0.0;
  if (std::isfinite(th.e_plus)) rate += limit.mass_above(th.e_plus);
  if (std::isfinite(th.e_minus)) rate += limit.mass_below(th.e_minus);
  if (!(rate > 0.0)) throw DegenerateExitError("limit exit rate vanishes: no jump size leads to an exit");
  return rate;
}

ExitPrediction exit_rate(const NoiseSpec& spec, const ExitSets& sets, double eps) {
  ExitPrediction p;
  p.rate = exit_rate_value(limit_measure(spec), {sets.e_minus(), sets.e_plus()});
  p.eps = eps;
  p.lambda_eps = tail_mass(spec, eps);
  p.mean = 1.0 / (p.lambda_eps * p.rate);
  return p;
}

double symmetric_mean_exit_time(double max_value, double min_value, double a, double b, double alpha, double eps,
                                double density_coefficient) {
  const double big = std::pow(max_value, alpha);
  const double small = std::pow(std::fabs(min_value), alpha);
  const double la = std::pow(-a, alpha), lb = std::pow(b, alpha);
  const double s = std::max(big / la, small / lb) + std::max(small / la, big / lb);
  return alpha / (density_coefficient * std::pow(eps, alpha) * s);
}

// ---------------------------------------------------------------------------
// Location mixture

double LocationMixture::cdf_up(double x) const { return x <= b ? 0.0 : 1.0 - std::pow(b / x, alpha); }
double LocationMixture::cdf_down(double x) const { return x >= a ? 0.0 : 1.0 - std::pow(a / x, alpha); }
double LocationMixture::density_up(double x) const {
  return x <= b ? 0.0 : alpha * std::pow(b, alpha) * std::pow(x, -1.0 - alpha);
}
double LocationMixture::density_down(double x) const {
  return x >= a ? 0.0 : alpha * std::pow(-a, alpha) * std::pow(-x, -1.0 - alpha);
}

namespace {

// Splits the landing values w in (lo, hi] (all of one sign) into the parts
// that exit up and down. `mass(u1, u2)` integrates the landing law.
template <class Mass>
std::pair<double, double> split_gap(const GridPath& x_star, double a, double b, double tail, double lo, double hi,
                                    Mass&& mass) {
  if (!(hi > lo)) return {0.0, 0.0};
  auto side = [&](double w) { return classify_exit_side(w, x_star, 1.0, a, b, tail).side; };
  constexpr int kScan = 2000;
  std::vector<double> w(kScan + 1);
  std::vector<ExitSide> s(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    w[i] = lo + (hi - lo) * static_cast<double>(i) / kScan;
    s[i] = side(w[i]);
  }
  // Points at the threshold itself may not exit on the grid; borrow the side
  // of the nearest exiting neighbour.
  for (int i = kScan - 1; i >= 0; --i) {
    if (s[i] == ExitSide::none) s[i] = s[i + 1];
  }
  for (int i = 1; i <= kScan; ++i) {
    if (s[i] == ExitSide::none) s[i] = s[i - 1];
  }
  double up = 0.0, down = 0.0;
  double start = lo;
  for (int i = 1; i <= kScan; ++i) {
    if (s[i] == s[i - 1] && i < kScan) continue;
    double end = w[i];
    if (s[i] != s[i - 1]) {
      double l = w[i - 1], r = w[i];
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (l + r);
        ExitSide sm = side(mid);
        if (sm == ExitSide::none) sm = s[i - 1];
        (sm == s[i - 1] ? l : r) = mid;
      }
      end = 0.5 * (l + r);
    }
    const double m = mass(start, end);
    (s[i - 1] == ExitSide::up ? up : down) += m;
    start = end;
    if (i == kScan && start < hi) {
      const double rest = mass(start, hi);
      (s[i] == ExitSide::up ? up : down) += rest;
    }
  }
  return {up, down};
}

}  // namespace

LocationMixture location_mixture(const NoiseSpec& spec, const ExitSets& sets) {
  const LimitMeasure lim = limit_measure(spec);
  const double f0 = sets.f0();
  const double a = sets.a(), b = sets.b();
  const double alpha = lim.alpha;
  // Landing law of w = z F0 under nu_bar.
  const double scale = std::pow(std::fabs(f0), alpha);
  const double k_up = (f0 > 0 ? lim.c_plus : lim.c_minus) * scale;
  const double k_down = (f0 > 0 ? lim.c_minus : lim.c_plus) * scale;
  auto tail = [&](double k, double u) { return std::isinf(u) ? 0.0 : k * std::pow(u, -alpha) / alpha; };
  auto mass_pos = [&](double u1, double u2) { return tail(k_up, u1) - tail(k_up, u2); };
  auto mass_neg = [&](double u1, double u2) { return tail(k_down, -u2) - tail(k_down, -u1); };

  const Thresholds w = landing_thresholds(sets.extremes(), a, b);
  const double rate = exit_rate_value({alpha, k_down, k_up}, w);
  const double tb = sets.extremes().truncation_bound;

  LocationMixture mix;
  mix.a = a;
  mix.b = b;
  mix.alpha = alpha;
  double b_jump = 0.0, a_jump = 0.0, b_cont = 0.0, a_cont = 0.0;
  if (std::isfinite(w.e_plus)) {
    b_jump += tail(k_up, std::max(b, w.e_plus));
    const auto [up, down] = split_gap(sets.x_star(), a, b, tb, w.e_plus, std::min(b, kInf), mass_pos);
    b_cont += up;
    a_cont += down;
  }
  if (std::isfinite(w.e_minus)) {
    a_jump += tail(k_down, std::max(-a, -w.e_minus));
    // Negative landings: split (a, e_minus) via the mirrored variable.
    if (w.e_minus > a) {
      auto side_mass = [&](double u1, double u2) { return mass_neg(-u2, -u1); };
      const GridPath& xs = sets.x_star();
      std::vector<double> flipped(xs.values().begin(), xs.values().end());
      for (auto& v : flipped) v = -v;
      const GridPath neg(xs.start(), xs.dt(), std::move(flipped), xs.has_initial_segment());
      // With x* negated, a landing -u (u > 0) behaves like +u.
      const auto [up, down] = split_gap(neg, a, b, tb, -w.e_minus, -a, side_mass);
      b_cont += up;
      a_cont += down;
    }
  }
  mix.pi_b_jump = b_jump / rate;
  mix.pi_a_jump = a_jump / rate;
  mix.pi_b_cont = b_cont / rate;
  mix.pi_a_cont = a_cont / rate;
  return mix;
}

// ---------------------------------------------------------------------------
// Gaussian comparison

std::string to_string(GaussBranch b) {
  switch (b) {
    case GaussBranch::oscillatory: return "oscillatory";
    case GaussBranch::critical: return "critical";
    case GaussBranch::overdamped: return "overdamped";
    case GaussBranch::numeric_integral: return "numeric_integral";
  }
  return "numeric_integral";
}

namespace {

double time_domain_g(double a_tilde, double b_tilde, double dt) {
  const MemoryMeasure mu = MemoryMeasure::retarded(a_tilde, b_tilde, 1.0);
  const StabilityReport rep = spectral_abscissa(mu, dt);
  if (!rep.stable) throw DomainError("Gaussian comparison needs a stable (A~, B~)");
  const double lambda = *rep.decay_rate;
  const double k = std::max(*rep.envelope_constant, 1.0);
  // Tail of 2 int y^2 beyond T is below K^2 e^{-2 lambda T} / lambda.
  const double horizon = std::max(std::log(k * k / (lambda * 1e-10)) / (2.0 * lambda), 10.0);
  auto energy = [&](double step) {
    const GridPath y = fundamental_solution(mu, horizon, step);
    const auto v = y.from_zero();
    double acc = 0.5 * (v.front() * v.front() + v.back() * v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i] * v[i];
    return 2.0 * acc * step;
  };
  return 2.0 * energy(dt / 2.0) - energy(dt);
}

double frequency_domain_g(double a_tilde, double b_tilde) {
  auto f = [&](double w) {
    const double re = a_tilde + b_tilde * std::cos(w);
    const double im = w + b_tilde * std::sin(w);
    return 1.0 / (re * re + im * im);
  };
  constexpr int kPeriods = 2000;
  const double period = 2.0 * std::numbers::pi;
  double acc = 0.0;
  for (int k = 0; k < kPeriods; ++k) acc += quad::integrate(f, k * period, (k + 1) * period, 1e-12);
  acc += 1.0 / (kPeriods * period);  // int_W^inf w^{-2} dw
  return 2.0 / std::numbers::pi * acc;
}

}  // namespace

GaussianComparison gaussian_G(double a_tilde, double b_tilde, bool cross_check, double dt) {
  if (!inside_stability_region(a_tilde, b_tilde)) {
    throw DomainError("(A~, B~) = (" + std::to_string(a_tilde) + ", " + std::to_string(b_tilde) +
                      ") is outside the stability region");
  }
  GaussianComparison out;
  out.a_tilde = a_tilde;
  out.b_tilde = b_tilde;
  if (a_tilde < 0.0 && std::fabs(b_tilde - a_tilde) <= 1e-12 * std::max(1.0, std::fabs(a_tilde))) {
    out.branch = GaussBranch::critical;
    out.branch_value = (1.0 + std::fabs(a_tilde)) / (2.0 * std::fabs(a_tilde));
  } else if (b_tilde + std::fabs(a_tilde) < 0.0) {
    out.branch = GaussBranch::oscillatory;
    const double q = std::sqrt(b_tilde * b_tilde - a_tilde * a_tilde);
    out.branch_value = (b_tilde * std::sin(q) / q - 1.0) / (a_tilde + b_tilde * std::cos(q));
  } else if (a_tilde + std::fabs(b_tilde) < 0.0) {
    out.branch = GaussBranch::overdamped;
    const double q = std::sqrt(a_tilde * a_tilde - b_tilde * b_tilde);
    const double sinhc = q == 0.0 ? 1.0 : std::sinh(q) / q;
    out.branch_value = (b_tilde * sinhc - 1.0) / (a_tilde + b_tilde * std::cosh(q));
  }
  if (cross_check || !out.branch_value) {
    out.time_integral = time_domain_g(a_tilde, b_tilde, dt);
    out.frequency_integral = frequency_domain_g(a_tilde, b_tilde);
  }
  out.g = out.branch_value ? *out.branch_value : *out.frequency_integral;
  return out;
}

double gaussian_kramers(double a, double b, double r, double a_tilde, double b_tilde) {
  if (!(a < 0.0 && b > 0.0 && r > 0.0)) throw ConfigError("need a < 0 < b and r > 0");
  const double g = gaussian_G(a_tilde, b_tilde, false).g;
  const double h = std::min(-a, b);
  return h * h / (r * g);
}

// ---------------------------------------------------------------------------
// Trivial-domain scan

std::vector<ScanCell> scan_trivial_domain(const ScanGrid& grid, double dt, std::size_t workers, double tol) {
  if (grid.a_points < 1 || grid.b_points < 1) throw ConfigError("scan grid needs at least one point per axis");
  auto coord = [](double lo, double hi, std::size_t n, std::size_t i) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<ScanCell> cells(grid.a_points * grid.b_points);
  parallel_for(cells.size(), workers, [&](std::size_t idx) {
    ScanCell& c = cells[idx];
    c.a_tilde = coord(grid.a_min, grid.a_max, grid.a_points, idx % grid.a_points);
    c.b_tilde = coord(grid.b_min, grid.b_max, grid.b_points, idx / grid.a_points);
    if (!inside_stability_region(c.a_tilde, c.b_tilde)) return;
    try {
      const auto res = compute_extremes(MemoryMeasure::retarded(c.a_tilde, c.b_tilde, 1.0), dt, true, 0.1 * tol, 2000.0);
      c.valid = true;
      c.max_value = res.extremes.max_value;
      c.min_value = res.extremes.min_value;
      c.trivial = c.max_value <= 1.0 + tol && c.min_value >= -tol;
    } catch (const Error&) {
      c.valid = false;
    }
  });
  return cells;
}

}  // namespace kramers
