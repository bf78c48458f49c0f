#include <doctest.h>

#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "kramers/errors.hpp"
#include "kramers/exit_theory.hpp"

using namespace kramers;

namespace {

PathExtremes extremes(double max_value, double min_value) {
  return {max_value, min_value, 0.0, true, 0.0, 0.0};
}

// Largest |w| of each sign whose response w * [m, M] stays in [a, b].
Thresholds brute_thresholds(double max_value, double min_value, double a, double b) {
  double up = b / max_value;
  if (min_value < 0.0) up = std::min(up, a / min_value);
  double down = a / max_value;
  if (min_value < 0.0) down = std::max(down, b / min_value);
  return {down, up};
}

// First grid index where w * x* leaves [a, b].
ExitSide scan_side(const GridPath& xs, double w, double a, double b) {
  for (double v : xs.from_zero()) {
    if (w * v > b) return ExitSide::up;
    if (w * v < a) return ExitSide::down;
  }
  return ExitSide::none;
}

// Stationary variance of the delayed OU process, doubled, written via omega.
double ou_delay_g(double a, double b) {
  if (std::fabs(a) > std::fabs(b)) {
    const double w = std::sqrt(a * a - b * b);
    return (b * std::sinh(w) - w) / (w * (a + b * std::cosh(w)));
  }
  const double w = std::sqrt(b * b - a * a);
  return (b * std::sin(w) - w) / (w * (a + b * std::cos(w)));
}

// 2 int y^2 by fourth-order Runge-Kutta on the method of steps, the lagged
// value interpolated from the stored grid.
double rk_g(double a, double b, double horizon = 60.0) {
  const int per = 400;
  const double h = 1.0 / per;
  const int n = static_cast<int>(horizon * per);
  std::vector<double> y(n + 1);
  y[0] = 1.0;
  auto lag = [&](double t) {
    if (t < 0.0) return 0.0;
    const double s = t / h;
    const int i = std::min(static_cast<int>(s), n - 1);
    const double f = s - i;
    return (1 - f) * y[i] + f * y[i + 1];
  };
  double acc = 0.5;
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    auto rhs = [&](double tt, double yy) { return a * yy + b * lag(tt - 1.0); };
    const double k1 = rhs(t, y[i]);
    const double k2 = rhs(t + h / 2, y[i] + h / 2 * k1);
    const double k3 = rhs(t + h / 2, y[i] + h / 2 * k2);
    const double k4 = rhs(t + h, y[i] + h * k3);
    y[i + 1] = y[i] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    acc += y[i + 1] * y[i + 1] * (i + 1 == n ? 0.5 : 1.0);
  }
  return 2.0 * acc * h;
}

}  // namespace

TEST_CASE("exit thresholds") {
  const Thresholds t1 = exit_thresholds(extremes(1.0, 0.0), 1.0, -1.0, 2.0);
  CHECK(t1.e_minus == doctest::Approx(-1.0));
  CHECK(t1.e_plus == doctest::Approx(2.0));
  const Thresholds t2 = exit_thresholds(extremes(2.0, -0.5), 1.0, -1.0, 1.0);
  CHECK(t2.e_minus == doctest::Approx(-0.5));
  CHECK(t2.e_plus == doctest::Approx(0.5));
  // F0 < 0 mirrors the landing thresholds.
  const Thresholds t3 = exit_thresholds(extremes(1.0, 0.0), -2.0, -1.0, 2.0);
  CHECK(t3.e_minus == doctest::Approx(-1.0));
  CHECK(t3.e_plus == doctest::Approx(0.5));
  CHECK_THROWS_AS(exit_thresholds(extremes(1.0, 0.0), 0.0, -1.0, 1.0), ConfigError);

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> uM(1.0, 3.0), um(-2.0, 0.0), ua(-3.0, -0.1), ub(0.1, 3.0), uf(0.2, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double M = uM(gen), m = um(gen), a = ua(gen), b = ub(gen), f = uf(gen);
    const Thresholds got = exit_thresholds(extremes(M, m), f, a, b);
    const Thresholds want = brute_thresholds(M, m, a, b);
    CHECK(got.e_plus * f == doctest::Approx(want.e_plus));
    CHECK(got.e_minus * f == doctest::Approx(want.e_minus));
  }
}

TEST_CASE("exit side classifier") {
  const auto mu = MemoryMeasure::retarded(8.0, -12.0, 0.05);
  const ExtremesResult res = compute_extremes(mu, 1e-3);
  const ExitSets sets = ExitSets::from(res, 1.0, -1.0, 1.0);
  CHECK(sets.e_plus() == doctest::Approx(1.0 / res.extremes.max_value));
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> uz(-3.0, 3.0);
  for (int i = 0; i < 400; ++i) {
    const double z = uz(gen);
    if (std::fabs(z - sets.e_plus()) < 1e-3 || std::fabs(z - sets.e_minus()) < 1e-3) continue;
    const SideResult got = sets.classify(z);
    CHECK(got.side == scan_side(sets.x_star(), z, -1.0, 1.0));
    if (got.side != ExitSide::none && std::fabs(z) <= 1.0) {
      REQUIRE(got.crossing_time);
      const double at = z * sets.x_star().at(std::round(*got.crossing_time / 1e-3) * 1e-3);
      CHECK(std::fabs(at) == doctest::Approx(1.0).epsilon(0.05));
    }
  }
  CHECK(sets.classify(0.5 * sets.e_plus()).side == ExitSide::none);
  CHECK(sets.classify(5.0).side == ExitSide::up);
  CHECK(sets.classify(-5.0).side == ExitSide::down);
}

TEST_CASE("exit rate and law") {
  const NoiseSpec spec = NoiseSpec::stable_from_levy_density(1.0, 1.0, 1.0);
  const auto mu = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
  const ExitSets sets = ExitSets::from(compute_extremes(mu, 1e-3), 1.0, -0.5, 0.5);
  const ExitPrediction p = exit_rate(spec, sets, 0.2);
  // Limit measure has unit mass outside [-1, 1]; thresholds at 1/2 double it.
  CHECK(p.rate == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(p.lambda_eps == doctest::Approx(0.4));
  CHECK(p.mean == doctest::Approx(1.25).epsilon(1e-3));
  CHECK(exit_law(p, 0.0) == 1.0);
  CHECK(exit_law(p, 1.0) == doctest::Approx(std::exp(-p.rate)));
  CHECK_THROWS_AS(exit_law(p, -1.0), ConfigError);

  CHECK_THROWS_AS(exit_rate_value({1.5, 1.0, 1.0}, {-INFINITY, INFINITY}), DegenerateExitError);
  const double one_sided = exit_rate_value({1.5, 0.4, 1.0}, {-INFINITY, 2.0});
  CHECK(one_sided == doctest::Approx(std::pow(2.0, -1.5) / 1.5));

  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> ual(0.3, 1.9), uc(0.1, 2.0), ue(0.05, 3.0);
  for (int i = 0; i < 20; ++i) {
    const double al = ual(gen), cm = uc(gen), cp = uc(gen), em = -ue(gen), ep = ue(gen);
    const LimitMeasure lim{al, cm, cp};
    const double want = cm / al * std::pow(-em, -al) + cp / al * std::pow(ep, -al);
    CHECK(exit_rate_value(lim, {em, ep}) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("symmetric mean exit time") {
  // No delay, c = 1: S = 2 with a = -1, b = 1.
  CHECK(symmetric_mean_exit_time(1.0, 0.0, -1.0, 1.0, 1.5, 0.1, 1.0) == doctest::Approx(1.5 / (2 * std::pow(0.1, 1.5))));
  const double s = std::max(std::pow(2.0, 1.5) / 1.0, std::pow(0.5, 1.5) / std::pow(2.0, 1.5)) +
                   std::max(std::pow(0.5, 1.5), std::pow(2.0, 1.5) / std::pow(2.0, 1.5));
  CHECK(symmetric_mean_exit_time(2.0, -0.5, -1.0, 2.0, 1.5, 0.1, 3.0) ==
        doctest::Approx(1.5 / (3.0 * std::pow(0.1, 1.5) * s)));
}

TEST_CASE("location mixture") {
  const NoiseSpec sym = NoiseSpec::stable_from_levy_density(1.0, 1.0, 1.0);
  const auto nodelay = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
  const ExtremesResult res = compute_extremes(nodelay, 1e-3);

  SUBCASE("monotone response exits by jumps only") {
    const LocationMixture mix = location_mixture(sym, ExitSets::from(res, 1.0, -1.0, 1.0));
    CHECK(mix.pi_a_jump == doctest::Approx(0.5));
    CHECK(mix.pi_b_jump == doctest::Approx(0.5));
    CHECK(mix.pi_a_cont == doctest::Approx(0.0));
    CHECK(mix.pi_b_cont == doctest::Approx(0.0));
    const LocationMixture wide = location_mixture(sym, ExitSets::from(res, 1.0, -1.0, 2.0));
    CHECK(wide.pi_b_jump == doctest::Approx(1.0 / 3.0));
    CHECK(wide.total() == doctest::Approx(1.0));
  }
  SUBCASE("conditional laws") {
    const LocationMixture mix = location_mixture(NoiseSpec::stable_from_levy_density(1.5, 1.0, 1.0),
                                                 ExitSets::from(res, 1.0, -1.0, 2.0));
    CHECK(mix.cdf_up(2.0) == 0.0);
    CHECK(mix.cdf_up(4.0) == doctest::Approx(1.0 - std::pow(0.5, 1.5)));
    CHECK(mix.cdf_down(-2.0) == doctest::Approx(1.0 - std::pow(0.5, 1.5)));
    // Density integrates to the cdf.
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += mix.density_up(2.0 + (i + 0.5) * 2.0 / n) * 2.0 / n;
    CHECK(acc == doctest::Approx(mix.cdf_up(4.0)).epsilon(1e-4));
  }
  SUBCASE("overshooting response produces boundary atoms") {
    const auto mu = MemoryMeasure::retarded(8.0, -12.0, 0.05);
    const ExtremesResult r2 = compute_extremes(mu, 1e-3);
    const ExitSets sets = ExitSets::from(r2, 1.0, -1.0, 1.0);
    const NoiseSpec spec = NoiseSpec::stable_from_levy_density(1.5, 1.0, 1.0);
    const LocationMixture mix = location_mixture(spec, sets);
    CHECK(mix.total() == doctest::Approx(1.0));
    CHECK(mix.pi_b_cont > 0.0);
    CHECK(mix.pi_a_cont > 0.0);

    // Quadrature oracle: classify each landing in the gap (e+, b) by scanning.
    const LimitMeasure lim = limit_measure(spec);
    const double rate = exit_rate_value(lim, {sets.e_minus(), sets.e_plus()});
    double up = 0.0, down = 0.0;
    const int n = 4000;
    for (int sign : {1, -1}) {
      const double lo = sign > 0 ? sets.e_plus() : -sets.e_minus();
      for (int i = 0; i < n; ++i) {
        const double u = lo + (1.0 - lo) * (i + 0.5) / n;
        const double w = sign * u;
        const double mass = lim.density(w) * (1.0 - lo) / n;
        const ExitSide side = scan_side(sets.x_star(), w, -1.0, 1.0);
        if (side == ExitSide::up) up += mass;
        if (side == ExitSide::down) down += mass;
      }
    }
    CHECK(mix.pi_b_cont == doctest::Approx(up / rate).epsilon(5e-3));
    CHECK(mix.pi_a_cont == doctest::Approx(down / rate).epsilon(5e-3));
    CHECK(mix.pi_b_jump == doctest::Approx(lim.mass_above(1.0) / rate).epsilon(1e-6));
  }
}

TEST_CASE("Gaussian comparison constant") {
  CHECK(gaussian_G(-1.0, 0.0).g == doctest::Approx(1.0));
  const GaussianComparison crit = gaussian_G(-0.5, -0.5);
  CHECK(crit.branch == GaussBranch::critical);
  CHECK(crit.g == doctest::Approx(1.5));
  const GaussianComparison osc = gaussian_G(0.0, -1.0);
  CHECK(osc.branch == GaussBranch::oscillatory);
  CHECK(osc.g == doctest::Approx((1.0 + std::sin(1.0)) / std::cos(1.0)));
  CHECK(*osc.time_integral == doctest::Approx(osc.g).epsilon(1e-4));
  CHECK(*osc.frequency_integral == doctest::Approx(osc.g).epsilon(1e-4));
  CHECK_THROWS_AS(gaussian_G(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(gaussian_G(-1.0, -3.0), DomainError);

  std::mt19937_64 gen(30);
  std::uniform_real_distribution<double> ua(-2.5, 0.9), ub(-2.0, 2.0);
  int tested = 0;
  while (tested < 30) {
    const double a = ua(gen), b = ub(gen);
    if (!inside_stability_region(a, b)) continue;
    const double lambda = -retarded_rightmost_root(a, b, 1.0);
    if (lambda < 0.1) continue;  // slow decay needs a long horizon
    ++tested;
    const GaussianComparison g = gaussian_G(a, b, tested <= 5);
    if (g.branch != GaussBranch::numeric_integral) CHECK(g.g == doctest::Approx(ou_delay_g(a, b)).epsilon(1e-9));
    CHECK(g.g == doctest::Approx(rk_g(a, b, std::max(60.0, 30.0 / lambda))).epsilon(1e-3));
    if (g.time_integral) CHECK(*g.time_integral == doctest::Approx(*g.frequency_integral).epsilon(1e-3));
  }

  const double k = gaussian_kramers(-1.0, 2.0, 0.5, -1.0, 0.0);
  CHECK(k == doctest::Approx(2.0));
  CHECK(gaussian_kramers(-2.0, 2.0, 0.5, -1.0, 0.0) == doctest::Approx(4.0 * k));
  CHECK_THROWS_AS(gaussian_kramers(1.0, 2.0, 0.5, -1.0, 0.0), ConfigError);
}

TEST_CASE("trivial domain scan") {
  ScanGrid grid;
  grid.a_min = -2.0;
  grid.a_max = 0.5;
  grid.a_points = 11;
  grid.b_min = -1.5;
  grid.b_max = 1.5;
  grid.b_points = 13;
  const auto cells = scan_trivial_domain(grid, 1e-2);
  REQUIRE(cells.size() == 143);
  CHECK(cells[0].a_tilde == -2.0);
  CHECK(cells[0].b_tilde == -1.5);
  CHECK(cells[1].a_tilde == doctest::Approx(-1.75));
  CHECK(cells[11].b_tilde == doctest::Approx(-1.25));

  auto cell = [&](std::size_t ia, std::size_t ib) -> const ScanCell& { return cells[ib * grid.a_points + ia]; };
  for (const auto& c : cells) {
    CHECK(c.valid == inside_stability_region(c.a_tilde, c.b_tilde));
    if (!c.valid) continue;
    CHECK(c.max_value >= 1.0);
    CHECK(c.min_value <= 0.0);
    // Nonnegative feedback on a decaying diagonal keeps x* in [0, 1].
    if (c.b_tilde >= 0.0 && c.a_tilde + c.b_tilde < 0.0) CHECK(c.trivial);
    if (c.b_tilde < -0.5 && c.a_tilde > -0.3) CHECK_FALSE(c.trivial);
  }
  CHECK(cell(4, 6).trivial);  // (-1, 0)

  // Trivial cells form one 4-connected component.
  std::vector<int> seen(cells.size(), 0);
  int components = 0;
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (!cells[s].trivial || seen[s]) continue;
    ++components;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      const std::size_t ia = i % grid.a_points, ib = i / grid.a_points;
      auto visit = [&](std::size_t ja, std::size_t jb) {
        const std::size_t j = jb * grid.a_points + ja;
        if (cell(ja, jb).trivial && !seen[j]) {
          seen[j] = 1;
          q.push(j);
        }
      };
      if (ia > 0) visit(ia - 1, ib);
      if (ia + 1 < grid.a_points) visit(ia + 1, ib);
      if (ib > 0) visit(ia, ib - 1);
      if (ib + 1 < grid.b_points) visit(ia, ib + 1);
    }
  }
  CHECK(components == 1);

  const auto serial = scan_trivial_domain(grid, 1e-2, 1);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(serial[i].max_value == cells[i].max_value);
  ScanGrid bad = grid;
  bad.a_points = 0;
  CHECK_THROWS_AS(scan_trivial_domain(bad, 1e-2), ConfigError);
}
