#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kramers/errors.hpp"
#include "kramers/random.hpp"
#include "kramers/sdde.hpp"

using namespace kramers;

namespace {

const NoiseSpec kStable = NoiseSpec::stable_from_levy_density(1.5, 1.0, 1.0);

SimParams params(double eps, double dt = 1e-3, double t_max = 100.0, std::uint64_t seed = 1) {
  SimParams p;
  p.eps = eps;
  p.dt = dt;
  p.t_max = t_max;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("diffusion coefficient") {
  CHECK_THROWS_AS(DiffusionCoefficient::constant(0.0).validate(1.0), ConfigError);
  CHECK_THROWS_AS(DiffusionCoefficient::affine(1.0, {2.0}, {0.5}).validate(1.0), ConfigError);
  CHECK_THROWS_AS(DiffusionCoefficient::affine(1.0, {0.5}, {}), ConfigError);

  const auto aff = DiffusionCoefficient::affine(0.8, {0.0, 0.5}, {0.3, -0.2});
  CHECK(aff.base() == 0.8);
  CHECK(aff.lipschitz() == doctest::Approx(0.5));
  const std::vector<double> at{1.0, 2.0};
  CHECK(aff(at) == doctest::Approx(0.8 + 0.3 - 0.4));

  const auto sat = DiffusionCoefficient::custom({0.0, 0.25}, [](std::span<const double> x) {
    return 1.0 + 0.5 * std::tanh(x[0]) - 0.25 * std::sin(x[1]);
  }, 0.75);
  CHECK(sat.base() == 1.0);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (const auto* f : {&aff, &sat}) {
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> x{u(gen), u(gen)}, y{u(gen), u(gen)};
      const double dist = std::max(std::fabs(x[0] - y[0]), std::fabs(x[1] - y[1]));
      CHECK(std::fabs((*f)(x) - (*f)(y)) <= f->lipschitz() * dist + 1e-12);
    }
  }
}

TEST_CASE("sim parameter validation") {
  CHECK_THROWS_AS(params(1.5).validate(), ConfigError);
  SimParams p = params(0.1);
  p.a = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params(0.1, 1e-3, 0.0);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_NOTHROW(p.validate(true));
  p = params(0.1);
  p.rho = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK(params(0.1).resolved_rho(1.0) == doctest::Approx(5.0));
  CHECK(params(0.9).resolved_rho(1.0) == 1.5);
  CHECK_THROWS_AS(parse_noise_mode("exact"), ConfigError);
}

TEST_CASE("simulate_path") {
  const auto mu = MemoryMeasure::retarded(2.4, -2.8, 0.3);
  const auto coef = DiffusionCoefficient::constant(1.0);
  const double dt = 1e-3;
  std::vector<double> phi(301);
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = 0.2 * std::cos(0.01 * static_cast<double>(i));
  const Segment init(0.3, dt, phi);

  SUBCASE("noise off reproduces the deterministic solver") {
    Rng rng(1);
    const GridPath x = simulate_path(mu, coef, kStable, params(0.0), init, 5.0, rng);
    const GridPath d = solve_dde(mu, init, 5.0, dt);
    REQUIRE(x.size() == d.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == d[i]);
  }
  SUBCASE("scripted increments enter with eps f") {
    std::vector<NoiseStep> steps(10);
    steps[3].increment = 2.0;
    ScriptedSource src(steps);
    const auto aff = DiffusionCoefficient::affine(0.5, {0.0}, {1.0});
    const MemoryMeasure zero(0.3, {});
    const GridPath x = simulate_path(zero, aff, params(0.1), Segment::constant(0.3, dt, 0.2), 0.01, src);
    const std::size_t z = x.zero_index();
    CHECK(x[z + 3] == 0.2);
    CHECK(x[z + 4] == doctest::Approx(0.2 + 0.1 * (0.5 + 0.2) * 2.0));
    CHECK(x[z + 10] == x[z + 4]);
  }
  SUBCASE("coefficient arguments are clipped to twice the interval") {
    std::vector<NoiseStep> steps{{1.0, false}};
    ScriptedSource src(steps);
    const auto aff = DiffusionCoefficient::affine(1.0, {0.0}, {1.0});
    const MemoryMeasure zero(0.3, {});
    const GridPath x = simulate_path(zero, aff, params(1.0), Segment::constant(0.3, dt, 0.9), dt, src);
    CHECK(x[x.size() - 1] == doctest::Approx(0.9 + 1.0 * (1.0 + 0.9)));
    std::vector<NoiseStep> again{{1.0, false}};
    ScriptedSource src2(again);
    SimParams wide = params(1.0);
    wide.a = -0.2;
    wide.b = 0.3;
    const GridPath y = simulate_path(zero, aff, wide, Segment::constant(0.3, dt, 0.9), dt, src2);
    CHECK(y[y.size() - 1] == doctest::Approx(0.9 + 1.0 * (1.0 + 0.6)));
  }
  SUBCASE("increments are recorded") {
    Rng rng(4);
    std::vector<double> inc;
    simulate_path(mu, coef, kStable, params(0.1), init, 1.0, rng, &inc);
    CHECK(inc.size() == 1000);
  }
}

TEST_CASE("additive convolution identity") {
  SUBCASE("zero increments give the deterministic part") {
    const auto mu = MemoryMeasure::retarded(-1.0, 0.5, 1.0);
    const GridPath xs = fundamental_solution(mu, 2.0, 1e-2);
    const GridPath det = solve_dde(mu, Segment::constant(1.0, 1e-2, 0.3), 2.0, 1e-2);
    const std::vector<double> zeros(200, 0.0);
    const GridPath out = additive_convolution_path(xs, zeros, 0.5, det);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == det[i]);
  }
  SUBCASE("a single increment propagates through x*") {
    const auto mu = MemoryMeasure::retarded(0.0, -1.0, 1.0);
    const double dt = 1e-2;
    const GridPath xs = fundamental_solution(mu, 3.0, dt);
    const GridPath det = solve_dde(mu, Segment::constant(1.0, dt, 0.0), 3.0, dt);
    std::vector<double> inc(300, 0.0);
    inc[9] = 1.0;  // enters at t_1 = 0.1
    const GridPath out = additive_convolution_path(xs, inc, 0.2, det);
    for (double t = 0.0; t <= 3.0 + 1e-9; t += 0.05) {
      const double expect = t < 0.1 - 1e-9 ? 0.0 : 0.2 * xs.at(std::round((t - 0.1) / dt) * dt);
      CHECK(out.at(std::round(t / dt) * dt) == doctest::Approx(expect));
    }
  }
  SUBCASE("length mismatch") {
    const auto mu = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
    const GridPath xs = fundamental_solution(mu, 1.0, 1e-2);
    const GridPath det = solve_dde(mu, Segment::constant(1.0, 1e-2, 0.0), 1.0, 1e-2);
    const std::vector<double> inc(50, 0.0);
    CHECK_THROWS_AS(additive_convolution_path(xs, inc, 0.1, det), LengthMismatchError);
  }
  SUBCASE("agrees with simulate_path on random stable configurations") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> ua(-2.0, 0.8), ub(-1.5, 1.5), uphi(-0.5, 0.5);
    int tested = 0;
    while (tested < 20) {
      const double r = 0.5, at = ua(gen), bt = ub(gen);
      if (!inside_stability_region(at, bt)) continue;
      const auto mu = MemoryMeasure::retarded(at / r, bt / r, r);
      const double dt = 1e-3, horizon = 5.0;
      const Segment init = Segment::constant(r, dt, uphi(gen));
      Rng rng(replicate_seed(99, static_cast<std::uint64_t>(tested)));
      std::vector<double> inc;
      const GridPath x = simulate_path(mu, DiffusionCoefficient::constant(1.0), kStable, params(0.05), init, horizon,
                                       rng, &inc);
      const GridPath conv = additive_convolution_path(fundamental_solution(mu, horizon, dt), inc, 0.05,
                                                      solve_dde(mu, init, horizon, dt));
      double err = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        err = std::max(err, std::fabs(x[i] - conv[i]));
        scale = std::max(scale, std::fabs(x[i]));
      }
      CHECK(err <= 10.0 * dt * (1.0 + scale));
      ++tested;
    }
  }
}

TEST_CASE("Ornstein-Uhlenbeck stationary variance") {
  const auto mu = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
  const double eps = 0.3, sigma2 = 2.0, dt = 1e-3;
  Rng rng(8);
  const GridPath x = simulate_path(mu, DiffusionCoefficient::constant(1.0), NoiseSpec::gaussian(sigma2), params(eps, dt),
                                   Segment::constant(1.0, dt, 0.0), 4000.0, rng);
  double m = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = x.index_of(20.0); i < x.size(); ++i, ++n) {
    m += x[i];
    m2 += x[i] * x[i];
  }
  m /= static_cast<double>(n);
  const double var = m2 / static_cast<double>(n) - m * m;
  CHECK(var == doctest::Approx(eps * eps * sigma2 / 2.0).epsilon(0.1));
}

TEST_CASE("first exit") {
  const auto coef = DiffusionCoefficient::constant(1.0);
  const auto nodelay = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
  const Segment zero = Segment::constant(1.0, 1e-3, 0.0);

  SUBCASE("no noise means censoring") {
    const ExitRecord rec = first_exit(nodelay, coef, kStable, params(0.0, 1e-3, 50.0), zero);
    CHECK(rec.censored);
    CHECK(rec.taxonomy == Taxonomy::censored);
    CHECK(rec.tau == doctest::Approx(50.0));
    CHECK(std::isnan(rec.last_jump_gap));
  }
  SUBCASE("scripted large jump exits at once") {
    std::vector<NoiseStep> steps(500);
    steps[199] = {12.0, true};
    ScriptedSource src(steps);
    SimParams p = params(0.1, 1e-3, 10.0);
    p.mode = NoiseMode::decomposition;
    const ExitRecord rec = first_exit(nodelay, DiffusionCoefficient::constant(1.5), p, zero, src);
    CHECK_FALSE(rec.censored);
    CHECK(rec.taxonomy == Taxonomy::jump_exit);
    CHECK(rec.tau == doctest::Approx(0.2));
    CHECK(rec.location == doctest::Approx(0.1 * 12.0 * 1.5));
    CHECK(rec.overshoot == doctest::Approx(0.8));
    CHECK(rec.last_jump_gap == doctest::Approx(0.0));
  }
  SUBCASE("a sub-threshold jump followed by transient growth") {
    // x' = 8x - 12x(t - 0.05) overshoots by M ~ 1.49, so a jump to 0.8 exits later.
    const auto mu = MemoryMeasure::retarded(8.0, -12.0, 0.05);
    std::vector<NoiseStep> steps(50);
    steps[9] = {8.0, true};
    ScriptedSource src(steps);
    const ExitRecord rec = first_exit(mu, coef, params(0.1, 1e-3, 10.0), Segment::constant(0.05, 1e-3, 0.0), src);
    CHECK_FALSE(rec.censored);
    CHECK(rec.taxonomy == Taxonomy::growth_exit);
    CHECK(rec.tau > 0.01);
    CHECK(rec.location > 1.0);
    CHECK(rec.location < 1.02);
    CHECK(rec.last_jump_gap == doctest::Approx(rec.tau - 0.01));
  }
  SUBCASE("initial segment outside the interval") {
    CHECK_THROWS_AS(first_exit(nodelay, coef, kStable, params(0.1), Segment::constant(1.0, 1e-3, 2.0)), ConfigError);
    SimParams p = params(0.1);
    p.check_no_exit = true;
    const auto unstable = MemoryMeasure::retarded(0.5, 0.0, 1.0);
    CHECK_THROWS_AS(first_exit(unstable, coef, kStable, p, Segment::constant(1.0, 1e-3, 0.5)), DomainError);
  }
  SUBCASE("reproducible and contained") {
    const auto mu = MemoryMeasure::retarded(2.4, -2.8, 0.3);
    const Segment init = Segment::constant(0.3, 1e-3, 0.0);
    for (std::uint64_t i = 0; i < 100; ++i) {
      const SimParams p = params(0.2, 1e-3, 200.0, replicate_seed(5, i));
      const ExitRecord a = first_exit(mu, coef, kStable, p, init);
      const ExitRecord b = first_exit(mu, coef, kStable, p, init);
      CHECK(a.tau == b.tau);
      CHECK(a.location == b.location);
      CHECK(a.taxonomy == b.taxonomy);
      if (a.censored) continue;
      CHECK((a.location < p.a || a.location > p.b));
      Rng rng(p.seed);
      const GridPath path = simulate_path(mu, coef, kStable, p, init, a.tau, rng);
      CHECK(path[path.size() - 1] == a.location);
      for (std::size_t k = path.zero_index(); k + 1 < path.size(); ++k) {
        REQUIRE(path[k] >= p.a);
        REQUIRE(path[k] <= p.b);
      }
      // Raising the cap leaves a finished record alone.
      SimParams longer = p;
      longer.t_max = 2.0 * p.t_max;
      const ExitRecord c = first_exit(mu, coef, kStable, longer, init);
      CHECK(c.tau == a.tau);
      CHECK(c.location == a.location);
    }
  }
  SUBCASE("long runs cross the window boundary") {
    bool found = false;
    for (std::uint64_t i = 0; i < 20 && !found; ++i) {
      const SimParams p = params(0.02, 1e-3, 2000.0, replicate_seed(7, i));
      const ExitRecord rec = first_exit(nodelay, coef, kStable, p, zero);
      if (rec.censored || rec.tau < 70.0) continue;
      found = true;
      Rng rng(p.seed);
      const GridPath path = simulate_path(nodelay, coef, kStable, p, zero, rec.tau, rng);
      CHECK(path[path.size() - 1] == rec.location);
    }
    CHECK(found);
  }
  SUBCASE("taxonomy follows the large-jump flag in decomposition mode") {
    const auto mu = MemoryMeasure::retarded(8.0, -12.0, 0.05);
    const Segment init = Segment::constant(0.05, 1e-3, 0.0);
    SimParams p = params(0.1, 1e-3, 500.0);
    p.mode = NoiseMode::decomposition;
    const auto shared = make_decomposition(kStable, p, 1.0);
    int jumps = 0, growth = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      p.seed = replicate_seed(9, i);
      auto src = make_source(kStable, p, 1.0, Rng(p.seed), shared);
      const ExitRecord rec = first_exit(mu, coef, p, init, *src);
      if (rec.taxonomy == Taxonomy::jump_exit) {
        ++jumps;
        CHECK(rec.last_jump_gap == 0.0);
      } else if (rec.taxonomy == Taxonomy::growth_exit) {
        ++growth;
        CHECK((std::isnan(rec.last_jump_gap) || rec.last_jump_gap > 0.0));
      }
    }
    CHECK(jumps > 0);
    CHECK(growth > 0);
  }
}

TEST_CASE("marginal and decomposition modes agree in law") {
  const auto mu = MemoryMeasure::retarded(-1.0, 0.0, 1.0);
  const auto coef = DiffusionCoefficient::constant(1.0);
  const Segment zero = Segment::constant(1.0, 1e-3, 0.0);
  auto mean_tau = [&](NoiseMode mode, double& se) {
    SimParams p = params(0.15, 1e-3, 1000.0);
    p.mode = mode;
    double s = 0.0, s2 = 0.0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
      p.seed = replicate_seed(mode == NoiseMode::marginal ? 1 : 2, static_cast<std::uint64_t>(i));
      const double t = first_exit(mu, coef, kStable, p, zero).tau;
      s += t;
      s2 += t * t;
    }
    const double m = s / n;
    se = std::sqrt((s2 / n - m * m) / n);
    return m;
  };
  double se1 = 0.0, se2 = 0.0;
  const double m1 = mean_tau(NoiseMode::marginal, se1);
  const double m2 = mean_tau(NoiseMode::decomposition, se2);
  CHECK(std::fabs(m1 - m2) <= 3.0 * std::hypot(se1, se2));
}
