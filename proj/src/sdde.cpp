#include "kramers/sdde.hpp"

#include <algorithm>
#include <cmath>

#include "kramers/errors.hpp"

namespace kramers {

// ---------------------------------------------------------------------------
// DiffusionCoefficient

DiffusionCoefficient DiffusionCoefficient::constant(double f0) {
  DiffusionCoefficient c;
  c.kind_ = Kind::constant;
  c.f0_ = f0;
  return c;
}

DiffusionCoefficient DiffusionCoefficient::affine(double f0, std::vector<double> delays,
                                                  std::vector<double> slopes) {
  if (delays.size() != slopes.size()) throw ConfigError("affine coefficient needs one slope per delay");
  DiffusionCoefficient c;
  c.kind_ = Kind::affine;
  c.f0_ = f0;
  c.delays_ = std::move(delays);
  c.slopes_ = std::move(slopes);
  for (double k : c.slopes_) c.lipschitz_ += std::fabs(k);
  return c;
}

DiffusionCoefficient DiffusionCoefficient::custom(std::vector<double> delays,
                                                  std::function<double(std::span<const double>)> f,
                                                  double lipschitz) {
  if (!f) throw ConfigError("custom coefficient needs a function");
  DiffusionCoefficient c;
  c.kind_ = Kind::custom;
  c.delays_ = std::move(delays);
  c.fn_ = std::move(f);
  c.lipschitz_ = lipschitz;
  const std::vector<double> zeros(c.delays_.size(), 0.0);
  c.f0_ = c.fn_(zeros);
  return c;
}

double DiffusionCoefficient::operator()(std::span<const double> args) const {
  switch (kind_) {
    case Kind::constant:
      return f0_;
    case Kind::affine: {
      double v = f0_;
      for (std::size_t i = 0; i < slopes_.size(); ++i) v += slopes_[i] * args[i];
      return v;
    }
    case Kind::custom:
      return fn_(args);
  }
  return f0_;
}

void DiffusionCoefficient::validate(double horizon) const {
  if (f0_ == 0.0 || !std::isfinite(f0_)) throw ConfigError("noise coefficient needs F0 = f(0) != 0");
  for (double d : delays_) {
    if (!(d >= 0.0 && d <= horizon * (1 + 1e-12))) throw ConfigError("coefficient delay outside [0, r]");
  }
}

// ---------------------------------------------------------------------------
// Parameters and labels

std::string to_string(NoiseMode m) { return m == NoiseMode::marginal ? "marginal" : "decomposition"; }

NoiseMode parse_noise_mode(const std::string& name) {
  if (name == "marginal") return NoiseMode::marginal;
  if (name == "decomposition") return NoiseMode::decomposition;
  throw ConfigError("unknown noise mode '" + name + "'");
}

std::string to_string(Taxonomy t) {
  switch (t) {
    case Taxonomy::jump_exit: return "jump";
    case Taxonomy::growth_exit: return "growth";
    case Taxonomy::censored: return "censored";
  }
  return "censored";
}

void SimParams::validate(bool auto_t_max) const {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in [0, 1]");
  if (!(a < 0.0 && b > 0.0)) throw ConfigError("interval must satisfy a < 0 < b");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_max > 0.0 || (auto_t_max && t_max <= 0.0)) || !std::isfinite(t_max)) throw ConfigError("t_max must be positive and finite");
  if (!(rho <= 0.0 || rho > 1.0)) throw ConfigError("rho must exceed 1 (or be <= 0 for the default)");
}

double SimParams::resolved_rho(double f0) const {
  if (rho > 0.0) return rho;
  const double e = eps > 0.0 ? eps : 1.0;
  return std::max(1.5, 0.5 * std::min(-a, b) / (e * std::fabs(f0)));
}

// ---------------------------------------------------------------------------
// Increment sources

MarginalSource::MarginalSource(const NoiseSpec& spec, double dt, double rho, Rng rng)
    : sampler_(spec, dt), rho_(rho), rng_(rng) {}

NoiseStep MarginalSource::next() {
  const double dz = sampler_(rng_);
  return {dz, std::fabs(dz) > rho_};
}

DecomposedSource::DecomposedSource(std::shared_ptr<const JumpDecomposition> decomposition, double dt, Rng rng)
    : decomposition_(std::move(decomposition)), dt_(dt), rng_(rng) {
  next_jump_ = decomposition_->large_rate() > 0.0 ? decomposition_->sample_wait(rng_)
                                                   : std::numeric_limits<double>::infinity();
}

NoiseStep DecomposedSource::next() {
  NoiseStep step{decomposition_->sample_small(dt_, rng_), false};
  const double end = t_ + dt_;
  while (next_jump_ <= end) {
    step.increment += decomposition_->sample_large(rng_);
    step.large = true;
    next_jump_ += decomposition_->sample_wait(rng_);
  }
  t_ = end;
  return step;
}

std::shared_ptr<const JumpDecomposition> make_decomposition(const NoiseSpec& spec, const SimParams& params,
                                                            double f0) {
  const double rho = params.resolved_rho(f0);
  return std::make_shared<JumpDecomposition>(decompose(spec, rho, params.small_cutoff));
}

std::unique_ptr<IncrementSource> make_source(const NoiseSpec& spec, const SimParams& params, double f0, Rng rng,
                                             std::shared_ptr<const JumpDecomposition> shared) {
  if (params.mode == NoiseMode::marginal || !spec.has_jumps()) {
    return std::make_unique<MarginalSource>(spec, params.dt, params.resolved_rho(f0), rng);
  }
  if (!shared) shared = make_decomposition(spec, params, f0);
  return std::make_unique<DecomposedSource>(std::move(shared), params.dt, rng);
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

// Shared Euler-Maruyama kernel. The state lives in a sliding window holding
// the last `keep` values so long runs need no full-path storage.
class Stepper {
 public:
  Stepper(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const SimParams& params)
      : lags_(measure.discretize(params.dt)), coef_(coef), eps_(params.eps), dt_(params.dt),
        clip_lo_(2.0 * params.a), clip_hi_(2.0 * params.b) {
    for (double d : coef.delays()) coef_lags_.push_back(grid_steps(d, params.dt));
    args_.resize(coef_lags_.size());
  }

  // x points at the current value x_k; earlier values at x[-lag].
  double advance(const double* x, double dz) {
    double drift = 0.0;
    for (const auto& lw : lags_) drift += lw.weight * x[-static_cast<std::ptrdiff_t>(lw.lag)];
    double next = x[0] + dt_ * drift;
    if (eps_ != 0.0) {
      for (std::size_t i = 0; i < coef_lags_.size(); ++i) {
        args_[i] = std::clamp(x[-static_cast<std::ptrdiff_t>(coef_lags_[i])], clip_lo_, clip_hi_);
      }
      next += eps_ * coef_(args_) * dz;
    }
    return next;
  }

 private:
  std::vector<LagWeight> lags_;
  const DiffusionCoefficient& coef_;
  std::vector<std::size_t> coef_lags_;
  std::vector<double> args_;
  double eps_;
  double dt_;
  double clip_lo_;
  double clip_hi_;
};

void check_grid(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const SimParams& params,
                const Segment& initial) {
  params.validate();
  coef.validate(measure.horizon());
  if (std::fabs(initial.dt() - params.dt) > 1e-12 * params.dt) throw ConfigError("initial segment step differs from dt");
  if (std::fabs(initial.horizon() - measure.horizon()) > 1e-12 * measure.horizon()) {
    throw ConfigError("initial segment length differs from the memory horizon");
  }
}

}  // namespace

GridPath simulate_path(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const SimParams& params,
                       const Segment& initial, double horizon, IncrementSource& source,
                       std::vector<double>* increments) {
  check_grid(measure, coef, params, initial);
  if (!(horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
  Stepper stepper(measure, coef, params);
  const std::size_t n_r = initial.steps();
  const auto n_t = static_cast<std::size_t>(std::ceil(horizon / params.dt - 1e-9));
  std::vector<double> x(n_r + n_t + 1);
  std::copy(initial.values().begin(), initial.values().end(), x.begin());
  if (increments) {
    increments->clear();
    increments->reserve(n_t);
  }
  for (std::size_t k = n_r; k < n_r + n_t; ++k) {
    const double dz = params.eps != 0.0 ? source.next().increment : 0.0;
    if (increments) increments->push_back(dz);
    x[k + 1] = stepper.advance(&x[k], dz);
    if (!std::isfinite(x[k + 1])) {
      throw DivergenceError(k + 1 - n_r, "stochastic path diverged at step " + std::to_string(k + 1 - n_r));
    }
  }
  return GridPath(-measure.horizon(), params.dt, std::move(x), true);
}

GridPath simulate_path(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const NoiseSpec& spec,
                       const SimParams& params, const Segment& initial, double horizon, Rng& rng,
                       std::vector<double>* increments) {
  auto source = make_source(spec, params, coef.base(), rng);
  return simulate_path(measure, coef, params, initial, horizon, *source, increments);
}

GridPath additive_convolution_path(const GridPath& x_star, std::span<const double> increments, double eps,
                                   const GridPath& deterministic) {
  const double dt = deterministic.dt();
  if (std::fabs(x_star.dt() - dt) > 1e-12 * dt) throw LengthMismatchError("x* and the deterministic path use different steps");
  const std::size_t z = deterministic.zero_index();
  const std::size_t n = increments.size();
  if (deterministic.size() != z + n + 1) {
    throw LengthMismatchError("deterministic path must have one value per increment after t = 0");
  }
  const auto xs = x_star.from_zero();
  if (xs.size() < n) throw LengthMismatchError("x* shorter than the increment record");

  std::vector<double> out(deterministic.values().begin(), deterministic.values().end());
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += xs[k - 1 - j] * increments[j];
    out[z + k] += eps * acc;
  }
  return GridPath(deterministic.start(), dt, std::move(out), deterministic.has_initial_segment());
}

ExitRecord first_exit(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const SimParams& params,
                      const Segment& initial, IncrementSource& source) {
  check_grid(measure, coef, params, initial);
  for (double v : initial.values()) {
    if (v < params.a || v > params.b) throw ConfigError("initial segment leaves [a, b]");
  }
  if (params.check_no_exit) {
    const double horizon = std::min(params.t_max, 50.0 * std::max(measure.horizon(), 1.0));
    const GridPath det = solve_dde(measure, initial, horizon, params.dt);
    for (double v : det.from_zero()) {
      if (v < params.a || v > params.b) throw DomainError("noise-free solution leaves [a, b]");
    }
  }

  Stepper stepper(measure, coef, params);
  const std::size_t n_r = initial.steps();
  const auto n_max = static_cast<std::size_t>(std::ceil(params.t_max / params.dt - 1e-9));
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<double> window(n_r + 1 + kChunk);
  std::copy(initial.values().begin(), initial.values().end(), window.begin());
  std::size_t pos = n_r;  // index of x_k in window

  ExitRecord rec;
  rec.seed = params.seed;
  double last_jump = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_max; ++k) {
    if (pos + 1 == window.size()) {
      std::copy(window.end() - static_cast<std::ptrdiff_t>(n_r + 1), window.end(), window.begin());
      pos = n_r;
    }
    NoiseStep step{};
    if (params.eps != 0.0) step = source.next();
    const double t_next = static_cast<double>(k + 1) * params.dt;
    if (step.large) last_jump = t_next;
    const double next = stepper.advance(&window[pos], step.increment);
    window[++pos] = next;
    if (!(next >= params.a && next <= params.b)) {
      if (!std::isfinite(next)) throw DivergenceError(k + 1, "stochastic path diverged at step " + std::to_string(k + 1));
      rec.tau = t_next;
      rec.location = next;
      rec.censored = false;
      rec.taxonomy = step.large ? Taxonomy::jump_exit : Taxonomy::growth_exit;
      rec.overshoot = next > params.b ? next - params.b : params.a - next;
      if (std::isfinite(last_jump)) rec.last_jump_gap = t_next - last_jump;
      return rec;
    }
  }
  rec.tau = static_cast<double>(n_max) * params.dt;
  rec.location = window[pos];
  rec.censored = true;
  rec.taxonomy = Taxonomy::censored;
  if (std::isfinite(last_jump)) rec.last_jump_gap = rec.tau - last_jump;
  return rec;
}

ExitRecord first_exit(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const NoiseSpec& spec,
                      const SimParams& params, const Segment& initial) {
  auto source = make_source(spec, params, coef.base(), Rng(params.seed));
  return first_exit(measure, coef, params, initial, *source);
}

}  // namespace kramers
