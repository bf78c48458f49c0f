#include "kramers/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

// pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "kramers/errors.hpp"
#include "kramers/quadrature.hpp"

namespace kramers {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;

bool is_power_density(const NoiseSpec& s) {
  return s.variant == NoiseVariant::alpha_stable || s.variant == NoiseVariant::power_tail;
}

// Lower edge of the support of |z|: power tails with alpha >= 2 live on |z| > 1
// so that int (z^2 ^ 1) nu stays finite.
double support_floor(const NoiseSpec& s) {
  return (s.variant == NoiseVariant::power_tail && s.alpha >= 2.0) ? 1.0 : 0.0;
}

// int_lo^hi f, with hi possibly infinite, through the log map z = e^s.
template <class F>
double integrate_log(F&& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (std::isinf(hi)) return quad::integrate_to_infinity(f, lo);
  if (lo <= 0.0) {
    // Small-z singular part: z = hi * e^{-s}.
    auto g = [&](double s) {
      const double z = hi * std::exp(-s);
      const double v = z > 0.0 ? f(z) * z : 0.0;
      return std::isfinite(v) ? v : 0.0;  // 0 * inf at subnormal z
    };
    return quad::integrate_to_infinity(g, 0.0);
  }
  auto g = [&](double s) {
    const double z = std::exp(s);
    return f(z) * z;
  };
  return quad::integrate(g, std::log(lo), std::log(hi));
}

}  // namespace

std::string to_string(NoiseVariant v) {
  switch (v) {
    case NoiseVariant::alpha_stable: return "alpha_stable";
    case NoiseVariant::power_tail: return "power_tail";
    case NoiseVariant::tempered: return "tempered";
    case NoiseVariant::contaminated: return "contaminated";
    case NoiseVariant::gaussian: return "gaussian";
  }
  return "unknown";
}

NoiseVariant parse_noise_variant(const std::string& name) {
  for (auto v : {NoiseVariant::alpha_stable, NoiseVariant::power_tail, NoiseVariant::tempered,
                 NoiseVariant::contaminated, NoiseVariant::gaussian}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown noise variant '" + name + "'");
}

// ---------------------------------------------------------------------------
// NoiseSpec

NoiseSpec NoiseSpec::alpha_stable(double alpha, double beta, double c) {
  NoiseSpec s;
  s.variant = NoiseVariant::alpha_stable;
  s.alpha = alpha;
  s.beta = beta;
  s.c = c;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::stable_from_levy_density(double alpha, double c_minus, double c_plus) {
  if (!(c_minus >= 0.0 && c_plus >= 0.0 && c_minus + c_plus > 0.0)) {
    throw ConfigError("stable density coefficients must be nonnegative and not both zero");
  }
  if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("stable index must lie in (0, 2)");
  const double total = c_minus + c_plus;
  const double beta = (c_plus - c_minus) / total;
  double c = 0.0;
  if (alpha == 1.0) {
    c = total * kPi / 2.0;
  } else {
    c = total * std::fabs(boost::math::tgamma(-alpha) * std::cos(kPi * alpha / 2.0));
  }
  return alpha_stable(alpha, beta, c);
}

NoiseSpec NoiseSpec::power_tail(double alpha, double c_minus, double c_plus) {
  NoiseSpec s;
  s.variant = NoiseVariant::power_tail;
  s.alpha = alpha;
  s.c_minus = c_minus;
  s.c_plus = c_plus;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::tempered(double alpha1, double alpha2, double c_minus, double c_plus) {
  NoiseSpec s;
  s.variant = NoiseVariant::tempered;
  s.alpha1 = alpha1;
  s.alpha2 = alpha2;
  s.c_minus = c_minus;
  s.c_plus = c_plus;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::contaminated(double alpha, double l_minus, double l_plus) {
  NoiseSpec s;
  s.variant = NoiseVariant::contaminated;
  s.alpha = alpha;
  s.c_minus = l_minus;
  s.c_plus = l_plus;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::gaussian(double sigma2, double drift) {
  NoiseSpec s;
  s.variant = NoiseVariant::gaussian;
  s.sigma2 = sigma2;
  s.drift = drift;
  s.validate();
  return s;
}

void NoiseSpec::validate() const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2 must be >= 0");
  if (!std::isfinite(drift)) throw ConfigError("drift must be finite");
  auto check_pair = [&](double lm, double lp) {
    if (!(lm >= 0.0 && lp >= 0.0 && lm + lp > 0.0) || !std::isfinite(lm + lp)) {
      throw ConfigError("tail coefficients c_minus, c_plus must be >= 0 with positive sum");
    }
  };
  switch (variant) {
    case NoiseVariant::alpha_stable:
      if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("alpha_stable needs alpha in (0, 2)");
      if (!(beta >= -1.0 && beta <= 1.0)) throw ConfigError("skewness beta must lie in [-1, 1]");
      if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("stable scale c must be positive");
      break;
    case NoiseVariant::power_tail:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("power_tail needs alpha > 0");
      check_pair(c_minus, c_plus);
      break;
    case NoiseVariant::tempered:
      if (!(alpha1 > 0.0 && alpha1 < 2.0)) throw ConfigError("tempered needs alpha1 in (0, 2)");
      if (!(alpha2 > 0.0) || !std::isfinite(alpha2)) throw ConfigError("tempered needs alpha2 > 0");
      check_pair(c_minus, c_plus);
      break;
    case NoiseVariant::contaminated:
      if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("contaminated needs alpha in (0, 2)");
      check_pair(c_minus, c_plus);
      if (c_minus * c_plus == 0.0) {
        throw ConfigError("contaminated limits l_minus, l_plus must both be positive");
      }
      break;
    case NoiseVariant::gaussian:
      break;
  }
}

double NoiseSpec::tail_index() const noexcept {
  return variant == NoiseVariant::tempered ? alpha1 + alpha2 : alpha;
}

double NoiseSpec::stable_c_plus() const noexcept {
  if (alpha == 1.0) return c * (1.0 + beta) / kPi;
  return c * (1.0 + beta) / (2.0 * std::fabs(boost::math::tgamma(-alpha) * std::cos(kPi * alpha / 2.0)));
}

double NoiseSpec::stable_c_minus() const noexcept {
  if (alpha == 1.0) return c * (1.0 - beta) / kPi;
  return c * (1.0 - beta) / (2.0 * std::fabs(boost::math::tgamma(-alpha) * std::cos(kPi * alpha / 2.0)));
}

double NoiseSpec::density(double z) const noexcept {
  const double az = std::fabs(z);
  if (az == 0.0) return 0.0;
  switch (variant) {
    case NoiseVariant::alpha_stable:
      return (z < 0 ? stable_c_minus() : stable_c_plus()) * std::pow(az, -1.0 - alpha);
    case NoiseVariant::power_tail:
      if (az <= support_floor(*this)) return 0.0;
      return (z < 0 ? c_minus : c_plus) * std::pow(az, -1.0 - alpha);
    case NoiseVariant::tempered:
      return (z < 0 ? c_minus : c_plus) * std::pow(az, -1.0 - alpha1) * std::pow(1.0 + az * az, -alpha2 / 2.0);
    case NoiseVariant::contaminated: {
      const double slow = (2.0 + az) / (1.0 + az);
      return (z < 0 ? c_minus : c_plus) * slow * std::pow(az, -1.0 - alpha);
    }
    case NoiseVariant::gaussian:
      return 0.0;
  }
  return 0.0;
}

double NoiseSpec::tail_above(double x) const {
  if (!(x > 0.0)) throw InfiniteMassError("tail mass needs x > 0");
  if (!has_jumps()) return 0.0;
  if (is_power_density(*this)) {
    const double cp = variant == NoiseVariant::alpha_stable ? stable_c_plus() : c_plus;
    return cp * std::pow(std::max(x, support_floor(*this)), -alpha) / alpha;
  }
  return integrate_log([&](double z) { return density(z); }, x, INFINITY);
}

double NoiseSpec::tail_below(double x) const {
  if (!(x > 0.0)) throw InfiniteMassError("tail mass needs x > 0");
  if (!has_jumps()) return 0.0;
  if (is_power_density(*this)) {
    const double cm = variant == NoiseVariant::alpha_stable ? stable_c_minus() : c_minus;
    return cm * std::pow(std::max(x, support_floor(*this)), -alpha) / alpha;
  }
  return integrate_log([&](double z) { return density(-z); }, x, INFINITY);
}

double NoiseSpec::triplet_drift() const noexcept {
  if (variant != NoiseVariant::alpha_stable) return drift;
  const double diff = stable_c_plus() - stable_c_minus();
  if (alpha < 1.0) return drift + diff / (1.0 - alpha);
  if (alpha > 1.0) return drift - diff / (alpha - 1.0);
  return drift - diff * (1.0 - kEulerGamma);
}

LimitMeasure limit_measure(const NoiseSpec& spec) {
  if (!spec.has_jumps()) throw DomainError("gaussian noise has no heavy-tailed limit measure");
  double lm = spec.c_minus, lp = spec.c_plus;
  if (spec.variant == NoiseVariant::alpha_stable) {
    lm = spec.stable_c_minus();
    lp = spec.stable_c_plus();
  }
  const double alpha = spec.tail_index();
  return {alpha, alpha * lm / (lm + lp), alpha * lp / (lm + lp)};
}

double tail_mass(const NoiseSpec& spec, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
  return spec.tail_above(1.0 / eps) + spec.tail_below(1.0 / eps);
}

double limit_tail(const NoiseSpec& spec, double v) {
  if (v == 0.0) throw InfiniteMassError("limit measure of a half line at 0 is infinite");
  const LimitMeasure lim = limit_measure(spec);
  return v > 0.0 ? lim.mass_above(v) : lim.mass_below(v);
}

StableDraw::StableDraw(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (alpha != 1.0) {
    const double t = beta * std::tan(kPi * alpha / 2.0);
    shift_ = std::atan(t) / alpha;
    scale_ = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
    inv_alpha_ = 1.0 / alpha;
    outer_ = (1.0 - alpha) / alpha;
  }
}

double StableDraw::operator()(Rng& rng) const {
  const double v = kPi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  if (alpha_ == 1.0) {
    const double h = kPi / 2.0 + beta_ * v;
    return (2.0 / kPi) * (h * std::tan(v) - beta_ * std::log((kPi / 2.0) * w * std::cos(v) / h));
  }
  const double av = alpha_ * (v + shift_);
  return scale_ * std::sin(av) / std::pow(std::cos(v), inv_alpha_) * std::pow(std::cos(v - av) / w, outer_);
}

double standard_stable(double alpha, double beta, Rng& rng) { return StableDraw(alpha, beta)(rng); }

// ---------------------------------------------------------------------------
// MagnitudeTable

MagnitudeTable::MagnitudeTable(const NoiseSpec& spec, int sign, double lo, double hi, std::size_t knots)
    : sign_(sign >= 0 ? 1 : -1), lo_(lo), hi_(hi), unbounded_(std::isinf(hi)) {
  if (!(lo > 0.0) || !(hi > lo) || knots < 8) throw ConfigError("magnitude table needs 0 < lo < hi");
  auto f = [&](double x) { return spec.density(sign_ * x); };

  double top = hi;
  double far_tail = 0.0;
  if (unbounded_) {
    const double total = integrate_log(f, lo, INFINITY);
    top = lo;
    do {
      top *= 10.0;
      far_tail = integrate_log(f, top, INFINITY);
    } while (far_tail > 1e-16 * total && top < 1e280);
  }
  if (!(top > lo)) throw ConfigError("empty magnitude range");

  std::vector<double> lx(knots);
  const double l0 = std::log(lo), l1 = std::log(top);
  for (std::size_t i = 0; i < knots; ++i) {
    lx[i] = l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(knots - 1);
  }
  lx.back() = l1;
  // Cell masses by 10-point Gauss-Legendre in log x.
  std::vector<double> cell(knots - 1);
  for (std::size_t i = 0; i + 1 < knots; ++i) {
    auto g = [&](double s) {
      const double x = std::exp(s);
      return f(x) * x;
    };
    cell[i] = boost::math::quadrature::gauss<double, 10>::integrate(g, lx[i], lx[i + 1]);
  }

  std::vector<double> keys(knots);
  if (unbounded_) {
    std::vector<double> tail(knots);
    tail[knots - 1] = far_tail;
    for (std::size_t i = knots - 1; i-- > 0;) tail[i] = tail[i + 1] + cell[i];
    mass_ = tail[0];
    for (std::size_t i = 0; i < knots; ++i) keys[i] = -std::log(tail[i] / mass_);
    const double dk = keys[knots - 1] - keys[knots - 2];
    tail_exponent_ = dk / (lx[knots - 1] - lx[knots - 2]);
  } else {
    double acc = 0.0;
    keys[0] = 0.0;
    for (std::size_t i = 0; i + 1 < knots; ++i) {
      acc += cell[i];
      keys[i + 1] = acc;
    }
    mass_ = acc;
    for (auto& k : keys) k /= mass_;
  }
  if (!(mass_ > 0.0) || !std::isfinite(mass_)) throw ConfigError("jump range carries no mass");

  // Keep strictly increasing keys only (the tail end can stall in rounding).
  std::vector<double> k2, x2;
  for (std::size_t i = 0; i < knots; ++i) {
    if (k2.empty() || keys[i] > k2.back()) {
      k2.push_back(keys[i]);
      x2.push_back(lx[i]);
    }
  }
  key_max_ = k2.back();
  log_x_max_ = x2.back();
  using boost::math::interpolators::pchip;
  auto forward = std::make_shared<pchip<std::vector<double>>>(std::vector<double>(k2), std::vector<double>(x2));
  auto inverse = std::make_shared<pchip<std::vector<double>>>(std::move(x2), std::move(k2));
  key_to_log_x_ = [forward](double k) { return (*forward)(k); };
  log_x_to_key_ = [inverse](double lx) { return (*inverse)(lx); };
}

double MagnitudeTable::log_x_of_key(double key) const {
  if (key <= key_max_) return key_to_log_x_(key);
  return log_x_max_ + (key - key_max_) / tail_exponent_;
}

double MagnitudeTable::sample(Rng& rng) const {
  const double key = unbounded_ ? rng.exponential() : rng.uniform();
  return sign_ * std::exp(log_x_of_key(key));
}

double MagnitudeTable::survival(double x) const {
  if (x <= lo_) return 1.0;
  if (x >= hi_) return 0.0;
  const double lx = std::log(x);
  if (unbounded_) {
    if (lx >= log_x_max_) return std::exp(-(key_max_ + (lx - log_x_max_) * tail_exponent_));
    return std::exp(-log_x_to_key_(lx));
  }
  return 1.0 - log_x_to_key_(std::min(lx, log_x_max_));
}

// ---------------------------------------------------------------------------
// JumpDecomposition

JumpDecomposition::JumpDecomposition(const NoiseSpec& spec, double rho, double small_cutoff)
    : rho_(rho), cutoff_(small_cutoff) {
  if (!spec.has_jumps()) throw ConfigError("jump decomposition needs a jump component");
  if (!(rho > 0.0) || !(small_cutoff > 0.0) || !(small_cutoff < rho)) {
    throw ConfigError("jump decomposition needs 0 < cutoff < rho");
  }
  large_plus_ = spec.tail_above(rho) > 0.0 ? std::make_shared<MagnitudeTable>(spec, +1, rho, INFINITY) : nullptr;
  large_minus_ = spec.tail_below(rho) > 0.0 ? std::make_shared<MagnitudeTable>(spec, -1, rho, INFINITY) : nullptr;
  const double up = large_plus_ ? large_plus_->mass() : 0.0;
  const double down = large_minus_ ? large_minus_->mass() : 0.0;
  beta_rho_ = up + down;
  p_plus_ = beta_rho_ > 0.0 ? up / beta_rho_ : 0.5;

  auto fp = [&](double z) { return spec.density(z); };
  auto fm = [&](double z) { return spec.density(-z); };
  const double floor = support_floor(spec);
  const double mid_lo = std::max(cutoff_, floor);
  if (rho > mid_lo) {
    const double mp = integrate_log(fp, mid_lo, rho);
    const double mm = integrate_log(fm, mid_lo, rho);
    if (mp > 0.0) mid_plus_ = std::make_shared<MagnitudeTable>(spec, +1, mid_lo, rho);
    if (mm > 0.0) mid_minus_ = std::make_shared<MagnitudeTable>(spec, -1, mid_lo, rho);
    mid_rate_ = mp + mm;
    mid_p_plus_ = mid_rate_ > 0.0 ? mp / mid_rate_ : 0.5;
    mid_mean_ = integrate_log([&](double z) { return z * (fp(z) - fm(z)); }, mid_lo, rho);
  }
  const double below = integrate_log([&](double z) { return z * z * (fp(z) + fm(z)); }, 0.0, cutoff_);
  small_var_ = spec.sigma2 + below;
  const double lo1 = std::max(1.0, floor);
  const double shift = rho > lo1 ? integrate_log([&](double z) { return z * (fp(z) - fm(z)); }, lo1, rho) : 0.0;
  d_rho_ = spec.triplet_drift() + (rho >= 1.0 ? shift : -integrate_log([&](double z) { return z * (fp(z) - fm(z)); }, rho, 1.0));
}

double JumpDecomposition::sample_large(Rng& rng) const {
  const bool up = large_minus_ == nullptr || (large_plus_ != nullptr && rng.uniform() < p_plus_);
  return up ? large_plus_->sample(rng) : large_minus_->sample(rng);
}

double JumpDecomposition::sample_small(double dt, Rng& rng) const {
  double x = d_rho_ * dt;
  if (small_var_ > 0.0) x += std::sqrt(small_var_ * dt) * rng.normal();
  if (mid_rate_ > 0.0) {
    const std::uint64_t n = rng.poisson(mid_rate_ * dt);
    for (std::uint64_t i = 0; i < n; ++i) {
      const bool up = mid_minus_ == nullptr || (mid_plus_ != nullptr && rng.uniform() < mid_p_plus_);
      x += up ? mid_plus_->sample(rng) : mid_minus_->sample(rng);
    }
    x -= mid_mean_ * dt;
  }
  return x;
}

JumpDecomposition decompose(const NoiseSpec& spec, double rho, double small_cutoff) {
  if (!(rho > 1.0)) throw ConfigError("decomposition threshold rho must exceed 1");
  return JumpDecomposition(spec, rho, small_cutoff > 0.0 ? small_cutoff : 1e-3 * rho);
}

// ---------------------------------------------------------------------------
// IncrementSampler

IncrementSampler::IncrementSampler(const NoiseSpec& spec, double dt, double cutoff)
    : spec_(spec), dt_(dt), stable_(spec.alpha, spec.beta) {
  spec_.validate();
  if (!(dt > 0.0)) throw ConfigError("increment step must be positive");
  if (spec_.variant == NoiseVariant::alpha_stable) {
    if (spec_.alpha == 1.0) {
      const double sigma = spec_.c * dt;
      stable_scale_ = sigma;
      stable_shift_ = (2.0 / kPi) * spec_.beta * sigma * std::log(sigma);
    } else {
      stable_scale_ = std::pow(spec_.c * dt, 1.0 / spec_.alpha);
    }
  } else if (spec_.has_jumps()) {
    decomposition_ = std::make_shared<JumpDecomposition>(spec_, 1.0, cutoff);
  }
}

double IncrementSampler::operator()(Rng& rng) const {
  switch (spec_.variant) {
    case NoiseVariant::alpha_stable: {
      double x = stable_scale_ * stable_(rng) + stable_shift_ + spec_.drift * dt_;
      if (spec_.sigma2 > 0.0) x += std::sqrt(spec_.sigma2 * dt_) * rng.normal();
      return x;
    }
    case NoiseVariant::gaussian:
      return spec_.drift * dt_ + std::sqrt(spec_.sigma2 * dt_) * rng.normal();
    default: {
      double x = decomposition_->sample_small(dt_, rng);
      if (decomposition_->large_rate() > 0.0) {
        const std::uint64_t n = rng.poisson(decomposition_->large_rate() * dt_);
        for (std::uint64_t i = 0; i < n; ++i) x += decomposition_->sample_large(rng);
      }
      return x;
    }
  }
}

double sample_increment(const NoiseSpec& spec, double dt, Rng& rng) {
  return IncrementSampler(spec, dt)(rng);
}

}  // namespace kramers
