#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kramers/dde.hpp"
#include "kramers/levy.hpp"
#include "kramers/random.hpp"

namespace kramers {

/// Noise coefficient f(x(t - r_1), ..., x(t - r_n)) of point-delay form.
/// Arguments are clipped to a box before evaluation so f stays bounded.
class DiffusionCoefficient {
 public:
  enum class Kind { constant, affine, custom };

  /// f == f0.
  static DiffusionCoefficient constant(double f0);
  /// f(x) = f0 + sum_i k_i x_i.
  static DiffusionCoefficient affine(double f0, std::vector<double> delays, std::vector<double> slopes);
  /// Arbitrary f with a declared Lipschitz constant (max-norm).
  static DiffusionCoefficient custom(std::vector<double> delays, std::function<double(std::span<const double>)> f,
                                     double lipschitz);

  Kind kind() const noexcept { return kind_; }
  std::span<const double> delays() const noexcept { return delays_; }
  std::span<const double> slopes() const noexcept { return slopes_; }
  double base() const noexcept { return f0_; }  // F0 = f(0, ..., 0)
  double lipschitz() const noexcept { return lipschitz_; }
  double operator()(std::span<const double> args) const;

  /// Throws ConfigError when F0 == 0 or a delay lies outside [0, r].
  void validate(double horizon) const;

 private:
  Kind kind_ = Kind::constant;
  double f0_ = 1.0;
  std::vector<double> delays_;
  std::vector<double> slopes_;
  std::function<double(std::span<const double>)> fn_;
  double lipschitz_ = 0.0;
};

enum class NoiseMode { marginal, decomposition };
std::string to_string(NoiseMode m);
NoiseMode parse_noise_mode(const std::string& name);

struct SimParams {
  double eps = 0.1;
  double a = -1.0;
  double b = 1.0;
  double dt = 1e-3;
  double t_max = 1e4;
  std::uint64_t seed = 1;
  NoiseMode mode = NoiseMode::marginal;
  /// Large-jump threshold; <= 0 picks max(1.5, 0.5 min(|a|, b) / (eps |F0|)).
  double rho = 0.0;
  /// Small-jump cutoff of the decomposition; <= 0 picks 1e-3 * rho.
  double small_cutoff = 0.0;
  /// Run the noise-free equation first and reject initial segments that exit.
  bool check_no_exit = false;

  void validate(bool auto_t_max = false) const;
  double resolved_rho(double f0) const;
};

enum class Taxonomy { jump_exit, growth_exit, censored };
std::string to_string(Taxonomy t);

struct ExitRecord {
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;
  double tau = 0.0;          // exit time, or t_max when censored
  double location = 0.0;     // X(tau)
  Taxonomy taxonomy = Taxonomy::censored;
  bool censored = true;
  double overshoot = 0.0;    // distance of X(tau) beyond the crossed boundary
  double last_jump_gap = std::numeric_limits<double>::quiet_NaN();  // tau minus time of last large jump

  bool operator==(const ExitRecord&) const = default;
};

/// Increment of the driving noise over one grid step; `large` marks a step
/// carrying a jump above the threshold rho.
struct NoiseStep {
  double increment = 0.0;
  bool large = false;
};

class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  virtual NoiseStep next() = 0;
};

/// Exact marginal increments; `large` when |dZ| > rho.
class MarginalSource final : public IncrementSource {
 public:
  MarginalSource(const NoiseSpec& spec, double dt, double rho, Rng rng);
  NoiseStep next() override;

 private:
  IncrementSampler sampler_;
  double rho_;
  Rng rng_;
};

/// Small-jump increments plus large jumps at exponential times; a jump at time
/// s in (t_k, t_{k+1}] is applied atomically with step k.
class DecomposedSource final : public IncrementSource {
 public:
  DecomposedSource(std::shared_ptr<const JumpDecomposition> decomposition, double dt, Rng rng);
  NoiseStep next() override;

 private:
  std::shared_ptr<const JumpDecomposition> decomposition_;
  double dt_;
  Rng rng_;
  double t_ = 0.0;
  double next_jump_;
};

/// Plays back a fixed list of steps, then zeros.
class ScriptedSource final : public IncrementSource {
 public:
  explicit ScriptedSource(std::vector<NoiseStep> steps) : steps_(std::move(steps)) {}
  NoiseStep next() override { return pos_ < steps_.size() ? steps_[pos_++] : NoiseStep{}; }

 private:
  std::vector<NoiseStep> steps_;
  std::size_t pos_ = 0;
};

/// Source for `params.mode` seeded from `rng`. A prebuilt decomposition can
/// be shared across replicates in decomposition mode.
std::unique_ptr<IncrementSource> make_source(const NoiseSpec& spec, const SimParams& params, double f0, Rng rng,
                                             std::shared_ptr<const JumpDecomposition> shared = nullptr);
/// The decomposition make_source would build for these parameters.
std::shared_ptr<const JumpDecomposition> make_decomposition(const NoiseSpec& spec, const SimParams& params, double f0);

/// Euler-Maruyama path of dX = (int X(t+u) mu(du)) dt + eps f(...) dZ on
/// [-r, T]. When `increments` is given it receives every dZ_k.
GridPath simulate_path(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const SimParams& params,
                       const Segment& initial, double horizon, IncrementSource& source,
                       std::vector<double>* increments = nullptr);
GridPath simulate_path(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const NoiseSpec& spec,
                       const SimParams& params, const Segment& initial, double horizon, Rng& rng,
                       std::vector<double>* increments = nullptr);

/// deterministic + eps * sum_{j < k} x*(t_k - t_{j+1}) dZ_j, dZ_j entering
/// at t_{j+1}. `deterministic` spans [-r, T] with T = increments.size() * dt.
GridPath additive_convolution_path(const GridPath& x_star, std::span<const double> increments, double eps,
                                   const GridPath& deterministic);

/// First grid time with X outside [a, b], capped at t_max (censored).
/// Deterministic in (params.seed, inputs).
ExitRecord first_exit(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const NoiseSpec& spec,
                      const SimParams& params, const Segment& initial);
ExitRecord first_exit(const MemoryMeasure& measure, const DiffusionCoefficient& coef, const SimParams& params,
                      const Segment& initial, IncrementSource& source);

}  // namespace kramers
