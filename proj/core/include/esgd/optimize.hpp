#pragma once

#include <functional>
#include <vector>

#include "esgd/objective.hpp"
#include "esgd/rng.hpp"
#include "esgd/sampler.hpp"

namespace esgd {

/// Schedule that grows the coupling gamma over parameter updates, examining
/// the landscape at progressively finer scales.
struct ScopingSchedule {
  enum class Kind { constant, exponential, linear, quadratic, bounded_exponential };
  Kind kind = Kind::constant;
  double gamma0 = 0.0;
  double gamma1 = 0.0;  // growth rate for exponential/linear/quadratic
  double tau = 1.0;     // time constant, bounded_exponential only

  void validate() const;
};

/// gamma at update index t:
///   constant:            gamma0
///   exponential:         gamma0 (1 + gamma1)^t
///   linear:              gamma0 (1 + gamma1 t)
///   quadratic:           gamma0 (1 + gamma1 t^2)
///   bounded_exponential: gamma0 (1 - exp(-tau t))
double gamma_at(const ScopingSchedule& schedule, long t);

/// Learning rate with optional step decay at epoch boundaries. The rate for
/// update t is base * decay_factor^k where k counts boundaries at or before
/// epoch(t) = t / updates_per_epoch.
struct LrSchedule {
  double base = 0.1;
  double decay_factor = 1.0;
  std::vector<int> decay_at;  // explicit epoch boundaries
  int decay_every = 0;        // periodic boundary, 0 = off
  int updates_per_epoch = 1;

  double rate_at(long t) const;
};

struct SgdConfig {
  LrSchedule lr;
  double momentum = 0.0;  // in [0, 1)
  bool nesterov = false;

  void validate() const;
};

struct AdamConfig {
  LrSchedule lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double stability = 1e-8;

  void validate() const;
};

/// Outer-loop settings for the nested local-entropy optimizers. gamma is
/// frozen for the duration of each inner loop: the value used as the SGLD
/// coupling and in the outer update is the same gamma_t.
struct EntropySgdConfig {
  int L = 20;
  double eta_prime = 0.1;
  double epsilon = 1e-3;
  double alpha = 0.75;
  double inner_momentum = 0.0;
  ScopingSchedule schedule;
  LrSchedule lr;
  double outer_momentum = 0.0;
  bool nesterov = true;
  /// Use the descent direction (x - mu) instead of gamma (x - mu), so the
  /// step magnitude stays decoupled from the gamma schedule.
  bool rescale_gradient = false;

  void validate() const;
  SgldConfig sgld(double gamma) const;
};

/// Mutable per-run optimizer state; single-threaded mutation.
struct OptimizerState {
  ParamVector x;
  long t = 0;
  ParamVector velocity;  // momentum buffer
  ParamVector adam_m;
  ParamVector adam_v;

  void reset(const ParamVector& x0);
};

struct StepInfo {
  double grad_norm = 0.0;   // norm of the applied descent direction
  double gamma = 0.0;       // scope used (entropy steps only)
  ParamVector direction;    // descent direction before momentum mixing
};

/// Replaces the SGLD estimate of the modified-Gibbs mean; used by tests and
/// oracle-backed runs. Receives the anchor point and the frozen gamma.
using MuEstimator =
    std::function<ParamVector(const ParamVector& anchor, double gamma, Rng& rng)>;

StepInfo sgd_step(OptimizerState& state, const Objective& obj, const SgdConfig& cfg,
                  int batch_size, Rng& rng);

StepInfo adam_step(OptimizerState& state, const Objective& obj, const AdamConfig& cfg,
                   int batch_size, Rng& rng);

/// One outer update: estimates mu with L Langevin iterations at the frozen
/// scope gamma_t, forms g = gamma_t (x - mu) (or x - mu when rescaling) and
/// applies the momentum update with the scheduled rate. Consumes exactly L
/// minibatches.
StepInfo entropy_sgd_step(OptimizerState& state, const Objective& obj,
                          const EntropySgdConfig& cfg, int batch_size, Rng& rng,
                          const MuEstimator& mu_estimator = {});

/// Same descent direction fed through Adam moment updates instead.
StepInfo entropy_adam_step(OptimizerState& state, const Objective& obj,
                           const EntropySgdConfig& cfg, const AdamConfig& adam,
                           int batch_size, Rng& rng, const MuEstimator& mu_estimator = {});

/// Suggests gamma0 such that the local-entropy gradient magnitude matches
/// the vanilla minibatch gradient: finds gamma with
///   median over probes of |gamma (x - mu)| / |batch grad|  in  [0.5, 2]
/// by bisection over gamma in [1e-8, 1e4]. Throws CalibrationError (with the
/// measured ratio curve in the message) when no gamma lands in the band.
struct CalibrationResult {
  double gamma = 0.0;
  double ratio = 0.0;
  std::vector<std::pair<double, double>> curve;  // (gamma, ratio) evaluations
};
CalibrationResult calibrate_gamma(const Objective& obj, const ParamVector& x,
                                  const EntropySgdConfig& cfg, int batch_size,
                                  int probes, Rng& rng);

}  // namespace esgd
