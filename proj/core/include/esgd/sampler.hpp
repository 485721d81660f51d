#pragma once

#include <vector>

#include "esgd/objective.hpp"
#include "esgd/rng.hpp"

namespace esgd {

/// Inner-loop Langevin sampler settings.
///
/// One step, from the current iterate x' with anchor x:
///   dx' =  (1/m) sum_i grad f(x'; xi_i)  -  gamma (x - x')
///   x'  <-  x' - eta_prime dx' + sqrt(eta_prime) epsilon N(0, I)
///   mu  <-  (1 - alpha) mu + alpha x'
/// The exponential average puts more weight on later samples, standing in
/// for an explicit burn-in window. No Metropolis-Hastings correction.
struct SgldConfig {
  double eta_prime = 0.1;   // step size, > 0
  double epsilon = 1e-4;    // thermal noise multiplier, >= 0
  double alpha = 0.75;      // averaging weight, in (0, 1]
  int L = 20;               // iterations, >= 1
  double gamma = 0.0;       // coupling to the anchor, >= 0
  double momentum = 0.0;    // inner Nesterov coefficient, in [0, 1)

  void validate() const;
};

/// Mutable state of one inner loop; confined to a single run.
struct SgldState {
  ParamVector x_prime;
  ParamVector mu;
  ParamVector velocity;
  long step = 0;

  /// x' = mu = anchor, velocity zero, step counter reset.
  void reset(const ParamVector& anchor);
};

struct SgldStepInfo {
  double grad_norm = 0.0;  // |dx'| before the step
};

/// One Langevin step. The rng stream per step is: m uniform draws for the
/// minibatch, any draws the objective makes (dropout), then one gaussian per
/// coordinate when epsilon > 0. Throws DivergenceError (with the step index)
/// if x' goes non-finite.
SgldStepInfo sgld_step(SgldState& state, const ParamVector& anchor, const Objective& obj,
                       const SgldConfig& cfg, int batch_size, Rng& rng);

struct InnerSample {
  long step;
  double grad_norm;
  double dist_to_anchor;
  double mu_drift;
};

struct MuDiagnostics {
  double mean_grad_norm = 0.0;
  double final_dist_to_anchor = 0.0;
  std::vector<InnerSample> trace;  // filled only when requested
};

struct MuResult {
  ParamVector mu;
  MuDiagnostics diagnostics;
};

/// Runs L Langevin steps from a fresh state and returns the exponentially
/// averaged iterate, the estimate of the modified-Gibbs mean around anchor.
MuResult estimate_mu(const ParamVector& anchor, const Objective& obj,
                     const SgldConfig& cfg, int batch_size, Rng& rng,
                     bool keep_trace = false);

/// Standalone SGLD optimizer baseline with a polynomially decaying step,
///   eta_t = eta0 / (1 + t)^b,
/// updates x <- x - (eta_t / 2) g + sqrt(eta_t) epsilon N(0, I) under a
/// uniform prior (no log-prior term). With epsilon = 1 the chain samples a
/// unit-temperature Gibbs distribution of the mean loss.
struct SgldOptimizeConfig {
  double eta0 = 0.1;      // > 0
  double b = 0.55;        // decay exponent, in [0, 1]
  double epsilon = 1.0;   // noise multiplier, >= 0
  int epochs = 1;         // >= 0
  int batch_size = 128;

  void validate() const;
};

struct SgldOptState {
  ParamVector x;
  long t = 0;
};

/// One SGLD baseline update; returns the minibatch gradient norm.
double sgld_optimize_update(SgldOptState& state, const Objective& obj,
                            const SgldOptimizeConfig& cfg, Rng& rng);

struct SgldTrajectory {
  std::vector<double> epoch_loss;        // full-dataset loss after each epoch
  ParamVector x_final;
  std::vector<ParamVector> thinned;      // every `thin`-th iterate when thin > 0
  std::vector<double> step_sizes;        // eta_t per update
};

SgldTrajectory sgld_optimize(const Objective& obj, const ParamVector& x0,
                             const SgldOptimizeConfig& cfg, Rng& rng, int thin = 0);

}  // namespace esgd
