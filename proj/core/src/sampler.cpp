#include "esgd/sampler.hpp"

#include <cmath>

#include "esgd/errors.hpp"

namespace esgd {

void SgldConfig::validate() const {
  if (!(eta_prime > 0.0)) throw ArgumentError("sgld: eta_prime must be > 0");
  if (epsilon < 0.0) throw ArgumentError("sgld: epsilon must be >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("sgld: alpha must be in (0, 1]");
  if (L < 1) throw ArgumentError("sgld: L must be >= 1");
  if (gamma < 0.0) throw ArgumentError("sgld: gamma must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ArgumentError("sgld: momentum must be in [0, 1)");
}

void SgldState::reset(const ParamVector& anchor) {
  x_prime = anchor;
  mu = anchor;
  velocity = ParamVector::Zero(anchor.size());
  step = 0;
}

SgldStepInfo sgld_step(SgldState& state, const ParamVector& anchor, const Objective& obj,
                       const SgldConfig& cfg, int batch_size, Rng& rng) {
  if (state.x_prime.size() != anchor.size() || state.mu.size() != anchor.size())
    throw ArgumentError("sgld: state/anchor dimension mismatch");

  const MiniBatch batch = sample_minibatch(obj.dataset_size(), batch_size, rng);

  // With inner momentum the force (gradient and anchor coupling) is taken at
  // the Nesterov lookahead point; momentum 0 reduces to the plain update.
  ParamVector eval_at = state.x_prime;
  if (cfg.momentum > 0.0) eval_at += cfg.momentum * state.velocity;

  ParamVector grad(anchor.size());
  obj.batch_loss_grad(eval_at, batch, grad, rng);

  ParamVector dx = grad - cfg.gamma * (anchor - eval_at);
  const double grad_norm = dx.norm();

  if (cfg.momentum > 0.0) {
    state.velocity = cfg.momentum * state.velocity - cfg.eta_prime * dx;
    state.x_prime += state.velocity;
  } else {
    state.x_prime -= cfg.eta_prime * dx;
  }
  if (cfg.epsilon > 0.0)
    state.x_prime += std::sqrt(cfg.eta_prime) * cfg.epsilon *
                     rng.gaussian_vector(anchor.size());

  state.mu = (1.0 - cfg.alpha) * state.mu + cfg.alpha * state.x_prime;
  ++state.step;

  if (!state.x_prime.allFinite())
    throw DivergenceError("sgld: x' became non-finite at step " +
                              std::to_string(state.step),
                          state.step);
  return SgldStepInfo{grad_norm};
}

MuResult estimate_mu(const ParamVector& anchor, const Objective& obj,
                     const SgldConfig& cfg, int batch_size, Rng& rng, bool keep_trace) {
  cfg.validate();
  SgldState state;
  state.reset(anchor);

  MuResult result;
  double grad_norm_sum = 0.0;
  if (keep_trace) result.diagnostics.trace.reserve(cfg.L);
  for (int l = 0; l < cfg.L; ++l) {
    ParamVector mu_before;
    if (keep_trace) mu_before = state.mu;
    const SgldStepInfo info = sgld_step(state, anchor, obj, cfg, batch_size, rng);
    grad_norm_sum += info.grad_norm;
    if (keep_trace)
      result.diagnostics.trace.push_back(
          InnerSample{state.step, info.grad_norm, (state.x_prime - anchor).norm(),
                      (state.mu - mu_before).norm()});
  }
  result.diagnostics.mean_grad_norm = grad_norm_sum / cfg.L;
  result.diagnostics.final_dist_to_anchor = (state.x_prime - anchor).norm();
  result.mu = std::move(state.mu);
  return result;
}

void SgldOptimizeConfig::validate() const {
  if (!(eta0 > 0.0)) throw ArgumentError("sgld_optimize: eta0 must be > 0");
  if (b < 0.0 || b > 1.0) throw ArgumentError("sgld_optimize: b must be in [0, 1]");
  if (epsilon < 0.0) throw ArgumentError("sgld_optimize: epsilon must be >= 0");
  if (epochs < 0) throw ArgumentError("sgld_optimize: epochs must be >= 0");
  if (batch_size < 1) throw ArgumentError("sgld_optimize: batch size must be >= 1");
}

double sgld_optimize_update(SgldOptState& state, const Objective& obj,
                            const SgldOptimizeConfig& cfg, Rng& rng) {
  const int n = obj.dataset_size();
  const int m = std::min(cfg.batch_size, n);
  const double eta_t = cfg.eta0 / std::pow(1.0 + static_cast<double>(state.t), cfg.b);
  const MiniBatch batch = sample_minibatch(n, m, rng);
  ParamVector grad(state.x.size());
  obj.batch_loss_grad(state.x, batch, grad, rng);
  state.x -= 0.5 * eta_t * grad;
  if (cfg.epsilon > 0.0)
    state.x += std::sqrt(eta_t) * cfg.epsilon * rng.gaussian_vector(state.x.size());
  ++state.t;
  if (!state.x.allFinite())
    throw DivergenceError("sgld_optimize: diverged at update " + std::to_string(state.t),
                          state.t);
  return grad.norm();
}

SgldTrajectory sgld_optimize(const Objective& obj, const ParamVector& x0,
                             const SgldOptimizeConfig& cfg, Rng& rng, int thin) {
  cfg.validate();
  if (x0.size() != obj.dim()) throw ArgumentError("sgld_optimize: dimension mismatch");
  const int n = obj.dataset_size();
  const int m = std::min(cfg.batch_size, n);
  const int updates_per_epoch = (n + m - 1) / m;

  SgldTrajectory traj;
  SgldOptState state{x0, 0};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int u = 0; u < updates_per_epoch; ++u) {
      const double eta_t =
          cfg.eta0 / std::pow(1.0 + static_cast<double>(state.t), cfg.b);
      traj.step_sizes.push_back(eta_t);
      sgld_optimize_update(state, obj, cfg, rng);
      if (thin > 0 && ((state.t - 1) % thin) == 0) traj.thinned.push_back(state.x);
    }
    traj.epoch_loss.push_back(obj.full_loss(state.x));
  }
  traj.x_final = std::move(state.x);
  return traj;
}

}  // namespace esgd
