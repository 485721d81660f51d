#include "esgd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "esgd/errors.hpp"

namespace esgd {

void ScopingSchedule::validate() const {
  if (gamma0 < 0.0 || gamma1 < 0.0)
    throw ArgumentError("scoping: gamma0 and gamma1 must be >= 0");
  if (kind == Kind::bounded_exponential && !(tau > 0.0))
    throw ArgumentError("scoping: tau must be > 0 for bounded_exponential");
}

double gamma_at(const ScopingSchedule& s, long t) {
  if (t < 0) throw ArgumentError("gamma_at: t must be >= 0");
  const double td = static_cast<double>(t);
  switch (s.kind) {
    case ScopingSchedule::Kind::constant:
      return s.gamma0;
    case ScopingSchedule::Kind::exponential:
      return s.gamma0 * std::pow(1.0 + s.gamma1, td);
    case ScopingSchedule::Kind::linear:
      return s.gamma0 * (1.0 + s.gamma1 * td);
    case ScopingSchedule::Kind::quadratic:
      return s.gamma0 * (1.0 + s.gamma1 * td * td);
    case ScopingSchedule::Kind::bounded_exponential:
      return s.gamma0 * (1.0 - std::exp(-s.tau * td));
  }
  throw ArgumentError("gamma_at: unknown schedule kind");
}

double LrSchedule::rate_at(long t) const {
  const long epoch = updates_per_epoch > 0 ? t / updates_per_epoch : 0;
  long k = 0;
  for (int boundary : decay_at)
    if (epoch >= boundary) ++k;
  if (decay_every > 0) k += epoch / decay_every;
  return base * std::pow(decay_factor, static_cast<double>(k));
}

void SgdConfig::validate() const {
  if (!(lr.base > 0.0)) throw ArgumentError("sgd: learning rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ArgumentError("sgd: momentum must be in [0, 1)");
}

void AdamConfig::validate() const {
  if (!(lr.base > 0.0)) throw ArgumentError("adam: learning rate must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0) throw ArgumentError("adam: beta1 must be in [0, 1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw ArgumentError("adam: beta2 must be in [0, 1)");
  if (!(stability > 0.0)) throw ArgumentError("adam: stability constant must be > 0");
}

void EntropySgdConfig::validate() const {
  schedule.validate();
  sgld(schedule.gamma0).validate();
  if (!(lr.base > 0.0)) throw ArgumentError("entropy-sgd: learning rate must be > 0");
  if (outer_momentum < 0.0 || outer_momentum >= 1.0)
    throw ArgumentError("entropy-sgd: momentum must be in [0, 1)");
}

SgldConfig EntropySgdConfig::sgld(double gamma) const {
  SgldConfig cfg;
  cfg.eta_prime = eta_prime;
  cfg.epsilon = epsilon;
  cfg.alpha = alpha;
  cfg.L = L;
  cfg.gamma = gamma;
  cfg.momentum = inner_momentum;
  return cfg;
}

void OptimizerState::reset(const ParamVector& x0) {
  x = x0;
  t = 0;
  velocity = ParamVector::Zero(x0.size());
  adam_m = ParamVector::Zero(x0.size());
  adam_v = ParamVector::Zero(x0.size());
}

namespace {

void check_finite(const OptimizerState& state) {
  if (!state.x.allFinite())
    throw DivergenceError("optimizer: parameters became non-finite at update " +
                              std::to_string(state.t),
                          state.t);
}

// Momentum descent along direction g with rate eta. For Nesterov, g must
// already be evaluated at the lookahead point x + momentum * velocity.
void momentum_update(OptimizerState& state, const ParamVector& g, double eta,
                     double momentum) {
  if (momentum > 0.0) {
    state.velocity = momentum * state.velocity - eta * g;
    state.x += state.velocity;
  } else {
    state.x -= eta * g;
  }
}

void adam_update(OptimizerState& state, const ParamVector& g, const AdamConfig& cfg,
                 double eta) {
  state.adam_m = cfg.beta1 * state.adam_m + (1.0 - cfg.beta1) * g;
  state.adam_v = cfg.beta2 * state.adam_v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  const double t = static_cast<double>(state.t + 1);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const ParamVector m_hat = state.adam_m / correction1;
  const ParamVector v_hat = state.adam_v / correction2;
  state.x -= eta * (m_hat.array() / (v_hat.array().sqrt() + cfg.stability)).matrix();
}

}  // namespace

StepInfo sgd_step(OptimizerState& state, const Objective& obj, const SgdConfig& cfg,
                  int batch_size, Rng& rng) {
  const double eta = cfg.lr.rate_at(state.t);
  const MiniBatch batch = sample_minibatch(obj.dataset_size(), batch_size, rng);

  ParamVector g(state.x.size());
  if (cfg.nesterov && cfg.momentum > 0.0) {
    const ParamVector lookahead = state.x + cfg.momentum * state.velocity;
    obj.batch_loss_grad(lookahead, batch, g, rng);
  } else {
    obj.batch_loss_grad(state.x, batch, g, rng);
  }
  momentum_update(state, g, eta, cfg.momentum);
  ++state.t;
  check_finite(state);
  return StepInfo{g.norm(), 0.0, std::move(g)};
}

StepInfo adam_step(OptimizerState& state, const Objective& obj, const AdamConfig& cfg,
                   int batch_size, Rng& rng) {
  const double eta = cfg.lr.rate_at(state.t);
  const MiniBatch batch = sample_minibatch(obj.dataset_size(), batch_size, rng);
  ParamVector g(state.x.size());
  obj.batch_loss_grad(state.x, batch, g, rng);
  adam_update(state, g, cfg, eta);
  ++state.t;
  check_finite(state);
  return StepInfo{g.norm(), 0.0, std::move(g)};
}

namespace {

// mu at the given anchor: SGLD estimate unless an external estimator is
// supplied (e.g. a closed-form oracle in tests).
ParamVector resolve_mu(const ParamVector& anchor, double gamma, const Objective& obj,
                       const EntropySgdConfig& cfg, int batch_size, Rng& rng,
                       const MuEstimator& estimator) {
  if (estimator) return estimator(anchor, gamma, rng);
  return estimate_mu(anchor, obj, cfg.sgld(gamma), batch_size, rng).mu;
}

// Shared entropy-gradient computation: returns g = gamma_t (x - mu), or
// (x - mu) under rescaling, evaluated at the lookahead point when requested.
ParamVector entropy_direction(OptimizerState& state, const Objective& obj,
                              const EntropySgdConfig& cfg, int batch_size, Rng& rng,
                              const MuEstimator& estimator, double gamma, bool lookahead) {
  ParamVector anchor = state.x;
  if (lookahead) anchor += cfg.outer_momentum * state.velocity;
  const ParamVector mu = resolve_mu(anchor, gamma, obj, cfg, batch_size, rng, estimator);
  const double scale = cfg.rescale_gradient ? 1.0 : gamma;
  return scale * (anchor - mu);
}

}  // namespace

StepInfo entropy_sgd_step(OptimizerState& state, const Objective& obj,
                          const EntropySgdConfig& cfg, int batch_size, Rng& rng,
                          const MuEstimator& mu_estimator) {
  const double gamma = gamma_at(cfg.schedule, state.t);
  const double eta = cfg.lr.rate_at(state.t);
  const bool lookahead = cfg.nesterov && cfg.outer_momentum > 0.0;
  ParamVector g =
      entropy_direction(state, obj, cfg, batch_size, rng, mu_estimator, gamma, lookahead);
  momentum_update(state, g, eta, cfg.outer_momentum);
  ++state.t;
  check_finite(state);
  return StepInfo{g.norm(), gamma, std::move(g)};
}

StepInfo entropy_adam_step(OptimizerState& state, const Objective& obj,
                           const EntropySgdConfig& cfg, const AdamConfig& adam,
                           int batch_size, Rng& rng, const MuEstimator& mu_estimator) {
  const double gamma = gamma_at(cfg.schedule, state.t);
  const double eta = adam.lr.rate_at(state.t);
  ParamVector g =
      entropy_direction(state, obj, cfg, batch_size, rng, mu_estimator, gamma, false);
  adam_update(state, g, adam, eta);
  ++state.t;
  check_finite(state);
  return StepInfo{g.norm(), gamma, std::move(g)};
}

CalibrationResult calibrate_gamma(const Objective& obj, const ParamVector& x,
                                  const EntropySgdConfig& cfg, int batch_size, int probes,
                                  Rng& rng) {
  if (probes < 1) throw ArgumentError("calibrate_gamma: probes must be >= 1");
  constexpr double kLo = 1e-8;
  constexpr double kHi = 1e4;
  constexpr double kBandLo = 0.5;
  constexpr double kBandHi = 2.0;

  CalibrationResult result;
  ParamVector g(x.size());

  const auto ratio_at = [&](double gamma) {
    std::vector<double> ratios;
    ratios.reserve(probes);
    for (int p = 0; p < probes; ++p) {
      const MiniBatch batch = sample_minibatch(obj.dataset_size(), batch_size, rng);
      obj.batch_loss_grad(x, batch, g, rng);
      const double gnorm = g.norm();
      if (gnorm < 1e-300)
        throw CalibrationError(
            "calibrate_gamma: vanilla gradient is zero; the entropy gradient has no "
            "magnitude to match");
      const ParamVector mu = estimate_mu(x, obj, cfg.sgld(gamma), batch_size, rng).mu;
      ratios.push_back(gamma * (x - mu).norm() / gnorm);
    }
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    const double med = ratios[ratios.size() / 2];
    result.curve.emplace_back(gamma, med);
    return med;
  };

  const auto fail = [&](const std::string& reason) -> CalibrationError {
    std::ostringstream msg;
    msg << "calibrate_gamma: " << reason << "; measured (gamma, ratio):";
    for (const auto& [gm, r] : result.curve) msg << " (" << gm << ", " << r << ")";
    return CalibrationError(msg.str());
  };

  double lo = kLo, hi = kHi;
  const double r_lo = ratio_at(lo);
  if (r_lo >= kBandLo && r_lo <= kBandHi) {
    result.gamma = lo;
    result.ratio = r_lo;
    return result;
  }
  if (r_lo > kBandHi) throw fail("ratio above band at the smallest gamma");
  const double r_hi = ratio_at(hi);
  if (r_hi >= kBandLo && r_hi <= kBandHi) {
    result.gamma = hi;
    result.ratio = r_hi;
    return result;
  }
  if (r_hi < kBandLo) throw fail("ratio below band at the largest gamma");

  // ratio grows with gamma; bisect in log space until it enters the band.
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const double r = ratio_at(mid);
    if (r >= kBandLo && r <= kBandHi) {
      result.gamma = mid;
      result.ratio = r;
      return result;
    }
    (r < kBandLo ? lo : hi) = mid;
  }
  throw fail("bisection did not land in the band");
}

}  // namespace esgd
