#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "esgd/dataset.hpp"
#include "esgd/objective.hpp"

namespace esgd {

/// Fully-connected ReLU network with a softmax cross-entropy head.
struct MlpSpec {
  std::vector<int> layer_sizes;  // e.g. {784, 128, 10}; >= 2 entries
  double dropout_prob = 0.0;     // applied to hidden activations, in [0, 1)

  void validate() const;
  /// Total parameter count: sum over layers of (in + 1) * out.
  int param_count() const;
};

/// Dataset-backed MLP objective. Parameters are stored flat, layer by layer,
/// each layer as a column-major (out x in) weight block followed by its bias.
///
/// Dropout is the inverted variant: at train time hidden units are kept with
/// probability 1-p and scaled by 1/(1-p), so evaluation needs no rescaling.
/// Masks are drawn from the caller's rng one unit at a time, sample-major,
/// so a fixed rng state reproduces masks bit-exactly.
class MlpObjective : public Objective {
 public:
  MlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data);

  int dim() const override { return spec_.param_count(); }
  int dataset_size() const override { return data_->size(); }

  double full_loss(const ParamVector& x) const override;
  double batch_loss_grad(const ParamVector& x, const MiniBatch& batch,
                         ParamVector& grad) const override;
  double batch_loss_grad(const ParamVector& x, const MiniBatch& batch, ParamVector& grad,
                         Rng& rng) const override;
  bool has_exact_hessian() const override { return true; }
  /// Finite differences of the analytic gradient; see finite_difference_hessian.
  Eigen::MatrixXd exact_hessian(const ParamVector& x) const override;

  /// Mean cross-entropy over the batch. With dropout_on, masks come from rng.
  /// Throws NumericError (with the layer index) if activations go non-finite.
  double forward_loss(const ParamVector& x, const MiniBatch& batch, bool dropout_on,
                      Rng& rng) const;

  /// Loss plus the exact reverse-mode gradient of the same stochastic
  /// function forward_loss evaluates (identical masks for identical rng).
  double backward_grad(const ParamVector& x, const MiniBatch& batch, bool dropout_on,
                       Rng& rng, ParamVector& grad) const;

  /// Fraction of validation samples whose argmax logit is not the label.
  double error_rate(const ParamVector& x, const Dataset& eval_set) const;

  const MlpSpec& spec() const { return spec_; }
  const Dataset& dataset() const { return *data_; }

  /// He-scaled gaussian init for the weights, zero biases.
  ParamVector initial_params(Rng& rng) const;

 private:
  MlpSpec spec_;
  std::shared_ptr<const Dataset> data_;
  std::vector<int> weight_offsets_;  // per layer: weight block start
  std::vector<int> bias_offsets_;    // per layer: bias block start
};

/// Dense Hessian of full_loss assembled column-wise from central finite
/// differences of the analytic gradient along coordinate directions, with
/// step 1e-4 * max(1, |x|_inf). Columns are independent and may be computed
/// in parallel; the result is bitwise independent of the execution order.
/// The raw asymmetry |H - H'|_inf / |H|_inf is measured before the result
/// is symmetrized to (H + H')/2; values above 1e-3 set asymmetry_warning.
struct HessianResult {
  Eigen::MatrixXd hessian;
  double relative_asymmetry = 0.0;
  bool asymmetry_warning = false;
};
HessianResult finite_difference_hessian(const Objective& obj, const ParamVector& x,
                                        int max_dim = 5000, int num_threads = 0);

/// Per-coordinate variance of minibatch gradients over `passes` epochs, a
/// diagonal Fisher-information proxy: diag(I) = E[g^2] - (E g)^2. Batches
/// are a seeded shuffled partition per pass (pass 0 keeps dataset order);
/// entries are clamped to be nonnegative. Train-time noise is disabled.
ParamVector fisher_diagonal(const Objective& obj, const ParamVector& x, int batch_size,
                            int passes, std::uint64_t seed = 0);

}  // namespace esgd
