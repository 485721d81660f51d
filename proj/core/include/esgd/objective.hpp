#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "esgd/dataset.hpp"
#include "esgd/rng.hpp"

namespace esgd {

/// Flat vector of all trainable weights (64-bit floats throughout).
using ParamVector = Eigen::VectorXd;

/// An energy f(x; data) that optimizers minimize.
///
/// Implementations must be reentrant: concurrent evaluations with distinct x
/// from independent runs must not interfere. batch_loss_grad is deterministic
/// given (x, batch) and, for stochastic objectives, the rng state.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual int dim() const = 0;

  /// Number of samples behind this objective; 1 for analytic objectives.
  virtual int dataset_size() const = 0;

  /// Mean loss over the whole dataset (any train-time noise disabled).
  virtual double full_loss(const ParamVector& x) const = 0;

  /// Mean loss and gradient over the whole dataset (noise disabled).
  virtual double full_loss_grad(const ParamVector& x, ParamVector& grad) const;

  /// Mean loss and gradient over one minibatch, deterministic in (x, batch).
  virtual double batch_loss_grad(const ParamVector& x, const MiniBatch& batch,
                                 ParamVector& grad) const = 0;

  /// Stochastic variant for objectives with train-time noise (dropout);
  /// defaults to the deterministic evaluation.
  virtual double batch_loss_grad(const ParamVector& x, const MiniBatch& batch,
                                 ParamVector& grad, Rng& rng) const {
    (void)rng;
    return batch_loss_grad(x, batch, grad);
  }

  virtual bool has_exact_hessian() const { return false; }

  /// Dense symmetric Hessian of full_loss at x. Throws by default.
  virtual Eigen::MatrixXd exact_hessian(const ParamVector& x) const;

 protected:
  void check_dim(const ParamVector& x) const;
};

/// f(x) = 0.5 x'Ax + b'x with A symmetric. The constructing eigenvalues are
/// kept when the matrix is built from a declared spectrum.
class QuadraticObjective : public Objective {
 public:
  QuadraticObjective(Eigen::MatrixXd A, ParamVector b);

  /// A = Q diag(eigenvalues) Q' for a seeded random orthogonal Q.
  static QuadraticObjective from_eigenvalues(const std::vector<double>& eigenvalues,
                                             std::uint64_t seed);

  int dim() const override { return static_cast<int>(b_.size()); }
  int dataset_size() const override { return 1; }
  double full_loss(const ParamVector& x) const override;
  double full_loss_grad(const ParamVector& x, ParamVector& grad) const override;
  double batch_loss_grad(const ParamVector& x, const MiniBatch&,
                         ParamVector& grad) const override;
  bool has_exact_hessian() const override { return true; }
  Eigen::MatrixXd exact_hessian(const ParamVector&) const override { return a_; }

  const Eigen::MatrixXd& matrix() const { return a_; }
  const ParamVector& linear_term() const { return b_; }
  const std::vector<double>& constructed_eigenvalues() const {
    return constructed_eigenvalues_;
  }

  /// -A^{-1} b; throws NumericError when A is singular.
  ParamVector minimizer() const;

 private:
  Eigen::MatrixXd a_;
  ParamVector b_;
  std::vector<double> constructed_eigenvalues_;
};

/// Two-Gaussian-well landscape on the real line:
///   f(x) = 1 - wide_depth  * exp(-(x-wide_center)^2  / (2 wide_sigma^2))
///            - sharp_depth * exp(-(x-sharp_center)^2 / (2 sharp_sigma^2))
/// With the defaults the sharp well is the global minimum while the wide
/// well is shallower, so smoothing-based objectives can be shown to prefer
/// the wide one. f is bounded below by 1 - wide_depth - sharp_depth.
struct Landscape1d {
  double wide_center = -2.0;
  double wide_sigma = 1.0;
  double wide_depth = 0.8;
  double sharp_center = 2.0;
  double sharp_sigma = 0.05;
  double sharp_depth = 1.0;

  double operator()(double x) const;
  double derivative(double x) const;
  double lower_bound() const { return 1.0 - wide_depth - sharp_depth; }

  /// Requires wide_sigma > sharp_sigma > 0 and nonnegative depths.
  void validate() const;
};

/// Landscape1d wrapped as a 1-dimensional Objective (dataset size 1).
class LandscapeObjective : public Objective {
 public:
  explicit LandscapeObjective(Landscape1d f) : f_(f) { f_.validate(); }
  int dim() const override { return 1; }
  int dataset_size() const override { return 1; }
  double full_loss(const ParamVector& x) const override;
  double batch_loss_grad(const ParamVector& x, const MiniBatch&,
                         ParamVector& grad) const override;
  const Landscape1d& landscape() const { return f_; }

 private:
  Landscape1d f_;
};

}  // namespace esgd
