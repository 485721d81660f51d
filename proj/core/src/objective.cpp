#include "esgd/objective.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "esgd/errors.hpp"

namespace esgd {

void Objective::check_dim(const ParamVector& x) const {
  if (x.size() != dim())
    throw ArgumentError("parameter vector has dimension " + std::to_string(x.size()) +
                        ", objective expects " + std::to_string(dim()));
}

double Objective::full_loss_grad(const ParamVector& x, ParamVector& grad) const {
  // Mean over a disjoint cover of the dataset, in fixed batch order.
  const int n = dataset_size();
  constexpr int kChunk = 256;
  grad = ParamVector::Zero(dim());
  ParamVector g(dim());
  double loss = 0.0;
  for (int start = 0; start < n; start += kChunk) {
    const int count = std::min(kChunk, n - start);
    MiniBatch batch;
    batch.indices.resize(count);
    for (int i = 0; i < count; ++i) batch.indices[i] = start + i;
    const double l = batch_loss_grad(x, batch, g);
    const double w = static_cast<double>(count) / n;
    loss += w * l;
    grad += w * g;
  }
  return loss;
}

Eigen::MatrixXd Objective::exact_hessian(const ParamVector&) const {
  throw NumericError("objective does not provide an exact Hessian");
}

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd A, ParamVector b)
    : a_(std::move(A)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size())
    throw ArgumentError("quadratic: A must be n x n and b length n");
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ArgumentError("quadratic: A must be symmetric to 1e-12");
}

QuadraticObjective QuadraticObjective::from_eigenvalues(
    const std::vector<double>& eigenvalues, std::uint64_t seed) {
  const int n = static_cast<int>(eigenvalues.size());
  if (n < 1) throw ArgumentError("from_eigenvalues: need at least one eigenvalue");
  Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = rng.next_gaussian();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = eigenvalues[i];
  Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose());  // kill rounding asymmetry
  QuadraticObjective obj(std::move(a), ParamVector::Zero(n));
  obj.constructed_eigenvalues_ = eigenvalues;
  return obj;
}

double QuadraticObjective::full_loss(const ParamVector& x) const {
  check_dim(x);
  return 0.5 * x.dot(a_ * x) + b_.dot(x);
}

double QuadraticObjective::full_loss_grad(const ParamVector& x, ParamVector& grad) const {
  check_dim(x);
  grad = a_ * x + b_;
  return 0.5 * x.dot(a_ * x) + b_.dot(x);
}

double QuadraticObjective::batch_loss_grad(const ParamVector& x, const MiniBatch&,
                                           ParamVector& grad) const {
  return full_loss_grad(x, grad);
}

ParamVector QuadraticObjective::minimizer() const {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a_);
  if (!lu.isInvertible()) throw NumericError("quadratic: A is singular");
  return -lu.solve(b_);
}

void Landscape1d::validate() const {
  if (!(wide_sigma > sharp_sigma && sharp_sigma > 0.0))
    throw ArgumentError("landscape: requires wide_sigma > sharp_sigma > 0");
  if (wide_depth < 0.0 || sharp_depth < 0.0)
    throw ArgumentError("landscape: depths must be nonnegative");
}

double Landscape1d::operator()(double x) const {
  const double dw = x - wide_center;
  const double ds = x - sharp_center;
  return 1.0 - wide_depth * std::exp(-dw * dw / (2.0 * wide_sigma * wide_sigma)) -
         sharp_depth * std::exp(-ds * ds / (2.0 * sharp_sigma * sharp_sigma));
}

double Landscape1d::derivative(double x) const {
  const double dw = x - wide_center;
  const double ds = x - sharp_center;
  return wide_depth * dw / (wide_sigma * wide_sigma) *
             std::exp(-dw * dw / (2.0 * wide_sigma * wide_sigma)) +
         sharp_depth * ds / (sharp_sigma * sharp_sigma) *
             std::exp(-ds * ds / (2.0 * sharp_sigma * sharp_sigma));
}

double LandscapeObjective::full_loss(const ParamVector& x) const {
  check_dim(x);
  return f_(x[0]);
}

double LandscapeObjective::batch_loss_grad(const ParamVector& x, const MiniBatch&,
                                           ParamVector& grad) const {
  check_dim(x);
  grad.resize(1);
  grad[0] = f_.derivative(x[0]);
  return f_(x[0]);
}

}  // namespace esgd
