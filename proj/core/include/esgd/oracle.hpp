#pragma once

#include <functional>
#include <vector>

#include "esgd/objective.hpp"

namespace esgd {

/// Modified Gibbs density around a center point x:
///   p(x') ∝ exp(-beta f(x') - beta gamma/2 |x - x'|^2).
/// beta defaults to 1, which is what every algorithm path assumes; other
/// values are accepted by the quadrature evaluators only.
struct GibbsSpec {
  double beta = 1.0;
  double gamma = 0.0;
  ParamVector center;

  void validate() const;
  double center1d() const;  // requires a 1-dimensional center
};

inline GibbsSpec make_gibbs_1d(double gamma, double x, double beta = 1.0) {
  GibbsSpec spec;
  spec.beta = beta;
  spec.gamma = gamma;
  spec.center = ParamVector::Constant(1, x);
  return spec;
}

/// Uniform 1-d quadrature grid; `points` is rounded up to odd for Simpson.
struct Grid1d {
  double lo = -10.0;
  double hi = 10.0;
  int points = 4001;
};

using Fn1d = std::function<double(double)>;

/// Everything one Simpson pass over the modified Gibbs density yields.
/// All sums are log-sum-exp stabilized. The tail audit bounds the mass the
/// grid misses by the Gaussian-factor tail weighted with the integrand value
/// at the endpoints; estimates above 1e-10 of the total raise CoverageError.
struct GibbsQuadrature {
  double log_partition = 0.0;  // F = log Z
  double mean = 0.0;           // <x'>
  double mean_energy = 0.0;    // <beta (f + gamma/2 (x - x')^2)>
  double tail_fraction = 0.0;
};
GibbsQuadrature integrate_modified_gibbs(const Fn1d& f, const GibbsSpec& spec,
                                         const Grid1d& grid);

/// Local entropy F(x, gamma) = log ∫ exp(-f(x') - gamma/2 (x - x')^2) dx'.
double local_entropy_quadrature(const Fn1d& f, const GibbsSpec& spec, const Grid1d& grid);

/// dF/dx = -beta gamma (x - <x'>) with <x'> from quadrature.
double local_entropy_grad_quadrature(const Fn1d& f, const GibbsSpec& spec,
                                     const Grid1d& grid);

/// Differential entropy -∫ p log p of the modified Gibbs density.
double classical_entropy_quadrature(const Fn1d& f, const GibbsSpec& spec,
                                    const Grid1d& grid);

/// Exact local entropy for f(x) = 0.5 x'Ax + b'x:
///   mean  = (A + gamma I)^{-1} (gamma x - b)
///   gradF = -beta gamma (x - mean)
///   F     = n/2 log 2pi - 1/2 log det(beta (A + gamma I))
///           + 1/2 c' M^{-1} c - beta gamma/2 x'x,   c = beta (b - gamma x).
/// Throws ArgumentError when A + gamma I is not positive definite.
struct QuadraticGibbs {
  double log_partition = 0.0;
  ParamVector grad;
  ParamVector mean;
};
QuadraticGibbs local_entropy_quadratic_closed_form(const Eigen::MatrixXd& A,
                                                   const ParamVector& b,
                                                   const GibbsSpec& spec);

/// Second-order (saddle point) approximation of the negative local-entropy
/// gradient: gamma (H + gamma I)^{-1} grad f, with H the objective's exact
/// Hessian at x. Exact for quadratics. Requires beta = 1 semantics.
ParamVector saddle_point_grad(const Objective& obj, const ParamVector& x, double gamma);

/// Dense evaluation of -F(x, gamma) over a query grid for several gammas,
/// with the integration grid rebuilt around each query point (half-width
/// 10 / sqrt(gamma), resolution fine enough for `feature_scale`). Reports
/// the per-gamma argmin over the query grid.
struct SmoothingRow {
  double gamma;
  double x;
  double neg_entropy;
};
struct SmoothingTable {
  std::vector<SmoothingRow> rows;
  std::vector<std::pair<double, double>> argmin;  // (gamma, argmin x)
};
SmoothingTable smoothing_family(const Fn1d& f, const std::vector<double>& gammas,
                                const Grid1d& query, double feature_scale);
SmoothingTable smoothing_family(const Landscape1d& f, const std::vector<double>& gammas,
                                const Grid1d& query);

/// Integration grid covering `half_sigmas` standard deviations of the
/// Gaussian factor around x, resolving features of size feature_scale.
Grid1d auto_integration_grid(double x, double gamma, double beta, double feature_scale,
                             double half_sigmas = 10.0);

}  // namespace esgd
