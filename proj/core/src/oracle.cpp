#include "esgd/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "esgd/errors.hpp"

namespace esgd {

namespace {

constexpr double kTailLimit = 1e-10;

// log of ∫_d^∞ exp(-kappa t^2 / 2) dt, stable for large d.
double log_gaussian_tail(double d, double kappa) {
  const double z = d * std::sqrt(kappa / 2.0);
  const double half_log_scale = 0.5 * std::log(M_PI / (2.0 * kappa));
  if (z < 25.0) return half_log_scale + std::log(std::erfc(z));
  // erfc(z) ~ exp(-z^2) / (z sqrt(pi)) for large z.
  return half_log_scale - z * z - std::log(z) - 0.5 * std::log(M_PI);
}

double log_add(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

void GibbsSpec::validate() const {
  if (!(beta > 0.0)) throw ArgumentError("gibbs: beta must be > 0");
  if (gamma < 0.0) throw ArgumentError("gibbs: gamma must be >= 0");
  if (center.size() < 1) throw ArgumentError("gibbs: center is empty");
}

double GibbsSpec::center1d() const {
  if (center.size() != 1)
    throw ArgumentError("gibbs: operation requires a 1-dimensional center");
  return center[0];
}

GibbsQuadrature integrate_modified_gibbs(const Fn1d& f, const GibbsSpec& spec,
                                         const Grid1d& grid) {
  spec.validate();
  if (!(spec.gamma > 0.0))
    throw ArgumentError("quadrature: gamma must be > 0 for a normalizable density");
  if (!(grid.hi > grid.lo)) throw ArgumentError("quadrature: grid must have hi > lo");
  const double x = spec.center1d();
  if (x < grid.lo || x > grid.hi)
    throw CoverageError("quadrature: center lies outside the grid", 1.0);

  int points = std::max(grid.points, 3);
  if (points % 2 == 0) ++points;
  const double h = (grid.hi - grid.lo) / (points - 1);

  // One pass: energies, then stabilized Simpson sums for Z, <x'>, <g>.
  std::vector<double> energy(points);
  double min_energy = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double xp = grid.lo + i * h;
    const double d = x - xp;
    energy[i] = spec.beta * (f(xp) + 0.5 * spec.gamma * d * d);
    min_energy = std::min(min_energy, energy[i]);
  }
  if (!std::isfinite(min_energy))
    throw NumericError("quadrature: energy is non-finite on the grid");

  double z_sum = 0.0, x_sum = 0.0, g_sum = 0.0;
  for (int i = 0; i < points; ++i) {
    const double w = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double e = w * std::exp(-(energy[i] - min_energy));
    const double xp = grid.lo + i * h;
    z_sum += e;
    x_sum += e * xp;
    g_sum += e * energy[i];
  }

  GibbsQuadrature out;
  out.log_partition = -min_energy + std::log(z_sum) + std::log(h / 3.0);
  out.mean = x_sum / z_sum;
  out.mean_energy = g_sum / z_sum;

  // Tail audit: bound the missed mass by the integrand value at each edge
  // times the Gaussian-factor tail beyond it (f taken flat past the grid).
  const double kappa = spec.beta * spec.gamma;
  const double log_tail =
      log_add(-spec.beta * f(grid.lo) + log_gaussian_tail(x - grid.lo, kappa),
              -spec.beta * f(grid.hi) + log_gaussian_tail(grid.hi - x, kappa));
  out.tail_fraction = std::exp(log_tail - out.log_partition);
  if (out.tail_fraction > kTailLimit) {
    std::ostringstream msg;
    msg << "quadrature: grid [" << grid.lo << ", " << grid.hi
        << "] misses an estimated fraction " << out.tail_fraction
        << " of the integrand mass";
    throw CoverageError(msg.str(), out.tail_fraction);
  }
  return out;
}

double local_entropy_quadrature(const Fn1d& f, const GibbsSpec& spec, const Grid1d& grid) {
  return integrate_modified_gibbs(f, spec, grid).log_partition;
}

double local_entropy_grad_quadrature(const Fn1d& f, const GibbsSpec& spec,
                                     const Grid1d& grid) {
  const GibbsQuadrature q = integrate_modified_gibbs(f, spec, grid);
  return -spec.beta * spec.gamma * (spec.center1d() - q.mean);
}

double classical_entropy_quadrature(const Fn1d& f, const GibbsSpec& spec,
                                    const Grid1d& grid) {
  const GibbsQuadrature q = integrate_modified_gibbs(f, spec, grid);
  // -∫ p log p = <energy> + log Z.
  return q.mean_energy + q.log_partition;
}

QuadraticGibbs local_entropy_quadratic_closed_form(const Eigen::MatrixXd& A,
                                                   const ParamVector& b,
                                                   const GibbsSpec& spec) {
  spec.validate();
  const Eigen::Index n = b.size();
  if (A.rows() != n || A.cols() != n || spec.center.size() != n)
    throw ArgumentError("quadratic closed form: dimension mismatch");
  const ParamVector& x = spec.center;

  Eigen::MatrixXd shifted = A;
  shifted.diagonal().array() += spec.gamma;
  const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw ArgumentError("quadratic closed form: A + gamma I is not positive definite");

  QuadraticGibbs out;
  out.mean = llt.solve(spec.gamma * x - b);
  out.grad = -spec.beta * spec.gamma * (x - out.mean);

  // log det of beta * (A + gamma I) from the Cholesky factor.
  double log_det = n * std::log(spec.beta);
  for (Eigen::Index i = 0; i < n; ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));

  const ParamVector c = spec.beta * (b - spec.gamma * x);
  // M^{-1} c with M = beta (A + gamma I).
  const ParamVector minv_c = llt.solve(c) / spec.beta;
  out.log_partition = 0.5 * n * std::log(2.0 * M_PI) - 0.5 * log_det +
                      0.5 * c.dot(minv_c) -
                      0.5 * spec.beta * spec.gamma * x.squaredNorm();
  return out;
}

ParamVector saddle_point_grad(const Objective& obj, const ParamVector& x, double gamma) {
  if (x.size() != obj.dim()) throw ArgumentError("saddle_point_grad: dimension mismatch");
  if (gamma < 0.0) throw ArgumentError("saddle_point_grad: gamma must be >= 0");
  ParamVector g(x.size());
  obj.full_loss_grad(x, g);
  Eigen::MatrixXd shifted = obj.exact_hessian(x);
  shifted.diagonal().array() += gamma;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("saddle_point_grad: H + gamma I factorization failed");
  const ParamVector y = ldlt.solve(g);
  if (!y.allFinite()) throw NumericError("saddle_point_grad: singular system");
  return gamma * y;
}

Grid1d auto_integration_grid(double x, double gamma, double beta, double feature_scale,
                             double half_sigmas) {
  if (!(gamma > 0.0) || !(beta > 0.0))
    throw ArgumentError("auto grid: gamma and beta must be > 0");
  if (!(feature_scale > 0.0)) throw ArgumentError("auto grid: feature scale must be > 0");
  const double sigma = 1.0 / std::sqrt(beta * gamma);
  const double half_width = half_sigmas * sigma;
  const double step = std::min(feature_scale / 8.0, half_width / 250.0);
  int points = 2 * static_cast<int>(std::ceil(half_width / step)) + 1;
  points = std::clamp(points, 1001, 2000001);
  return Grid1d{x - half_width, x + half_width, points};
}

SmoothingTable smoothing_family(const Fn1d& f, const std::vector<double>& gammas,
                                const Grid1d& query, double feature_scale) {
  if (gammas.size() < 2)
    throw ArgumentError("smoothing_family: need at least two gamma values");
  if (query.points < 2) throw ArgumentError("smoothing_family: query grid too small");

  SmoothingTable table;
  table.rows.reserve(gammas.size() * query.points);
  const double h = (query.hi - query.lo) / (query.points - 1);
  for (double gamma : gammas) {
    double best_x = query.lo;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < query.points; ++i) {
      const double x = query.lo + i * h;
      const GibbsSpec spec = make_gibbs_1d(gamma, x);
      const Grid1d grid = auto_integration_grid(x, gamma, 1.0, feature_scale);
      const double neg_f = -local_entropy_quadrature(f, spec, grid);
      table.rows.push_back(SmoothingRow{gamma, x, neg_f});
      if (neg_f < best_val) {
        best_val = neg_f;
        best_x = x;
      }
    }
    table.argmin.emplace_back(gamma, best_x);
  }
  return table;
}

SmoothingTable smoothing_family(const Landscape1d& f, const std::vector<double>& gammas,
                                const Grid1d& query) {
  f.validate();
  return smoothing_family([&f](double x) { return f(x); }, gammas, query, f.sharp_sigma);
}

}  // namespace esgd
