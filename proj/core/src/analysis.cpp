#include "esgd/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "esgd/errors.hpp"

namespace esgd {

SpectrumReport SpectrumReport::from_matrix(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols())
    throw ArgumentError("spectrum: matrix must be square");
  const double scale = std::max(symmetric.cwiseAbs().maxCoeff(), 1e-300);
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw ArgumentError("spectrum: matrix is not symmetric; symmetrize first");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericError("spectrum: eigensolver did not converge");

  SpectrumReport report;
  const auto& evals = solver.eigenvalues();
  report.eigenvalues_.assign(evals.data(), evals.data() + evals.size());
  std::sort(report.eigenvalues_.begin(), report.eigenvalues_.end());
  report.trace_ = evals.sum();
  report.source_ = Source::exact_hessian;
  return report;
}

SpectrumReport SpectrumReport::from_diagonal(const ParamVector& diagonal) {
  if (diagonal.size() < 1) throw ArgumentError("spectrum: empty diagonal");
  SpectrumReport report;
  report.eigenvalues_.assign(diagonal.data(), diagonal.data() + diagonal.size());
  std::sort(report.eigenvalues_.begin(), report.eigenvalues_.end());
  report.trace_ = diagonal.sum();
  report.source_ = Source::fisher_diagonal;
  return report;
}

double SpectrumReport::frac_near_zero(double threshold) const {
  if (threshold < 0.0) throw ArgumentError("spectrum: threshold must be >= 0");
  long count = 0;
  for (double v : eigenvalues_)
    if (std::abs(v) <= threshold) ++count;
  return static_cast<double>(count) / n();
}

void SpectrumReport::write_csv(std::ostream& out) const {
  out << "eigenvalue\n";
  out.precision(17);
  for (double v : eigenvalues_) out << v << "\n";
}

std::string SpectrumReport::summary_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "{\"n\": " << n()                                                   //
      << ", \"frac_abs_below_1e-2\": " << frac_near_zero(1e-2)               //
      << ", \"frac_abs_below_1e-4\": " << frac_near_zero(1e-4)               //
      << ", \"frac_abs_below_1e-5\": " << frac_near_zero(1e-5)               //
      << ", \"min_eig\": " << min_eig() << ", \"max_eig\": " << max_eig()    //
      << ", \"trace\": " << trace() << ", \"source\": \""
      << (source_ == Source::exact_hessian ? "exact_hessian" : "fisher_diagonal")
      << "\"}";
  return out.str();
}

std::vector<SpectrumReport::HistogramBin> SpectrumReport::histogram(
    int bins, double zero_band) const {
  if (bins < 1) throw ArgumentError("spectrum: need at least one histogram bin");
  if (zero_band < 0.0) throw ArgumentError("spectrum: zero band must be >= 0");

  std::vector<HistogramBin> out;
  HistogramBin zero{-zero_band, zero_band, 0, true};
  const double lo = min_eig();
  const double span = std::max(max_eig() - lo, 1e-300);
  std::vector<long> counts(bins, 0);
  for (double v : eigenvalues_) {
    if (std::abs(v) <= zero_band) {
      ++zero.count;
      continue;
    }
    const int idx = std::min(bins - 1, static_cast<int>(bins * (v - lo) / span));
    ++counts[idx];
  }
  for (int b = 0; b < bins; ++b)
    out.push_back(HistogramBin{lo + span * b / bins, lo + span * (b + 1) / bins,
                               counts[b], false});
  out.push_back(zero);
  return out;
}

void SpectrumReport::write_histogram_csv(std::ostream& out, int bins,
                                         double zero_band) const {
  out << "lo,hi,count,zero_band\n";
  out.precision(17);
  for (const HistogramBin& bin : histogram(bins, zero_band))
    out << bin.lo << ',' << bin.hi << ',' << bin.count << ',' << (bin.zero_band ? 1 : 0)
        << "\n";
}

double gradient_angle(const ParamVector& u, const ParamVector& v) {
  if (u.size() != v.size()) throw ArgumentError("angle: dimension mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0)
    throw ArgumentError("angle: undefined for a zero vector");
  const double cosine = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / M_PI;
}

double empirical_smoothness(const GradField& grad, const ParamVector& center,
                            double radius, int pairs, Rng& rng) {
  if (!(radius > 0.0)) throw ArgumentError("smoothness: region has zero diameter");
  if (pairs < 100) throw ArgumentError("smoothness: need at least 100 pairs");
  const Eigen::Index n = center.size();

  const auto sample_in_ball = [&]() {
    ParamVector dir = rng.gaussian_vector(n);
    const double norm = dir.norm();
    if (norm == 0.0) return ParamVector(center);
    const double r =
        radius * std::pow(rng.next_double(), 1.0 / static_cast<double>(n));
    return ParamVector(center + (r / norm) * dir);
  };

  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const ParamVector x = sample_in_ball();
    const ParamVector y = sample_in_ball();
    const double dist = (x - y).norm();
    if (dist < 1e-12 * radius) continue;
    worst = std::max(worst, (grad(x) - grad(y)).norm() / dist);
  }
  return worst;
}

}  // namespace esgd
