#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "esgd/objective.hpp"
#include "esgd/rng.hpp"

namespace esgd {

/// Eigenvalue summary of a trained model's curvature, from either a dense
/// symmetric Hessian or a Fisher-information diagonal.
class SpectrumReport {
 public:
  enum class Source { exact_hessian, fisher_diagonal };

  /// Full symmetric eigendecomposition (eigenvalues only). The input must be
  /// symmetric up to 1e-8 relative; symmetrize first if it is not.
  static SpectrumReport from_matrix(const Eigen::MatrixXd& symmetric);
  static SpectrumReport from_diagonal(const ParamVector& diagonal);

  const std::vector<double>& eigenvalues() const { return eigenvalues_; }  // ascending
  int n() const { return static_cast<int>(eigenvalues_.size()); }
  double min_eig() const { return eigenvalues_.front(); }
  double max_eig() const { return eigenvalues_.back(); }
  double trace() const { return trace_; }

  /// Fraction of eigenvalues with |lambda| <= threshold; nondecreasing in
  /// the threshold.
  double frac_near_zero(double threshold) const;

  Source source() const { return source_; }

  /// One eigenvalue per row.
  void write_csv(std::ostream& out) const;
  /// {n, frac_abs_below_1e-2/-4/-5, min_eig, max_eig, trace, source}.
  std::string summary_json() const;

  /// Fixed-width bins over [min_eig, max_eig] plus one dedicated bin for the
  /// zero neighborhood |lambda| <= zero_band, so the central peak can be
  /// clipped without hiding its mass. Bin counts sum to n.
  struct HistogramBin {
    double lo;
    double hi;
    long count;
    bool zero_band;
  };
  std::vector<HistogramBin> histogram(int bins, double zero_band = 1e-4) const;
  void write_histogram_csv(std::ostream& out, int bins, double zero_band = 1e-4) const;

 private:
  std::vector<double> eigenvalues_;
  double trace_ = 0.0;
  Source source_ = Source::exact_hessian;
};

/// Angle in degrees between two nonzero directions; scale-invariant, the
/// cosine is clamped to [-1, 1] before acos. Throws ArgumentError on a zero
/// vector.
double gradient_angle(const ParamVector& u, const ParamVector& v);

/// Gradient field for smoothness probing (analytic or oracle-backed).
using GradField = std::function<ParamVector(const ParamVector&)>;

/// Empirical Lipschitz constant of a gradient field over a ball: the max of
/// |g(x) - g(y)| / |x - y| over `pairs` uniformly sampled pairs. Requires
/// pairs >= 100 and radius > 0.
double empirical_smoothness(const GradField& grad, const ParamVector& center,
                            double radius, int pairs, Rng& rng);

}  // namespace esgd
