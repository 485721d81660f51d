#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "esgd/rng.hpp"

namespace esgd {

/// A fixed classification dataset held in memory.
///
/// Samples are stored as columns of `inputs` (dim x N, 64-bit floats) with
/// image pixel values normalized to [0, 1]. Datasets are immutable after
/// construction; every transformation below returns a new Dataset.
struct Dataset {
  Eigen::MatrixXd inputs;    // dim x N, one sample per column
  std::vector<int> labels;   // size N, values in [0, num_classes)
  int num_classes = 0;
  int image_rows = 0;        // 0 when samples are not image-shaped
  int image_cols = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int dim() const { return static_cast<int>(inputs.rows()); }

  /// Throws ArgumentError if the internal invariants do not hold.
  void validate() const;
};

/// Indices of one sampled minibatch; indices are distinct within a batch.
struct MiniBatch {
  std::vector<int> indices;
  int size() const { return static_cast<int>(indices.size()); }
};

/// Loads an image/label pair in the IDX binary format (big-endian headers,
/// image magic 0x00000803, label magic 0x00000801). Pixels are scaled to
/// [0, 1]. Throws FormatError on a bad magic number, ConsistencyError when
/// the two files declare different sample counts, IoError on truncation.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Writes a dataset back out as an IDX pair; pixels are quantized to bytes.
/// Loading the result reproduces the label array and (for byte-valued data)
/// the pixel array bit-identically.
void save_mnist_idx(const Dataset& ds, const std::string& images_path,
                    const std::string& labels_path);

/// CSV serialization for synthetic datasets: header row, one sample per
/// line, label in the last column.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

/// k samples drawn without replacement, deterministic given seed. With
/// `stratified` set, per-class counts differ by at most one. Throws
/// ArgumentError when k exceeds the dataset (or a class, if stratified).
Dataset subsample(const Dataset& ds, int k, std::uint64_t seed, bool stratified = false);

/// m distinct indices, uniform without replacement; advances rng by exactly
/// m uniform draws. Throws ArgumentError when m > N or m < 1.
MiniBatch sample_minibatch(const Dataset& ds, int m, Rng& rng);
MiniBatch sample_minibatch(int dataset_size, int m, Rng& rng);

/// Center crop for image-shaped datasets (e.g. 28x28 -> 10x10).
Dataset crop_center(const Dataset& ds, int out_rows, int out_cols);

/// Seeded shuffle split into (rest, holdout) with `holdout_count` samples in
/// the second part. Used for validation splits.
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, int holdout_count,
                                          std::uint64_t seed);

/// Synthetic image classification task: each class is a fixed smooth
/// prototype (a sum of Gaussian bumps placed in the central region) and
/// samples are intensity-jittered, noise-corrupted copies. Labels cycle
/// round-robin so classes are balanced. Deterministic given seed.
struct SyntheticSpec {
  int classes = 10;
  int rows = 28;
  int cols = 28;
  int count = 1000;
  double noise = 0.25;     // pixel noise standard deviation before clamping
  std::uint64_t seed = 1;
};
Dataset make_synthetic_classification(const SyntheticSpec& spec);

}  // namespace esgd
