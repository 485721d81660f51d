#include "esgd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "esgd/errors.hpp"

namespace esgd {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw IoError("truncated file while reading header: " + path);
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

void Dataset::validate() const {
  if (labels.empty() || inputs.cols() == 0)
    throw ArgumentError("dataset is empty");
  if (inputs.cols() != static_cast<Eigen::Index>(labels.size()))
    throw ArgumentError("dataset input/label count mismatch");
  for (int lab : labels)
    if (lab < 0 || lab >= num_classes)
      throw ArgumentError("label out of range [0, num_classes)");
  if (!inputs.allFinite()) throw ArgumentError("dataset contains non-finite inputs");
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open label file: " + labels_path);

  const std::uint32_t img_magic = read_u32_be(img, images_path);
  if (img_magic != kImageMagic) {
    std::ostringstream msg;
    msg << "bad image magic in " << images_path << ": 0x" << std::hex << img_magic;
    throw FormatError(msg.str());
  }
  const std::uint32_t n_images = read_u32_be(img, images_path);
  const std::uint32_t rows = read_u32_be(img, images_path);
  const std::uint32_t cols = read_u32_be(img, images_path);

  const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
  if (lab_magic != kLabelMagic) {
    std::ostringstream msg;
    msg << "bad label magic in " << labels_path << ": 0x" << std::hex << lab_magic;
    throw FormatError(msg.str());
  }
  const std::uint32_t n_labels = read_u32_be(lab, labels_path);
  if (n_images != n_labels) {
    std::ostringstream msg;
    msg << "image/label count mismatch: " << n_images << " images vs " << n_labels
        << " labels";
    throw ConsistencyError(msg.str());
  }
  if (n_images == 0 || rows == 0 || cols == 0)
    throw FormatError("IDX header declares an empty dataset");

  const std::size_t pixels = std::size_t(rows) * cols;
  Dataset ds;
  ds.inputs.resize(pixels, n_images);
  ds.labels.resize(n_images);
  ds.image_rows = static_cast<int>(rows);
  ds.image_cols = static_cast<int>(cols);

  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw IoError("truncated image data in " + images_path);
    for (std::size_t p = 0; p < pixels; ++p)
      ds.inputs(static_cast<Eigen::Index>(p), i) = buf[p] / 255.0;
  }
  std::vector<unsigned char> lbuf(n_labels);
  lab.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(n_labels));
  if (!lab) throw IoError("truncated label data in " + labels_path);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    ds.labels[i] = lbuf[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max(10, max_label + 1);
  ds.validate();
  return ds;
}

void save_mnist_idx(const Dataset& ds, const std::string& images_path,
                    const std::string& labels_path) {
  if (ds.image_rows <= 0 || ds.image_cols <= 0)
    throw ArgumentError("save_mnist_idx requires an image-shaped dataset");
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open for writing: " + images_path);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open for writing: " + labels_path);

  const int n = ds.size();
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(n));
  write_u32_be(img, static_cast<std::uint32_t>(ds.image_rows));
  write_u32_be(img, static_cast<std::uint32_t>(ds.image_cols));
  const std::size_t pixels = std::size_t(ds.image_rows) * ds.image_cols;
  std::vector<unsigned char> buf(pixels);
  for (int i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      const double v = ds.inputs(static_cast<Eigen::Index>(p), i) * 255.0;
      buf[p] = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
    }
    img.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(pixels));
  }
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(n));
  for (int i = 0; i < n; ++i) {
    const unsigned char b = static_cast<unsigned char>(ds.labels[i]);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!img || !lab) throw IoError("short write while saving IDX pair");
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv has no header row: " + path);
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',') + 1);
  if (columns < 2) throw FormatError("csv needs at least one feature and a label column");
  const int dim = columns - 1;

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    double label_value = 0;
    while (std::getline(ss, cell, ',')) {
      const double v = std::stod(cell);
      if (col < dim)
        values.push_back(v);
      else
        label_value = v;
      ++col;
    }
    if (col != columns) throw FormatError("csv row has wrong column count: " + path);
    labels.push_back(static_cast<int>(label_value));
  }
  if (labels.empty()) throw FormatError("csv has no data rows: " + path);

  Dataset ds;
  const int n = static_cast<int>(labels.size());
  ds.inputs.resize(dim, n);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) ds.inputs(d, i) = values[std::size_t(i) * dim + d];
  ds.labels = std::move(labels);
  ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  const int dim = ds.dim();
  for (int d = 0; d < dim; ++d) out << "x" << d << ",";
  out << "label\n";
  out.precision(17);
  for (int i = 0; i < ds.size(); ++i) {
    for (int d = 0; d < dim; ++d) out << ds.inputs(d, i) << ",";
    out << ds.labels[i] << "\n";
  }
  if (!out) throw IoError("short write while saving csv: " + path);
}

namespace {

Dataset gather(const Dataset& ds, std::vector<int> idx) {
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.inputs.resize(ds.dim(), static_cast<Eigen::Index>(idx.size()));
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = ds.inputs.col(idx[i]);
    out.labels[i] = ds.labels[idx[i]];
  }
  out.num_classes = ds.num_classes;
  out.image_rows = ds.image_rows;
  out.image_cols = ds.image_cols;
  return out;
}

// First m entries of a seeded partial Fisher-Yates shuffle of [0, n).
std::vector<int> draw_without_replacement(int n, int m, Rng& rng) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int j = 0; j < m; ++j) {
    const int i = j + rng.next_below(n - j);
    std::swap(pool[j], pool[i]);
  }
  pool.resize(m);
  return pool;
}

}  // namespace

Dataset subsample(const Dataset& ds, int k, std::uint64_t seed, bool stratified) {
  const int n = ds.size();
  if (k < 1 || k > n) throw ArgumentError("subsample: k must be in [1, N]");
  Rng rng(seed);
  if (!stratified) return gather(ds, draw_without_replacement(n, k, rng));

  std::vector<std::vector<int>> by_class(ds.num_classes);
  for (int i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);
  const int base = k / ds.num_classes;
  const int rem = k % ds.num_classes;
  std::vector<int> chosen;
  chosen.reserve(k);
  for (int c = 0; c < ds.num_classes; ++c) {
    const int want = base + (c < rem ? 1 : 0);
    const int have = static_cast<int>(by_class[c].size());
    if (want > have)
      throw ArgumentError("subsample: class " + std::to_string(c) + " has only " +
                          std::to_string(have) + " samples, need " + std::to_string(want));
    if (want == 0) continue;
    const auto picks = draw_without_replacement(have, want, rng);
    for (int p : picks) chosen.push_back(by_class[c][p]);
  }
  return gather(ds, std::move(chosen));
}

MiniBatch sample_minibatch(int dataset_size, int m, Rng& rng) {
  if (m < 1 || m > dataset_size)
    throw ArgumentError("sample_minibatch: m must be in [1, N]");
  return MiniBatch{draw_without_replacement(dataset_size, m, rng)};
}

MiniBatch sample_minibatch(const Dataset& ds, int m, Rng& rng) {
  return sample_minibatch(ds.size(), m, rng);
}

Dataset crop_center(const Dataset& ds, int out_rows, int out_cols) {
  if (ds.image_rows <= 0 || ds.image_cols <= 0)
    throw ArgumentError("crop_center requires an image-shaped dataset");
  if (out_rows < 1 || out_rows > ds.image_rows || out_cols < 1 || out_cols > ds.image_cols)
    throw ArgumentError("crop_center: output size exceeds image size");
  const int r0 = (ds.image_rows - out_rows) / 2;
  const int c0 = (ds.image_cols - out_cols) / 2;
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(out_rows) * out_cols, ds.size());
  for (int i = 0; i < ds.size(); ++i)
    for (int r = 0; r < out_rows; ++r)
      for (int c = 0; c < out_cols; ++c)
        out.inputs(static_cast<Eigen::Index>(r) * out_cols + c, i) =
            ds.inputs(static_cast<Eigen::Index>(r0 + r) * ds.image_cols + (c0 + c), i);
  out.labels = ds.labels;
  out.num_classes = ds.num_classes;
  out.image_rows = out_rows;
  out.image_cols = out_cols;
  return out;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, int holdout_count,
                                          std::uint64_t seed) {
  const int n = ds.size();
  if (holdout_count < 1 || holdout_count >= n)
    throw ArgumentError("split_holdout: holdout count must be in [1, N)");
  Rng rng(seed);
  std::vector<int> order = draw_without_replacement(n, n, rng);
  std::vector<int> hold(order.begin(), order.begin() + holdout_count);
  std::vector<int> rest(order.begin() + holdout_count, order.end());
  return {gather(ds, std::move(rest)), gather(ds, std::move(hold))};
}

Dataset make_synthetic_classification(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.rows < 4 || spec.cols < 4 || spec.count < spec.classes)
    throw ArgumentError("make_synthetic_classification: degenerate spec");
  Rng proto_rng(spec.seed, 0);
  Rng sample_rng(spec.seed, 1);

  const int pixels = spec.rows * spec.cols;
  // Class prototypes: Gaussian bumps confined to the central half of the
  // image so center crops keep the classes separable.
  Eigen::MatrixXd protos = Eigen::MatrixXd::Zero(pixels, spec.classes);
  constexpr int kBumps = 6;
  for (int c = 0; c < spec.classes; ++c) {
    for (int b = 0; b < kBumps; ++b) {
      const double cr = spec.rows * (0.25 + 0.5 * proto_rng.next_double());
      const double cc = spec.cols * (0.25 + 0.5 * proto_rng.next_double());
      const double sigma = 1.5 + 1.5 * proto_rng.next_double();
      const double amp = 0.5 + 0.5 * proto_rng.next_double();
      for (int r = 0; r < spec.rows; ++r)
        for (int col = 0; col < spec.cols; ++col) {
          const double d2 = (r - cr) * (r - cr) + (col - cc) * (col - cc);
          protos(static_cast<Eigen::Index>(r) * spec.cols + col, c) +=
              amp * std::exp(-d2 / (2.0 * sigma * sigma));
        }
    }
    const double peak = protos.col(c).maxCoeff();
    if (peak > 0) protos.col(c) /= peak;
  }

  Dataset ds;
  ds.inputs.resize(pixels, spec.count);
  ds.labels.resize(spec.count);
  ds.num_classes = spec.classes;
  ds.image_rows = spec.rows;
  ds.image_cols = spec.cols;
  for (int i = 0; i < spec.count; ++i) {
    const int c = i % spec.classes;
    ds.labels[i] = c;
    const double intensity = 0.7 + 0.6 * sample_rng.next_double();
    for (int p = 0; p < pixels; ++p) {
      const double v = intensity * protos(p, c) + spec.noise * sample_rng.next_gaussian();
      ds.inputs(p, i) = std::clamp(v, 0.0, 1.0);
    }
  }
  return ds;
}

}  // namespace esgd
