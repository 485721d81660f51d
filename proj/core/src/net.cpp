#include "esgd/net.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "esgd/errors.hpp"

namespace esgd {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw ArgumentError("mlp: need at least input and output layers");
  for (int s : layer_sizes)
    if (s < 1) throw ArgumentError("mlp: layer sizes must be >= 1");
  if (dropout_prob < 0.0 || dropout_prob >= 1.0)
    throw ArgumentError("mlp: dropout_prob must be in [0, 1)");
}

int MlpSpec::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

MlpObjective::MlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  spec_.validate();
  if (!data_) throw ArgumentError("mlp: null dataset");
  data_->validate();
  if (data_->dim() != spec_.layer_sizes.front())
    throw ArgumentError("mlp: dataset dim " + std::to_string(data_->dim()) +
                        " != input layer " + std::to_string(spec_.layer_sizes.front()));
  if (data_->num_classes > spec_.layer_sizes.back())
    throw ArgumentError("mlp: more classes than output units");
  int offset = 0;
  for (std::size_t l = 0; l + 1 < spec_.layer_sizes.size(); ++l) {
    weight_offsets_.push_back(offset);
    offset += spec_.layer_sizes[l] * spec_.layer_sizes[l + 1];
    bias_offsets_.push_back(offset);
    offset += spec_.layer_sizes[l + 1];
  }
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

struct ForwardCache {
  std::vector<MatrixXd> pre;    // pre-activations per layer
  std::vector<MatrixXd> post;   // inputs seen by each layer (post mask)
  std::vector<MatrixXd> masks;  // dropout masks (scaled), hidden layers only
  MatrixXd probs;               // softmax of the last pre-activation
  double loss = 0.0;
};

}  // namespace

// Shared forward pass. `cache` may be null for loss-only evaluation, but the
// mask stream is consumed identically either way.
static double mlp_forward(const MlpSpec& spec, const std::vector<int>& w_off,
                          const std::vector<int>& b_off, const Dataset& data,
                          const ParamVector& x, const MiniBatch& batch, bool dropout_on,
                          Rng* rng, ForwardCache* cache) {
  const int m = batch.size();
  if (m < 1) throw ArgumentError("mlp: empty batch");
  const int layers = static_cast<int>(spec.layer_sizes.size()) - 1;
  const double p = dropout_on ? spec.dropout_prob : 0.0;
  const double keep = 1.0 - p;

  MatrixXd h(spec.layer_sizes[0], m);
  for (int j = 0; j < m; ++j) {
    const int idx = batch.indices[j];
    if (idx < 0 || idx >= data.size()) throw ArgumentError("mlp: batch index out of range");
    h.col(j) = data.inputs.col(idx);
  }

  for (int l = 0; l < layers; ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const Eigen::Map<const MatrixXd> w(x.data() + w_off[l], out, in);
    const Eigen::Map<const Eigen::VectorXd> b(x.data() + b_off[l], out);
    if (cache) cache->post.push_back(h);
    MatrixXd z = w * h;
    z.colwise() += b;
    if (!z.allFinite())
      throw NumericError("mlp: non-finite activations in layer " + std::to_string(l));
    if (l < layers - 1) {
      h = z.cwiseMax(0.0);
      if (p > 0.0) {
        MatrixXd mask(out, m);
        for (int j = 0; j < m; ++j)
          for (int u = 0; u < out; ++u)
            mask(u, j) = (rng->next_double() < keep) ? 1.0 / keep : 0.0;
        h = h.cwiseProduct(mask);
        if (cache) cache->masks.push_back(std::move(mask));
      } else if (cache) {
        cache->masks.emplace_back();
      }
    } else {
      h = z;
    }
    if (cache) cache->pre.push_back(std::move(z));
  }

  // Stable softmax cross-entropy, mean over the batch.
  double loss = 0.0;
  MatrixXd probs;
  if (cache) probs.resize(h.rows(), m);
  for (int j = 0; j < m; ++j) {
    const auto z = h.col(j);
    const double zmax = z.maxCoeff();
    const double sumexp = (z.array() - zmax).exp().sum();
    loss += std::log(sumexp) + zmax - z(data.labels[batch.indices[j]]);
    if (cache) probs.col(j) = (z.array() - zmax).exp() / sumexp;
  }
  loss /= m;
  if (!std::isfinite(loss)) throw NumericError("mlp: non-finite loss");
  if (cache) {
    cache->probs = std::move(probs);
    cache->loss = loss;
  }
  return loss;
}

double MlpObjective::forward_loss(const ParamVector& x, const MiniBatch& batch,
                                  bool dropout_on, Rng& rng) const {
  check_dim(x);
  return mlp_forward(spec_, weight_offsets_, bias_offsets_, *data_, x, batch, dropout_on,
                     &rng, nullptr);
}

double MlpObjective::backward_grad(const ParamVector& x, const MiniBatch& batch,
                                   bool dropout_on, Rng& rng, ParamVector& grad) const {
  check_dim(x);
  ForwardCache cache;
  mlp_forward(spec_, weight_offsets_, bias_offsets_, *data_, x, batch, dropout_on, &rng,
              &cache);

  const int m = batch.size();
  const int layers = static_cast<int>(spec_.layer_sizes.size()) - 1;
  grad = ParamVector::Zero(dim());

  MatrixXd dz = cache.probs;
  for (int j = 0; j < m; ++j) dz(data_->labels[batch.indices[j]], j) -= 1.0;
  dz /= m;

  for (int l = layers - 1; l >= 0; --l) {
    const int in = spec_.layer_sizes[l];
    const int out = spec_.layer_sizes[l + 1];
    Eigen::Map<MatrixXd> gw(grad.data() + weight_offsets_[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + bias_offsets_[l], out);
    gw = dz * cache.post[l].transpose();
    gb = dz.rowwise().sum();
    if (l > 0) {
      const Eigen::Map<const MatrixXd> w(x.data() + weight_offsets_[l], out, in);
      MatrixXd dh = w.transpose() * dz;
      if (cache.masks[l - 1].size() > 0) dh = dh.cwiseProduct(cache.masks[l - 1]);
      dz = dh.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return cache.loss;
}

double MlpObjective::full_loss(const ParamVector& x) const {
  check_dim(x);
  const int n = data_->size();
  constexpr int kChunk = 256;
  Rng unused(0);
  double loss = 0.0;
  for (int start = 0; start < n; start += kChunk) {
    const int count = std::min(kChunk, n - start);
    MiniBatch batch;
    batch.indices.resize(count);
    for (int i = 0; i < count; ++i) batch.indices[i] = start + i;
    loss += count * mlp_forward(spec_, weight_offsets_, bias_offsets_, *data_, x, batch,
                                false, &unused, nullptr);
  }
  return loss / n;
}

double MlpObjective::batch_loss_grad(const ParamVector& x, const MiniBatch& batch,
                                     ParamVector& grad) const {
  Rng unused(0);
  return backward_grad(x, batch, false, unused, grad);
}

double MlpObjective::batch_loss_grad(const ParamVector& x, const MiniBatch& batch,
                                     ParamVector& grad, Rng& rng) const {
  return backward_grad(x, batch, spec_.dropout_prob > 0.0, rng, grad);
}

Eigen::MatrixXd MlpObjective::exact_hessian(const ParamVector& x) const {
  return finite_difference_hessian(*this, x).hessian;
}

double MlpObjective::error_rate(const ParamVector& x, const Dataset& eval_set) const {
  check_dim(x);
  if (eval_set.dim() != data_->dim())
    throw ArgumentError("mlp: evaluation set dimension mismatch");
  const int layers = static_cast<int>(spec_.layer_sizes.size()) - 1;
  const int n = eval_set.size();
  constexpr int kChunk = 512;
  int wrong = 0;
  for (int start = 0; start < n; start += kChunk) {
    const int count = std::min(kChunk, n - start);
    MatrixXd h = eval_set.inputs.middleCols(start, count);
    for (int l = 0; l < layers; ++l) {
      const int in = spec_.layer_sizes[l];
      const int out = spec_.layer_sizes[l + 1];
      const Eigen::Map<const MatrixXd> w(x.data() + weight_offsets_[l], out, in);
      const Eigen::Map<const Eigen::VectorXd> b(x.data() + bias_offsets_[l], out);
      MatrixXd z = w * h;
      z.colwise() += b;
      h = (l < layers - 1) ? z.cwiseMax(0.0) : z;
    }
    for (int j = 0; j < count; ++j) {
      Index best;
      h.col(j).maxCoeff(&best);
      if (static_cast<int>(best) != eval_set.labels[start + j]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / n;
}

ParamVector MlpObjective::initial_params(Rng& rng) const {
  ParamVector x = ParamVector::Zero(dim());
  const int layers = static_cast<int>(spec_.layer_sizes.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    const int in = spec_.layer_sizes[l];
    const int out = spec_.layer_sizes[l + 1];
    const double scale = std::sqrt(2.0 / in);
    for (int i = 0; i < in * out; ++i)
      x[weight_offsets_[l] + i] = scale * rng.next_gaussian();
  }
  return x;
}

HessianResult finite_difference_hessian(const Objective& obj, const ParamVector& x,
                                        int max_dim, int num_threads) {
  const int n = obj.dim();
  if (x.size() != n) throw ArgumentError("hessian: parameter dimension mismatch");
  if (n > max_dim)
    throw ResourceError("hessian: dimension " + std::to_string(n) + " exceeds cap " +
                        std::to_string(max_dim));
  const double h = 1e-4 * std::max(1.0, x.cwiseAbs().maxCoeff());

  HessianResult result;
  result.hessian.resize(n, n);
  Eigen::MatrixXd& hess = result.hessian;

  const auto column_range = [&](int lo, int hi) {
    ParamVector probe = x;
    ParamVector gplus(n), gminus(n);
    for (int j = lo; j < hi; ++j) {
      probe[j] = x[j] + h;
      obj.full_loss_grad(probe, gplus);
      probe[j] = x[j] - h;
      obj.full_loss_grad(probe, gminus);
      probe[j] = x[j];
      hess.col(j) = (gplus - gminus) / (2.0 * h);
    }
  };

  int threads = num_threads > 0 ? num_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    column_range(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(column_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  const double scale = std::max(hess.cwiseAbs().maxCoeff(), 1e-300);
  result.relative_asymmetry =
      (hess - hess.transpose()).cwiseAbs().maxCoeff() / scale;
  result.asymmetry_warning = result.relative_asymmetry > 1e-3;
  hess = 0.5 * (hess + hess.transpose()).eval();
  return result;
}

ParamVector fisher_diagonal(const Objective& obj, const ParamVector& x, int batch_size,
                            int passes, std::uint64_t seed) {
  if (passes < 1) throw ArgumentError("fisher_diagonal: passes must be >= 1");
  const int n = obj.dataset_size();
  if (batch_size < 1 || batch_size > n)
    throw ArgumentError("fisher_diagonal: batch size must be in [1, N]");
  const int d = obj.dim();

  ParamVector sum = ParamVector::Zero(d);
  ParamVector sumsq = ParamVector::Zero(d);
  ParamVector g(d);
  Rng rng(seed);
  long batches = 0;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int pass = 0; pass < passes; ++pass) {
    if (pass > 0) {
      for (int j = 0; j < n - 1; ++j)
        std::swap(order[j], order[j + rng.next_below(n - j)]);
    }
    for (int start = 0; start < n; start += batch_size) {
      const int count = std::min(batch_size, n - start);
      MiniBatch batch;
      batch.indices.assign(order.begin() + start, order.begin() + start + count);
      // Canonical index order inside a batch: the gradient of a given batch
      // composition is then bitwise reproducible across shuffles.
      std::sort(batch.indices.begin(), batch.indices.end());
      obj.batch_loss_grad(x, batch, g);
      sum += g;
      sumsq += g.cwiseProduct(g);
      ++batches;
    }
  }
  const ParamVector mean = sum / static_cast<double>(batches);
  return (sumsq / static_cast<double>(batches) - mean.cwiseProduct(mean)).cwiseMax(0.0);
}

}  // namespace esgd
