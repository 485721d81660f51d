// Acceptance suite: end-to-end checks of the library against its contract,
// one [PASS]/[FAIL] line per criterion. Exit code is the failure count.
//
// Criteria 6-8 train on MNIST when ESGD_MNIST_DIR points at the four
// standard IDX files; otherwise a deterministic synthetic IDX dataset is
// written and loaded through the same loader path.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "esgd/analysis.hpp"
#include "esgd/dataset.hpp"
#include "esgd/errors.hpp"
#include "esgd/harness.hpp"
#include "esgd/net.hpp"
#include "esgd/objective.hpp"
#include "esgd/optimize.hpp"
#include "esgd/oracle.hpp"
#include "esgd/sampler.hpp"

namespace fs = std::filesystem;
using namespace esgd;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  va_list args;
  va_start(args, pattern);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared data for criteria 6-8: IDX file pairs, real MNIST when available.

struct TrainingData {
  std::string images, labels, val_images, val_labels;
  bool real_mnist = false;
};

const TrainingData& training_data() {
  static const TrainingData data = [] {
    TrainingData d;
    if (const char* env = std::getenv("ESGD_MNIST_DIR")) {
      const fs::path dir(env);
      const fs::path tr_i = dir / "train-images-idx3-ubyte";
      const fs::path tr_l = dir / "train-labels-idx1-ubyte";
      const fs::path te_i = dir / "t10k-images-idx3-ubyte";
      const fs::path te_l = dir / "t10k-labels-idx1-ubyte";
      if (fs::exists(tr_i) && fs::exists(tr_l) && fs::exists(te_i) && fs::exists(te_l)) {
        d.images = tr_i.string();
        d.labels = tr_l.string();
        d.val_images = te_i.string();
        d.val_labels = te_l.string();
        d.real_mnist = true;
        return d;
      }
      std::fprintf(stderr, "ESGD_MNIST_DIR set but files missing; using synthetic data\n");
    }
    const fs::path dir = fs::temp_directory_path() / "esgd-acceptance-data";
    fs::create_directories(dir);
    SyntheticSpec spec;
    spec.classes = 10;
    spec.rows = 28;
    spec.cols = 28;
    spec.count = 14000;
    spec.noise = 0.35;
    spec.seed = 20260808;
    const Dataset pool = make_synthetic_classification(spec);
    Dataset train = pool;
    train.inputs = pool.inputs.leftCols(12000);
    train.labels.assign(pool.labels.begin(), pool.labels.begin() + 12000);
    Dataset val = pool;
    val.inputs = pool.inputs.rightCols(2000);
    val.labels.assign(pool.labels.end() - 2000, pool.labels.end());
    d.images = (dir / "train-images-idx3-ubyte").string();
    d.labels = (dir / "train-labels-idx1-ubyte").string();
    d.val_images = (dir / "t10k-images-idx3-ubyte").string();
    d.val_labels = (dir / "t10k-labels-idx1-ubyte").string();
    save_mnist_idx(train, d.images, d.labels);
    save_mnist_idx(val, d.val_images, d.val_labels);
    return d;
  }();
  return data;
}

// ---------------------------------------------------------------------------
// 1. Quadrature F and grad F match the closed forms on 1-d quadratics.

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double a : {0.1, 1.0, 10.0}) {
    for (double gamma : {0.1, 1.0, 10.0}) {
      for (double x : {-2.0, 0.0, 0.7, 2.0}) {
        const auto f = [a](double t) { return 0.5 * a * t * t; };
        const GibbsSpec spec = make_gibbs_1d(gamma, x);
        const double w = 10.0 / std::sqrt(gamma);
        const Grid1d grid{x - w, x + w, 20001};
        const auto closed = local_entropy_quadratic_closed_form(
            Eigen::MatrixXd::Constant(1, 1, a), ParamVector::Zero(1), spec);
        worst = std::max(worst, std::abs(local_entropy_quadrature(f, spec, grid) -
                                         closed.log_partition));
        worst = std::max(worst, std::abs(local_entropy_grad_quadrature(f, spec, grid) -
                                         closed.grad[0]));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && secs < 10.0,
          fmt("max |quadrature - closed form| = %.3e (tol 1e-8), %.2fs (limit 10s)",
              worst, secs)};
}

// ---------------------------------------------------------------------------
// 2. SGLD mean on the 1-d quadratic: mu -> gamma x/(a + gamma) = 1.

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const QuadraticObjective obj(Eigen::MatrixXd::Constant(1, 1, 1.0),
                               ParamVector::Zero(1));
  SgldConfig cfg;
  cfg.eta_prime = 1e-3;
  cfg.epsilon = 1.0;
  cfg.alpha = 0.75;
  cfg.gamma = 1.0;
  cfg.L = 100000;
  const ParamVector anchor = ParamVector::Constant(1, 2.0);

  // Closed-form standard error of the exponential average over the AR(1)
  // chain, then averaged over independent replicates.
  const double rho = 1.0 - cfg.eta_prime * 2.0;
  const double chain_var = cfg.eta_prime / (1.0 - rho * rho);
  const double q = 1.0 - cfg.alpha;
  const double mu_sd = std::sqrt(chain_var * cfg.alpha * cfg.alpha * (1.0 + q * rho) /
                                 ((1.0 - q * q) * (1.0 - q * rho)));
  const int reps = 64;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng rng(7000 + r);
    sum += estimate_mu(anchor, obj, cfg, 1, rng).mu[0];
  }
  const double mean = sum / reps;
  const double sem = mu_sd / std::sqrt(static_cast<double>(reps));
  const double secs = seconds_since(t0);
  return {std::abs(mean - 1.0) <= 3.0 * sem && secs < 30.0,
          fmt("mean mu = %.4f over %d runs, |mean - 1| = %.4f <= 3 SE = %.4f, %.2fs "
              "(limit 30s)",
              mean, reps, std::abs(mean - 1.0), 3.0 * sem, secs)};
}

// ---------------------------------------------------------------------------
// 3. Smoothed landscape prefers the wide valley at small gamma and recovers
//    the sharp global minimum at huge gamma.

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const Landscape1d land;
  const Grid1d query{-4.0, 4.0, 1601};
  const double cell = (query.hi - query.lo) / (query.points - 1);

  // Raw-landscape argmin over the same grid (the sharp well wins on f).
  double f_argmin = query.lo, f_best = land(query.lo);
  for (int i = 0; i < query.points; ++i) {
    const double x = query.lo + i * cell;
    if (land(x) < f_best) {
      f_best = land(x);
      f_argmin = x;
    }
  }

  const SmoothingTable table = smoothing_family(land, {0.1, 1e6}, query);
  const double argmin_smooth = table.argmin[0].second;
  const double argmin_sharp = table.argmin[1].second;
  const double secs = seconds_since(t0);

  const bool wide_wins = std::abs(argmin_smooth - land.wide_center) < 0.5;
  const bool sharp_recovered = std::abs(argmin_sharp - f_argmin) <= cell + 1e-12;
  const bool sharp_is_global =
      std::abs(f_argmin - land.sharp_center) < 3 * land.sharp_sigma;
  return {wide_wins && sharp_recovered && sharp_is_global && secs < 60.0,
          fmt("argmin -F: %.3f at gamma 0.1 (wide center %.1f), %.4f at gamma 1e6 "
              "(argmin f %.4f, cell %.4f), %.1fs (limit 60s)",
              argmin_smooth, land.wide_center, argmin_sharp, f_argmin, cell, secs)};
}

// ---------------------------------------------------------------------------
// 4. Smoothness of grad F on a quadratic with spectrum [0.5, 2].

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const double c = 0.5, beta = 2.0;
  const QuadraticObjective obj = QuadraticObjective::from_eigenvalues({c, beta}, 404);
  bool ok = true;
  std::ostringstream detail;
  for (double gamma : {0.5, 1.0, 5.0}) {
    const GradField field = [&obj, gamma](const ParamVector& x) -> ParamVector {
      GibbsSpec spec;
      spec.gamma = gamma;
      spec.center = x;
      return local_entropy_quadratic_closed_form(obj.matrix(), obj.linear_term(), spec)
          .grad;
    };
    Rng rng(405);
    const double est = empirical_smoothness(field, ParamVector::Zero(2), 2.0, 4000, rng);
    const double exact = beta * gamma / (beta + gamma);
    const double bound = beta / (1.0 + c / gamma);
    const bool here = std::abs(est - exact) / exact < 0.01 && est <= bound + 1e-12;
    ok = ok && here;
    detail << fmt("gamma %.1f: est %.4f vs 2g/(2+g) %.4f, bound %.4f; ", gamma, est,
                  exact, bound);
  }
  const double secs = seconds_since(t0);
  detail << fmt("%.2fs (limit 30s)", secs);
  return {ok && secs < 30.0, detail.str()};
}

// ---------------------------------------------------------------------------
// 5. Convex invariance: oracle-exact entropy descent and SGD agree on the
//    minimizer of a strictly convex 10-d quadratic.

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng setup(505);
  const QuadraticObjective base = QuadraticObjective::from_eigenvalues(
      {0.5, 0.8, 1.1, 1.6, 2.0, 2.6, 3.2, 3.9, 4.5, 5.0}, 506);
  const QuadraticObjective obj(base.matrix(), 0.7 * setup.gaussian_vector(10));

  const MuEstimator oracle = [&obj](const ParamVector& anchor, double gamma,
                                    Rng&) -> ParamVector {
    GibbsSpec spec;
    spec.gamma = gamma;
    spec.center = anchor;
    return local_entropy_quadratic_closed_form(obj.matrix(), obj.linear_term(), spec)
        .mean;
  };

  EntropySgdConfig cfg;
  cfg.L = 1;
  cfg.eta_prime = 0.1;
  cfg.epsilon = 0.0;
  cfg.schedule.kind = ScopingSchedule::Kind::constant;
  cfg.schedule.gamma0 = 1.0;
  cfg.lr.base = 0.5;
  cfg.rescale_gradient = true;
  cfg.outer_momentum = 0.0;

  OptimizerState entropy_state;
  entropy_state.reset(setup.gaussian_vector(10));
  Rng rng(507);
  for (int t = 0; t < 4000; ++t)
    entropy_sgd_step(entropy_state, obj, cfg, 1, rng, oracle);

  SgdConfig sgd;
  sgd.lr.base = 0.15;
  OptimizerState sgd_state;
  sgd_state.reset(setup.gaussian_vector(10));
  for (int t = 0; t < 4000; ++t) sgd_step(sgd_state, obj, sgd, 1, rng);

  const double gap = (entropy_state.x - sgd_state.x).norm();
  const double to_min = (entropy_state.x - obj.minimizer()).norm();
  const double secs = seconds_since(t0);
  return {gap < 1e-6 && secs < 10.0,
          fmt("|x_entropy - x_sgd| = %.2e (tol 1e-6), |x - A^-1 b| = %.2e, %.2fs "
              "(limit 10s)",
              gap, to_min, secs)};
}

// ---------------------------------------------------------------------------
// 6. Hessian spectrum at a trained minimum: dominant near-zero fraction.

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData& data = training_data();

  Dataset train = load_mnist_idx(data.images, data.labels);
  train = subsample(train, 1000, 606, /*stratified=*/true);
  train = crop_center(train, 10, 10);
  const auto train_ptr = std::make_shared<const Dataset>(std::move(train));

  MlpSpec spec;
  spec.layer_sizes = {100, 32, 10};
  MlpObjective obj(spec, train_ptr);

  Rng init(607);
  OptimizerState state;
  state.reset(obj.initial_params(init));
  AdamConfig adam;
  adam.lr.base = 3e-3;
  Rng rng(608);
  const int n = obj.dataset_size();
  const int m = 50;
  const int updates_per_epoch = (n + m - 1) / m;
  double loss = obj.full_loss(state.x);
  int epoch = 0;
  for (; epoch < 2000 && loss >= 0.02; ++epoch) {
    for (int u = 0; u < updates_per_epoch; ++u) adam_step(state, obj, adam, m, rng);
    loss = obj.full_loss(state.x);
  }
  if (loss >= 0.02)
    return {false, fmt("training stalled at loss %.4f after %d epochs", loss, epoch)};

  const HessianResult hess = finite_difference_hessian(obj, state.x, 5000);
  const SpectrumReport report = SpectrumReport::from_matrix(hess.hessian);
  const double frac = report.frac_near_zero(1e-2);
  const double ratio = report.max_eig() / std::max(1e-300, std::abs(report.min_eig()));
  const double secs = seconds_since(t0);
  return {frac >= 0.5 && ratio >= 10.0 && secs < 1800.0,
          fmt("%s, n=%d, train loss %.4f after %d epochs; frac|l|<=1e-2 = %.3f "
              "(need >= 0.5), max/|min| = %.1f (need >= 10), asym %.1e, %.0fs "
              "(limit 1800s)",
              data.real_mnist ? "mnist" : "synthetic", report.n(), loss, epoch, frac,
              ratio, hess.relative_asymmetry, secs)};
}

// ---------------------------------------------------------------------------
// 7 & 8. Desk-scale parity: Entropy-SGD vs Adam, and the SGLD baseline gap.

struct ParityResult {
  Outcome parity;
  Outcome sgld_gap;
};

ParityResult parity_criteria() {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData& data = training_data();
  const fs::path out_root = fs::temp_directory_path() / "esgd-acceptance-parity";
  fs::remove_all(out_root);

  const auto base_config = [&](const std::string& optimizer, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.dataset.kind = "mnist";
    cfg.dataset.images = data.images;
    cfg.dataset.labels = data.labels;
    cfg.dataset.val_images = data.val_images;
    cfg.dataset.val_labels = data.val_labels;
    cfg.dataset.subsample = 10000;
    cfg.dataset.stratified = true;
    cfg.model.layer_sizes = {784, 256, 10};
    cfg.optimizer = optimizer;
    cfg.batch_size = 128;
    cfg.seed = seed;
    cfg.output_dir = (out_root / (optimizer + "-" + std::to_string(seed))).string();
    return cfg;
  };

  const int effective_epochs = 20;
  std::vector<double> adam_finals, entropy_finals, sgld_bests;
  for (std::uint64_t seed : {1, 2, 3}) {
    ExperimentConfig adam = base_config("adam", seed);
    adam.eta = 1e-3;
    adam.lr_decay_factor = 0.2;
    adam.lr_decay_every = 30;
    adam.model.dropout = 0.5;
    adam.epochs = effective_epochs;
    adam_finals.push_back(run_experiment(adam).final_val_error_pct);

    ExperimentConfig entropy = base_config("entropy-sgd", seed);
    entropy.L = 20;
    entropy.eta = 1.0;
    entropy.momentum = 0.9;
    entropy.nesterov = true;
    entropy.eta_prime = 0.1;
    entropy.epsilon = 1e-3;
    entropy.alpha = 0.75;
    entropy.gamma = GammaConfig{"exponential", 1e-4, 0.001, 1.0};
    entropy.rescale_gradient = true;
    entropy.lr_decay_factor = 0.1;
    entropy.lr_decay_epochs = {2};
    entropy.model.dropout = 0.15;
    entropy.epochs = effective_epochs / entropy.L;  // matched effective epochs
    entropy_finals.push_back(run_experiment(entropy).final_val_error_pct);

    ExperimentConfig sgld = base_config("sgld", seed);
    sgld.eta = 0.05;
    sgld.sgld_b = 0.55;
    sgld.epsilon = 0.01;
    sgld.model.dropout = 0.5;
    sgld.epochs = effective_epochs;
    sgld_bests.push_back(run_experiment(sgld).best_val_error_pct);
  }

  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  };
  const double adam_mean = mean(adam_finals);
  const double entropy_mean = mean(entropy_finals);
  const double sgld_best = *std::min_element(sgld_bests.begin(), sgld_bests.end());
  const double secs = seconds_since(t0);

  ParityResult result;
  result.parity = {entropy_mean <= adam_mean + 0.5 && secs < 1800.0,
                   fmt("%s, 3 seeds, %d effective epochs: entropy %.2f%% vs adam "
                       "%.2f%% (band +0.5pp), %.0fs (limit 1800s)",
                       data.real_mnist ? "mnist" : "synthetic", effective_epochs,
                       entropy_mean, adam_mean, secs)};
  result.sgld_gap = {sgld_best >= entropy_mean,
                     fmt("sgld best %.2f%% >= entropy mean %.2f%% (directional)",
                         sgld_best, entropy_mean)};
  return result;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical metric CSVs (wall_ms excluded) on three configs.

std::string strip_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() >= 2) cells[cells.size() - 2] = "";
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
  return out.str();
}

Outcome criterion9() {
  const fs::path root = fs::temp_directory_path() / "esgd-acceptance-determinism";
  fs::remove_all(root);
  bool ok = true;
  std::ostringstream detail;
  for (const std::string optimizer : {"adam", "entropy-sgd", "sgld"}) {
    ExperimentConfig cfg;
    cfg.dataset.kind = "synthetic";
    cfg.dataset.classes = 5;
    cfg.dataset.rows = 8;
    cfg.dataset.cols = 8;
    cfg.dataset.train_n = 300;
    cfg.dataset.val_n = 100;
    cfg.dataset.noise = 0.2;
    cfg.model.layer_sizes = {0, 12, 0};
    cfg.optimizer = optimizer;
    cfg.eta = optimizer == "adam" ? 3e-3 : 0.3;
    cfg.L = 5;
    cfg.epsilon = 1e-3;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.seed = 909;
    cfg.trace_angle = optimizer == "entropy-sgd";

    std::string first;
    for (int repeat = 0; repeat < 2; ++repeat) {
      cfg.output_dir = (root / (optimizer + "-" + std::to_string(repeat))).string();
      run_experiment(cfg);
      std::ifstream in(fs::path(cfg.output_dir) / "run.csv", std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      if (repeat == 0)
        first = buf.str();
      else if (strip_wall_ms(first) != strip_wall_ms(buf.str())) {
        ok = false;
        detail << optimizer << ": CSVs differ; ";
      }
    }
  }
  if (ok) detail << "3 configs x 2 runs byte-identical (wall_ms excluded)";
  return {ok, detail.str()};
}

// ---------------------------------------------------------------------------
// 10. Gradient correctness: finite differences over random probes.

Outcome criterion10() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1010);
  long failures = 0;
  long probes_run = 0;
  double worst = 0.0;

  const auto check = [&](const std::function<double(const ParamVector&)>& loss,
                         const std::function<double(const ParamVector&, ParamVector&)>&
                             loss_grad,
                         const ParamVector& x) {
    ParamVector g(x.size());
    loss_grad(x, g);
    ParamVector v = rng.gaussian_vector(x.size());
    v /= v.norm();
    const double analytic = g.dot(v);
    const double numeric = (loss(x + 1e-6 * v) - loss(x - 1e-6 * v)) / 2e-6;
    const double scale = std::max({1e-6, std::abs(analytic), std::abs(numeric)});
    const double rel = std::abs(analytic - numeric) / scale;
    worst = std::max(worst, rel);
    ++probes_run;
    if (rel >= 1e-5) ++failures;
  };

  // Quadratic, 5-d.
  const QuadraticObjective quad =
      QuadraticObjective::from_eigenvalues({0.3, 0.9, 1.4, 2.2, 3.0}, 1011);
  for (int p = 0; p < 100; ++p) {
    const ParamVector x = 2.0 * rng.gaussian_vector(5);
    check([&](const ParamVector& q) { return quad.full_loss(q); },
          [&](const ParamVector& q, ParamVector& g) { return quad.full_loss_grad(q, g); },
          x);
  }

  // Double-well landscape, probed where its gradient has magnitude.
  const LandscapeObjective land{Landscape1d{}};
  for (int p = 0; p < 100; ++p) {
    ParamVector x(1);
    x[0] = -3.0 + 6.0 * rng.next_double();
    check([&](const ParamVector& q) { return land.full_loss(q); },
          [&](const ParamVector& q, ParamVector& g) {
            return land.batch_loss_grad(q, MiniBatch{{0}}, g);
          },
          x);
  }

  // MLP with and without dropout, random batches, masks fixed per probe.
  Dataset ds = make_synthetic_classification({5, 6, 6, 120, 0.25, 1012});
  const auto ds_ptr = std::make_shared<const Dataset>(std::move(ds));
  for (const double dropout : {0.0, 0.3}) {
    MlpSpec spec;
    spec.layer_sizes = {36, 12, 5};
    spec.dropout_prob = dropout;
    MlpObjective obj(spec, ds_ptr);
    Rng init(1013);
    const ParamVector x0 = obj.initial_params(init);
    for (int p = 0; p < 100; ++p) {
      const std::uint64_t mask_seed = rng.next_u64();
      const MiniBatch batch = sample_minibatch(*ds_ptr, 24, rng);
      const ParamVector x = x0 + 0.1 * rng.gaussian_vector(obj.dim());
      const bool on = dropout > 0.0;
      check(
          [&](const ParamVector& q) {
            Rng r(mask_seed);
            return obj.forward_loss(q, batch, on, r);
          },
          [&](const ParamVector& q, ParamVector& g) {
            Rng r(mask_seed);
            return obj.backward_grad(q, batch, on, r, g);
          },
          x);
    }
  }

  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 60.0,
          fmt("%ld probes over 4 objective types, %ld failures, worst rel err %.2e "
              "(tol 1e-5), %.1fs (limit 60s)",
              probes_run, failures, worst, secs)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments: criterion numbers to run (default all).
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  const auto selected = [&](int id) {
    return wanted.empty() || std::find(wanted.begin(), wanted.end(), id) != wanted.end();
  };

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };

  ParityResult parity;
  bool parity_done = false;
  const auto ensure_parity = [&]() -> ParityResult& {
    if (!parity_done) {
      parity = parity_criteria();
      parity_done = true;
    }
    return parity;
  };

  const std::vector<Entry> entries = {
      {1, "oracle equivalence (quadrature vs closed form)", criterion1},
      {2, "sgld mean convergence on the coupled quadratic", criterion2},
      {3, "smoothing prefers wide valleys, recovers the sharp one", criterion3},
      {4, "lemma smoothness of the entropy gradient", criterion4},
      {5, "convex minimizer invariance", criterion5},
      {6, "near-zero hessian spectrum at a trained minimum", criterion6},
      {7, "desk-scale parity: entropy-sgd vs adam",
       [&] { return ensure_parity().parity; }},
      {8, "sgld baseline gap", [&] { return ensure_parity().sgld_gap; }},
      {9, "byte-identical reruns", criterion9},
      {10, "finite-difference gradient suite", criterion10},
  };

  int failures = 0;
  for (const Entry& entry : entries) {
    if (!selected(entry.id)) continue;
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %2d: %s -- %s\n", outcome.passed ? "PASS" : "FAIL",
                entry.id, entry.name, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.passed) ++failures;
  }
  std::printf("ACCEPTANCE: %s (%d failure%s)\n", failures == 0 ? "OK" : "FAILED",
              failures, failures == 1 ? "" : "s");
  return failures;
}
