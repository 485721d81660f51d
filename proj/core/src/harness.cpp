#include "esgd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "esgd/analysis.hpp"
#include "esgd/errors.hpp"
#include "esgd/optimize.hpp"
#include "esgd/sampler.hpp"

namespace esgd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string format_cell(double v) {
  return std::isnan(v) ? std::string() : format_full(v);
}

// ---------------------------------------------------------------------------
// Config <-> JSON

void reject_unknown_keys(const json& j, const std::string& scope,
                         std::initializer_list<const char*> allowed) {
  std::vector<std::string> unknown;
  for (const auto& item : j.items()) {
    bool found = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        found = true;
        break;
      }
    if (!found) unknown.push_back(scope + item.key());
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ConfigError("config field " + scope + key + ": " + e.what());
  }
}

DatasetConfig dataset_from_json(const json& j) {
  reject_unknown_keys(j, "dataset.",
                      {"kind", "images", "labels", "val_images", "val_labels",
                       "train_csv", "val_csv", "classes", "rows", "cols", "train_n",
                       "val_n", "noise", "data_seed", "subsample", "stratified",
                       "crop_rows", "crop_cols", "val_fraction"});
  DatasetConfig d;
  read_field(j, "kind", d.kind, "dataset.");
  read_field(j, "images", d.images, "dataset.");
  read_field(j, "labels", d.labels, "dataset.");
  read_field(j, "val_images", d.val_images, "dataset.");
  read_field(j, "val_labels", d.val_labels, "dataset.");
  read_field(j, "train_csv", d.train_csv, "dataset.");
  read_field(j, "val_csv", d.val_csv, "dataset.");
  read_field(j, "classes", d.classes, "dataset.");
  read_field(j, "rows", d.rows, "dataset.");
  read_field(j, "cols", d.cols, "dataset.");
  read_field(j, "train_n", d.train_n, "dataset.");
  read_field(j, "val_n", d.val_n, "dataset.");
  read_field(j, "noise", d.noise, "dataset.");
  read_field(j, "data_seed", d.data_seed, "dataset.");
  read_field(j, "subsample", d.subsample, "dataset.");
  read_field(j, "stratified", d.stratified, "dataset.");
  read_field(j, "crop_rows", d.crop_rows, "dataset.");
  read_field(j, "crop_cols", d.crop_cols, "dataset.");
  read_field(j, "val_fraction", d.val_fraction, "dataset.");
  return d;
}

json dataset_to_json(const DatasetConfig& d) {
  return json{{"kind", d.kind},
              {"images", d.images},
              {"labels", d.labels},
              {"val_images", d.val_images},
              {"val_labels", d.val_labels},
              {"train_csv", d.train_csv},
              {"val_csv", d.val_csv},
              {"classes", d.classes},
              {"rows", d.rows},
              {"cols", d.cols},
              {"train_n", d.train_n},
              {"val_n", d.val_n},
              {"noise", d.noise},
              {"data_seed", d.data_seed},
              {"subsample", d.subsample},
              {"stratified", d.stratified},
              {"crop_rows", d.crop_rows},
              {"crop_cols", d.crop_cols},
              {"val_fraction", d.val_fraction}};
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(
      j, "",
      {"profile", "label", "dataset", "model", "optimizer", "eta", "momentum",
       "nesterov", "lr_decay_factor", "lr_decay_epochs", "lr_decay_every", "L",
       "eta_prime", "epsilon", "alpha", "inner_momentum", "gamma", "rescale_gradient",
       "beta1", "beta2", "adam_eps", "sgld_b", "epochs", "batch_size", "seed",
       "output_dir", "trace_angle", "trace_inner"});

  ExperimentConfig c;
  read_field(j, "profile", c.profile, "");
  read_field(j, "label", c.label, "");
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown_keys(m, "model.", {"layer_sizes", "dropout"});
    read_field(m, "layer_sizes", c.model.layer_sizes, "model.");
    read_field(m, "dropout", c.model.dropout, "model.");
  }
  read_field(j, "optimizer", c.optimizer, "");
  read_field(j, "eta", c.eta, "");
  read_field(j, "momentum", c.momentum, "");
  read_field(j, "nesterov", c.nesterov, "");
  read_field(j, "lr_decay_factor", c.lr_decay_factor, "");
  read_field(j, "lr_decay_epochs", c.lr_decay_epochs, "");
  read_field(j, "lr_decay_every", c.lr_decay_every, "");
  read_field(j, "L", c.L, "");
  read_field(j, "eta_prime", c.eta_prime, "");
  read_field(j, "epsilon", c.epsilon, "");
  read_field(j, "alpha", c.alpha, "");
  read_field(j, "inner_momentum", c.inner_momentum, "");
  if (j.contains("gamma")) {
    const json& g = j.at("gamma");
    reject_unknown_keys(g, "gamma.", {"kind", "gamma0", "gamma1", "tau"});
    read_field(g, "kind", c.gamma.kind, "gamma.");
    read_field(g, "gamma0", c.gamma.gamma0, "gamma.");
    read_field(g, "gamma1", c.gamma.gamma1, "gamma.");
    read_field(g, "tau", c.gamma.tau, "gamma.");
  }
  read_field(j, "rescale_gradient", c.rescale_gradient, "");
  read_field(j, "beta1", c.beta1, "");
  read_field(j, "beta2", c.beta2, "");
  read_field(j, "adam_eps", c.adam_eps, "");
  read_field(j, "sgld_b", c.sgld_b, "");
  read_field(j, "epochs", c.epochs, "");
  read_field(j, "batch_size", c.batch_size, "");
  read_field(j, "seed", c.seed, "");
  read_field(j, "output_dir", c.output_dir, "");
  read_field(j, "trace_angle", c.trace_angle, "");
  read_field(j, "trace_inner", c.trace_inner, "");
  c.validate();
  return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
  json j{{"profile", c.profile},
         {"label", c.label},
         {"dataset", dataset_to_json(c.dataset)},
         {"model", json{{"layer_sizes", c.model.layer_sizes},
                        {"dropout", c.model.dropout}}},
         {"optimizer", c.optimizer},
         {"eta", c.eta},
         {"momentum", c.momentum},
         {"nesterov", c.nesterov},
         {"lr_decay_factor", c.lr_decay_factor},
         {"lr_decay_epochs", c.lr_decay_epochs},
         {"lr_decay_every", c.lr_decay_every},
         {"L", c.L},
         {"eta_prime", c.eta_prime},
         {"epsilon", c.epsilon},
         {"alpha", c.alpha},
         {"inner_momentum", c.inner_momentum},
         {"gamma", json{{"kind", c.gamma.kind},
                        {"gamma0", c.gamma.gamma0},
                        {"gamma1", c.gamma.gamma1},
                        {"tau", c.gamma.tau}}},
         {"rescale_gradient", c.rescale_gradient},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"adam_eps", c.adam_eps},
         {"sgld_b", c.sgld_b},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"seed", c.seed},
         {"output_dir", c.output_dir},
         {"trace_angle", c.trace_angle},
         {"trace_inner", c.trace_inner}};
  return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };

  static const std::set<std::string> kOptimizers = {"sgd", "adam", "sgld", "entropy-sgd",
                                                    "entropy-adam"};
  if (!kOptimizers.count(optimizer)) fail("unknown optimizer '" + optimizer + "'");
  static const std::set<std::string> kKinds = {"mnist", "csv", "synthetic"};
  if (!kKinds.count(dataset.kind)) fail("unknown dataset kind '" + dataset.kind + "'");
  static const std::set<std::string> kSchedules = {"constant", "exponential", "linear",
                                                   "quadratic", "bounded_exponential"};
  if (!kSchedules.count(gamma.kind)) fail("unknown gamma schedule '" + gamma.kind + "'");

  if (dataset.kind == "mnist" && (dataset.images.empty() || dataset.labels.empty()))
    fail("mnist dataset needs images and labels paths");
  if (dataset.kind == "csv" && dataset.train_csv.empty())
    fail("csv dataset needs train_csv");
  if (dataset.kind == "synthetic") {
    if (dataset.classes < 2) fail("synthetic: classes must be >= 2");
    if (dataset.train_n < dataset.classes) fail("synthetic: train_n too small");
    if (dataset.val_n < 1) fail("synthetic: val_n must be >= 1");
    if (dataset.noise < 0) fail("synthetic: noise must be >= 0");
  }
  if (dataset.subsample < 0) fail("subsample must be >= 0");
  if (dataset.crop_rows < 0 || dataset.crop_cols < 0) fail("crop sizes must be >= 0");
  if ((dataset.crop_rows == 0) != (dataset.crop_cols == 0))
    fail("crop_rows and crop_cols must be set together");
  if (dataset.val_fraction < 0.0 || dataset.val_fraction >= 1.0)
    fail("val_fraction must be in [0, 1)");

  if (model.layer_sizes.size() == 1) fail("model needs at least 2 layer sizes");
  for (std::size_t i = 0; i < model.layer_sizes.size(); ++i) {
    const int s = model.layer_sizes[i];
    const bool edge = (i == 0 || i + 1 == model.layer_sizes.size());
    if (s < 0 || (!edge && s < 1)) fail("hidden layer sizes must be >= 1");
  }
  if (model.dropout < 0.0 || model.dropout >= 1.0) fail("dropout must be in [0, 1)");

  if (!(eta > 0.0)) fail("eta must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) fail("momentum must be in [0, 1)");
  if (!(lr_decay_factor > 0.0)) fail("lr_decay_factor must be > 0");
  if (lr_decay_every < 0) fail("lr_decay_every must be >= 0");
  for (int b : lr_decay_epochs)
    if (b < 0) fail("lr_decay_epochs entries must be >= 0");

  if (L < 1) fail("L must be >= 1");
  if (!(eta_prime > 0.0)) fail("eta_prime must be > 0");
  if (epsilon < 0.0) fail("epsilon must be >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0, 1]");
  if (inner_momentum < 0.0 || inner_momentum >= 1.0)
    fail("inner_momentum must be in [0, 1)");
  if (gamma.gamma0 < 0.0 || gamma.gamma1 < 0.0) fail("gamma0/gamma1 must be >= 0");
  if (gamma.kind == "bounded_exponential" && !(gamma.tau > 0.0))
    fail("tau must be > 0");

  if (beta1 < 0.0 || beta1 >= 1.0) fail("beta1 must be in [0, 1)");
  if (beta2 < 0.0 || beta2 >= 1.0) fail("beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (sgld_b < 0.0 || sgld_b > 1.0) fail("sgld_b must be in [0, 1]");

  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
}

int ExperimentConfig::effective_l() const {
  return (optimizer == "entropy-sgd" || optimizer == "entropy-adam") ? L : 1;
}

std::string ExperimentConfig::group_label() const {
  if (!label.empty()) return label;
  std::string s = dataset.kind;
  for (int size : model.layer_sizes) s += "-" + std::to_string(size);
  return s;
}

// ---------------------------------------------------------------------------
// Profiles

namespace {

const std::map<std::string, const char*>& profile_table() {
  static const std::map<std::string, const char*> table = {
      // Adam baseline: lr 1e-3 dropping by 1/5 every 30 epochs.
      {"mnistfc-adam", R"({
        "label": "mnistfc",
        "optimizer": "adam",
        "eta": 1e-3, "beta1": 0.9, "beta2": 0.999,
        "lr_decay_factor": 0.2, "lr_decay_every": 30,
        "epochs": 100, "batch_size": 128,
        "model": {"dropout": 0.5}
      })"},
      // Nested local-entropy run: L=20 Langevin steps per update, outer rate
      // 1 dropping by 1/10 after epoch 2, exponentially growing scope.
      {"mnistfc-entropy", R"({
        "label": "mnistfc",
        "optimizer": "entropy-sgd",
        "L": 20, "eta_prime": 0.1, "epsilon": 1e-3, "alpha": 0.75,
        "eta": 1.0, "momentum": 0.9, "nesterov": true,
        "gamma": {"kind": "exponential", "gamma0": 1e-4, "gamma1": 0.001},
        "rescale_gradient": true,
        "lr_decay_factor": 0.1, "lr_decay_epochs": [2],
        "epochs": 5, "batch_size": 128,
        "model": {"dropout": 0.15}
      })"},
      // Plain SGLD with the eta0 / (1 + t)^b schedule.
      {"sgld-baseline", R"({
        "label": "mnistfc",
        "optimizer": "sgld",
        "eta": 0.05, "sgld_b": 0.55, "epsilon": 0.01,
        "epochs": 100, "batch_size": 128,
        "model": {"dropout": 0.5}
      })"}};
  return table;
}

json parse_profile(const std::string& name) {
  const auto& table = profile_table();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string msg = "unknown profile '" + name + "'; available:";
    for (const auto& [k, v] : table) msg += " " + k;
    throw ConfigError(msg);
  }
  return json::parse(it->second);
}

ExperimentConfig config_from_merged_json(json file_json, const std::string& profile_flag,
                                         const std::vector<std::string>& overrides) {
  std::string profile = profile_flag;
  if (profile.empty() && file_json.contains("profile") &&
      file_json.at("profile").is_string())
    profile = file_json.at("profile").get<std::string>();

  json merged = json::object();
  if (!profile.empty()) merged = parse_profile(profile);
  merged.merge_patch(file_json);
  merged["profile"] = profile;

  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must look like key=value: " + ov);
    std::string path = "/" + ov.substr(0, eq);
    std::replace(path.begin(), path.end(), '.', '/');
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // unquoted strings
    }
    merged[json::json_pointer(path)] = value;
  }
  return config_from_json_text(merged.dump());
}

}  // namespace

std::vector<std::string> profile_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : profile_table()) names.push_back(k);
  return names;
}

std::string profile_json_text(const std::string& name) {
  return parse_profile(name).dump(2);
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides,
                             const std::string& profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json file_json;
  try {
    file_json = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_merged_json(std::move(file_json), profile, overrides);
}

std::vector<ExperimentConfig> load_suite_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open suite file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ConfigError("suite file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object() || !j.contains("runs") || !j.at("runs").is_array() ||
      j.at("runs").empty())
    throw ConfigError("suite file must be {\"runs\": [config, ...]} with >= 1 entry");
  std::vector<ExperimentConfig> configs;
  for (const auto& entry : j.at("runs"))
    configs.push_back(config_from_merged_json(entry, "", {}));
  return configs;
}

// ---------------------------------------------------------------------------
// Experiment assembly

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const DatasetConfig& d = cfg.dataset;
  Dataset train;
  Dataset val;
  bool have_val = false;
  std::string val_source;

  if (d.kind == "mnist") {
    train = load_mnist_idx(d.images, d.labels);
    if (!d.val_images.empty() && !d.val_labels.empty()) {
      val = load_mnist_idx(d.val_images, d.val_labels);
      have_val = true;
      val_source = "explicit";
    }
  } else if (d.kind == "csv") {
    train = load_csv(d.train_csv);
    if (!d.val_csv.empty()) {
      val = load_csv(d.val_csv);
      have_val = true;
      val_source = "explicit";
    }
  } else {
    SyntheticSpec spec;
    spec.classes = d.classes;
    spec.rows = d.rows;
    spec.cols = d.cols;
    spec.count = d.train_n + d.val_n;
    spec.noise = d.noise;
    spec.seed = d.data_seed;
    const Dataset pool = make_synthetic_classification(spec);
    train = pool;
    train.inputs = pool.inputs.leftCols(d.train_n);
    train.labels.assign(pool.labels.begin(), pool.labels.begin() + d.train_n);
    val = pool;
    val.inputs = pool.inputs.rightCols(d.val_n);
    val.labels.assign(pool.labels.end() - d.val_n, pool.labels.end());
    have_val = true;
    val_source = "holdout";
  }

  if (d.subsample > 0)
    train = subsample(train, d.subsample, d.data_seed ^ 0x5D588B656C078965ULL,
                      d.stratified);
  if (!have_val) {
    if (d.val_fraction <= 0.0)
      throw ConfigError("config: no validation set; provide one or set val_fraction");
    const int k = std::max(1, static_cast<int>(std::lround(d.val_fraction * train.size())));
    auto [rest, holdout] = split_holdout(train, k, d.data_seed ^ 0xA3EC647659359ACDULL);
    train = std::move(rest);
    val = std::move(holdout);
    val_source = "split";
  }
  if (d.crop_rows > 0) {
    train = crop_center(train, d.crop_rows, d.crop_cols);
    val = crop_center(val, d.crop_rows, d.crop_cols);
  }

  BuiltExperiment built;
  built.layer_sizes = cfg.model.layer_sizes;
  if (built.layer_sizes.empty()) built.layer_sizes = {0, 32, 0};
  if (built.layer_sizes.front() == 0) built.layer_sizes.front() = train.dim();
  if (built.layer_sizes.back() == 0) built.layer_sizes.back() = train.num_classes;

  MlpSpec spec;
  spec.layer_sizes = built.layer_sizes;
  spec.dropout_prob = cfg.model.dropout;
  built.train = std::make_shared<const Dataset>(std::move(train));
  built.validation = std::make_shared<const Dataset>(std::move(val));
  built.objective = std::make_shared<MlpObjective>(spec, built.train);
  built.validation_source = val_source;
  return built;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

ScopingSchedule make_schedule(const GammaConfig& g) {
  ScopingSchedule s;
  s.gamma0 = g.gamma0;
  s.gamma1 = g.gamma1;
  s.tau = g.tau;
  if (g.kind == "constant")
    s.kind = ScopingSchedule::Kind::constant;
  else if (g.kind == "exponential")
    s.kind = ScopingSchedule::Kind::exponential;
  else if (g.kind == "linear")
    s.kind = ScopingSchedule::Kind::linear;
  else if (g.kind == "quadratic")
    s.kind = ScopingSchedule::Kind::quadratic;
  else
    s.kind = ScopingSchedule::Kind::bounded_exponential;
  return s;
}

void write_record(std::ostream& out, const RunRecord& r) {
  out << r.epoch << ',' << r.effective_epochs << ',' << format_full(r.train_loss) << ','
      << format_full(r.val_error_pct) << ',' << format_cell(r.gamma) << ','
      << format_cell(r.grad_norm) << ',' << format_cell(r.angle_deg) << ',' << r.wall_ms
      << ',' << r.seed << '\n';
}

std::string environment_stamp() {
  json j{{"compiler", __VERSION__},
         {"cxx_standard", static_cast<long>(__cplusplus)},
         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                       std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION)},
         {"pointer_bits", static_cast<int>(8 * sizeof(void*))}};
  return j.dump(2) + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const BuiltExperiment built = build_experiment(cfg);
  const MlpObjective& obj = *built.objective;
  const Dataset& val = *built.validation;

  const int n = obj.dataset_size();
  const int m = std::min(cfg.batch_size, n);
  const int updates_per_epoch = (n + m - 1) / m;
  const int l_eff = cfg.effective_l();

  LrSchedule lr;
  lr.base = cfg.eta;
  lr.decay_factor = cfg.lr_decay_factor;
  lr.decay_at = cfg.lr_decay_epochs;
  lr.decay_every = cfg.lr_decay_every;
  lr.updates_per_epoch = updates_per_epoch;

  SgdConfig sgd{lr, cfg.momentum, cfg.nesterov};
  AdamConfig adam{lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
  EntropySgdConfig entropy;
  entropy.L = cfg.L;
  entropy.eta_prime = cfg.eta_prime;
  entropy.epsilon = cfg.epsilon;
  entropy.alpha = cfg.alpha;
  entropy.inner_momentum = cfg.inner_momentum;
  entropy.schedule = make_schedule(cfg.gamma);
  entropy.lr = lr;
  entropy.outer_momentum = cfg.momentum;
  entropy.nesterov = cfg.nesterov;
  entropy.rescale_gradient = cfg.rescale_gradient;
  SgldOptimizeConfig sgld_opt{cfg.eta, cfg.sgld_b, cfg.epsilon, cfg.epochs, m};

  const bool is_entropy =
      cfg.optimizer == "entropy-sgd" || cfg.optimizer == "entropy-adam";

  Rng init_rng(cfg.seed, 0);
  Rng rng(cfg.seed, 1);
  OptimizerState state;
  state.reset(obj.initial_params(init_rng));
  SgldOptState sgld_state{state.x, 0};

  // Output files.
  std::ofstream run_csv;
  std::ofstream inner_trace;
  const bool persist = !cfg.output_dir.empty();
  fs::path out_dir(cfg.output_dir);
  if (persist) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output dir " + out_dir.string());
    write_text(out_dir / "config.json", config_to_json_text(cfg));
    write_text(out_dir / "env.json", environment_stamp());
    run_csv.open(out_dir / "run.csv");
    if (!run_csv) throw IoError("cannot write run.csv in " + out_dir.string());
    run_csv << "epoch,effective_epochs,train_loss,val_error_pct,gamma,grad_norm,"
               "angle_deg,wall_ms,seed\n";
    if (cfg.trace_inner && is_entropy)
      inner_trace.open(out_dir / "inner_trace.jsonl");
  }

  MuEstimator mu_estimator;
  if (cfg.trace_inner && is_entropy) {
    // Same estimate as the default path, but with the per-step trace kept
    // and streamed out as one JSON line per outer update.
    mu_estimator = [&](const ParamVector& anchor, double gamma, Rng& r) {
      MuResult res = estimate_mu(anchor, obj, entropy.sgld(gamma), m, r, true);
      if (inner_trace) {
        json line{{"update", state.t}, {"gamma", gamma}, {"inner", json::array()}};
        for (const InnerSample& s : res.diagnostics.trace)
          line["inner"].push_back(json{{"step", s.step},
                                       {"grad_norm", s.grad_norm},
                                       {"dist_to_anchor", s.dist_to_anchor},
                                       {"mu_drift", s.mu_drift}});
        inner_trace << line.dump() << "\n";
      }
      return std::move(res.mu);
    };
  }

  RunOutcome outcome;
  outcome.out_dir = persist ? out_dir.string() : "";
  const auto record_epoch = [&](int epoch, double grad_norm, double angle, long wall_ms) {
    RunRecord r;
    r.epoch = epoch;
    r.effective_epochs = static_cast<long>(epoch) * l_eff;
    const ParamVector& x = (cfg.optimizer == "sgld") ? sgld_state.x : state.x;
    r.train_loss = obj.full_loss(x);
    r.val_error_pct = 100.0 * obj.error_rate(x, val);
    if (is_entropy)
      r.gamma = gamma_at(entropy.schedule, state.t);
    r.grad_norm = grad_norm;
    r.angle_deg = angle;
    r.wall_ms = wall_ms;
    r.seed = cfg.seed;
    outcome.records.push_back(r);
    if (persist) {
      write_record(run_csv, r);
      run_csv.flush();
    }
  };

  try {
    record_epoch(0, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), 0);

    ParamVector vanilla(obj.dim());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const auto start = std::chrono::steady_clock::now();
      double grad_norm_sum = 0.0;
      double angle_sum = 0.0;
      int angle_count = 0;
      for (int u = 0; u < updates_per_epoch; ++u) {
        if (cfg.optimizer == "sgd") {
          grad_norm_sum += sgd_step(state, obj, sgd, m, rng).grad_norm;
        } else if (cfg.optimizer == "adam") {
          grad_norm_sum += adam_step(state, obj, adam, m, rng).grad_norm;
        } else if (cfg.optimizer == "sgld") {
          grad_norm_sum += sgld_optimize_update(sgld_state, obj, sgld_opt, rng);
        } else {
          if (cfg.trace_angle) {
            const MiniBatch probe = sample_minibatch(n, m, rng);
            obj.batch_loss_grad(state.x, probe, vanilla, rng);
          }
          const StepInfo info =
              cfg.optimizer == "entropy-sgd"
                  ? entropy_sgd_step(state, obj, entropy, m, rng, mu_estimator)
                  : entropy_adam_step(state, obj, entropy, adam, m, rng, mu_estimator);
          grad_norm_sum += info.grad_norm;
          if (cfg.trace_angle && info.direction.norm() > 0 && vanilla.norm() > 0) {
            angle_sum += gradient_angle(info.direction, vanilla);
            ++angle_count;
          }
        }
      }
      const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
      record_epoch(epoch, grad_norm_sum / updates_per_epoch,
                   angle_count > 0 ? angle_sum / angle_count
                                   : std::numeric_limits<double>::quiet_NaN(),
                   wall);
    }
  } catch (const DivergenceError& e) {
    if (persist) {
      json fail{{"error", "divergence"}, {"step", e.step}, {"message", e.what()}};
      write_text(out_dir / "failure.json", fail.dump(2) + "\n");
    }
    throw;
  } catch (const NumericError& e) {
    // Overflowing activations are how a diverging net usually first shows up.
    const long step = cfg.optimizer == "sgld" ? sgld_state.t : state.t;
    if (persist) {
      json fail{{"error", "divergence"}, {"step", step}, {"message", e.what()}};
      write_text(out_dir / "failure.json", fail.dump(2) + "\n");
    }
    throw DivergenceError(e.what(), step);
  }

  outcome.final_params = (cfg.optimizer == "sgld") ? sgld_state.x : state.x;
  outcome.final_train_loss = outcome.records.back().train_loss;
  outcome.final_val_error_pct = outcome.records.back().val_error_pct;
  outcome.best_val_error_pct = outcome.records.front().val_error_pct;
  outcome.best_epoch = 0;
  for (const RunRecord& r : outcome.records)
    if (r.val_error_pct < outcome.best_val_error_pct) {
      outcome.best_val_error_pct = r.val_error_pct;
      outcome.best_epoch = r.epoch;
    }
  outcome.effective_epochs = outcome.records.back().effective_epochs;

  if (persist) {
    save_weights(outcome.final_params, (out_dir / "weights.bin").string());
    json summary{{"status", "ok"},
                 {"optimizer", cfg.optimizer},
                 {"seed", cfg.seed},
                 {"epochs", cfg.epochs},
                 {"effective_epochs", outcome.effective_epochs},
                 {"final_train_loss", outcome.final_train_loss},
                 {"final_val_error_pct", outcome.final_val_error_pct},
                 {"best_val_error_pct", outcome.best_val_error_pct},
                 {"best_epoch", outcome.best_epoch},
                 {"validation_source", built.validation_source},
                 {"train_size", n},
                 {"validation_size", val.size()},
                 {"parameters", obj.dim()}};
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Suites and plot data

std::vector<SuiteRow> run_suite(const std::vector<ExperimentConfig>& configs,
                                const std::string& out_dir) {
  if (configs.empty()) throw ArgumentError("run_suite: need at least one config");
  fs::create_directories(out_dir);

  struct GroupData {
    SuiteRow row;
    std::vector<double> finals;
  };
  std::vector<std::string> order;
  std::map<std::string, GroupData> groups;
  std::vector<std::string> run_dirs;

  int index = 0;
  for (ExperimentConfig cfg : configs) {
    if (cfg.output_dir.empty())
      cfg.output_dir = (fs::path(out_dir) / ("run" + std::to_string(index))).string();
    ++index;
    const std::string key = cfg.group_label() + "\x1f" + cfg.optimizer;
    auto it = groups.find(key);
    if (it == groups.end()) {
      order.push_back(key);
      it = groups.emplace(key, GroupData{}).first;
      it->second.row.label = cfg.group_label();
      it->second.row.optimizer = cfg.optimizer;
      it->second.row.status = "ok";
    }
    GroupData& group = it->second;
    try {
      const RunOutcome outcome = run_experiment(cfg);
      group.finals.push_back(outcome.final_val_error_pct);
      group.row.effective_epochs = outcome.effective_epochs;
      run_dirs.push_back(outcome.out_dir);
    } catch (const Error& e) {
      if (group.row.status == "ok") group.row.status = e.what();
    }
  }

  std::vector<SuiteRow> rows;
  for (const std::string& key : order) {
    GroupData& group = groups.at(key);
    SuiteRow& row = group.row;
    row.runs = static_cast<int>(group.finals.size());
    if (row.runs > 0) {
      double sum = 0.0;
      for (double v : group.finals) sum += v;
      row.mean_val_error_pct = sum / row.runs;
      double sq = 0.0;
      for (double v : group.finals) {
        const double d = v - row.mean_val_error_pct;
        sq += d * d;
      }
      row.std_val_error_pct = row.runs > 1 ? std::sqrt(sq / (row.runs - 1)) : 0.0;
    }
    char display[64];
    std::snprintf(display, sizeof(display), "%.2f ± %.2f", row.mean_val_error_pct,
                  row.std_val_error_pct);
    row.display = display;
    rows.push_back(row);
  }

  std::ofstream table(fs::path(out_dir) / "suite.csv");
  if (!table) throw IoError("cannot write suite.csv in " + out_dir);
  table << "label,optimizer,runs,mean_val_error_pct,std_val_error_pct,display,"
           "effective_epochs,status\n";
  for (const SuiteRow& row : rows)
    table << row.label << ',' << row.optimizer << ',' << row.runs << ','
          << format_full(row.mean_val_error_pct) << ','
          << format_full(row.std_val_error_pct) << ",\"" << row.display << "\","
          << row.effective_epochs << ",\"" << row.status << "\"\n";

  if (!run_dirs.empty())
    emit_plot_data(run_dirs, (fs::path(out_dir) / "curves.csv").string());
  return rows;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

void emit_plot_data(const std::vector<std::string>& run_dirs,
                    const std::string& out_csv) {
  if (run_dirs.empty()) throw ArgumentError("emit_plot_data: no run directories");

  struct Curve {
    std::string label;
    std::map<long, std::pair<std::string, std::string>> points;  // eff -> (loss, err)
  };
  std::vector<Curve> curves;
  std::set<long> all_epochs;

  for (const std::string& dir : run_dirs) {
    const fs::path csv_path = fs::path(dir) / "run.csv";
    std::ifstream in(csv_path);
    if (!in) throw IoError("emit_plot_data: missing " + csv_path.string());
    std::string line;
    if (!std::getline(in, line))
      throw IoError("emit_plot_data: empty " + csv_path.string());
    const auto header = split_csv_line(line);
    int eff_col = -1, loss_col = -1, err_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == "effective_epochs") eff_col = static_cast<int>(i);
      if (header[i] == "train_loss") loss_col = static_cast<int>(i);
      if (header[i] == "val_error_pct") err_col = static_cast<int>(i);
    }
    if (eff_col < 0 || loss_col < 0 || err_col < 0)
      throw FormatError("emit_plot_data: unrecognized run.csv header in " +
                        csv_path.string());
    Curve curve;
    curve.label = fs::path(dir).filename().string();
    if (curve.label.empty()) curve.label = fs::path(dir).parent_path().filename().string();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      const long eff = std::stol(cells[eff_col]);
      curve.points[eff] = {cells[loss_col], cells[err_col]};
      all_epochs.insert(eff);
    }
    curves.push_back(std::move(curve));
  }

  std::ofstream out(out_csv);
  if (!out) throw IoError("emit_plot_data: cannot write " + out_csv);
  out << "effective_epochs";
  for (const Curve& c : curves)
    out << ',' << c.label << "_train_loss," << c.label << "_val_error_pct";
  out << '\n';
  for (long eff : all_epochs) {
    out << eff;
    for (const Curve& c : curves) {
      const auto it = c.points.find(eff);
      if (it == c.points.end())
        out << ",,";
      else
        out << ',' << it->second.first << ',' << it->second.second;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Weight files

void save_weights(const ParamVector& x, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights: " + path);
  const char magic[8] = {'E', 'S', 'G', 'D', 'W', '1', 0, 0};
  out.write(magic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(x.size());
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(x.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  if (!out) throw IoError("short write while saving weights: " + path);
}

ParamVector load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 6) != "ESGDW1")
    throw FormatError("not a weights file: " + path);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in || n == 0 || n > (1ULL << 32))
    throw FormatError("weights file has a bad element count: " + path);
  ParamVector x(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(x.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("truncated weights file: " + path);
  return x;
}

}  // namespace esgd
