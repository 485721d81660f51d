#pragma once

#include <memory>
#include <string>
#include <vector>

#include "esgd/dataset.hpp"
#include "esgd/net.hpp"
#include "esgd/objective.hpp"

namespace esgd {

struct DatasetConfig {
  std::string kind = "synthetic";  // mnist | csv | synthetic

  // kind == mnist: IDX file pairs; the validation pair is optional.
  std::string images, labels, val_images, val_labels;

  // kind == csv
  std::string train_csv, val_csv;

  // kind == synthetic: one generated pool split into train and validation,
  // so both halves share class prototypes.
  int classes = 10;
  int rows = 28;
  int cols = 28;
  int train_n = 2000;
  int val_n = 500;
  double noise = 0.25;
  std::uint64_t data_seed = 1;

  // Common transforms, applied in this order: subsample, crop.
  int subsample = 0;  // 0 = off
  bool stratified = false;
  int crop_rows = 0, crop_cols = 0;  // 0 = off

  // Fallback validation split when no explicit validation set exists.
  double val_fraction = 0.0;
};

struct ModelConfig {
  std::vector<int> layer_sizes;  // 0 entries resolve to dataset dim / classes
  double dropout = 0.0;
};

struct GammaConfig {
  std::string kind = "exponential";  // constant|exponential|linear|quadratic|bounded_exponential
  double gamma0 = 1e-4;
  double gamma1 = 0.001;
  double tau = 1.0;
};

/// One experiment: dataset, model, optimizer and all of its knobs. The JSON
/// schema mirrors the field names; unknown keys are rejected.
struct ExperimentConfig {
  std::string profile;  // preset this config was expanded from, if any
  std::string label;    // grouping key for suites; derived when empty

  DatasetConfig dataset;
  ModelConfig model;

  std::string optimizer = "adam";  // sgd|adam|sgld|entropy-sgd|entropy-adam
  double eta = 1e-3;
  double momentum = 0.0;
  bool nesterov = false;
  double lr_decay_factor = 1.0;
  std::vector<int> lr_decay_epochs;
  int lr_decay_every = 0;

  // Inner-loop knobs (entropy optimizers).
  int L = 20;
  double eta_prime = 0.1;
  double epsilon = 1e-3;
  double alpha = 0.75;
  double inner_momentum = 0.0;
  GammaConfig gamma;
  bool rescale_gradient = true;

  // Adam moments (adam and entropy-adam).
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // Standalone SGLD baseline: eta is eta0, epsilon the noise multiplier.
  double sgld_b = 0.55;

  int epochs = 1;
  int batch_size = 128;
  std::uint64_t seed = 42;
  std::string output_dir;
  bool trace_angle = false;
  bool trace_inner = false;

  void validate() const;
  /// Inner iterations counted per parameter update: L for the entropy
  /// optimizers, 1 for the baselines.
  int effective_l() const;
  std::string group_label() const;
};

/// Strict JSON parsing: type-checked fields, range validation, unknown keys
/// rejected with the offending key paths listed.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

/// Loads a config file, expanding a named profile (from `profile` argument
/// or the file's "profile" key) and applying dotted-path overrides such as
/// "model.dropout=0.2". Precedence: profile < file < overrides.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {},
                             const std::string& profile = "");

std::vector<std::string> profile_names();
std::string profile_json_text(const std::string& name);

/// Datasets and objective resolved from a config.
struct BuiltExperiment {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> validation;
  std::shared_ptr<MlpObjective> objective;
  std::vector<int> layer_sizes;       // with 0 entries resolved
  std::string validation_source;      // "explicit" | "split" | "holdout"
};
BuiltExperiment build_experiment(const ExperimentConfig& cfg);

/// One per-epoch row of run metrics. NaN marks a value that does not apply
/// (written as an empty CSV cell).
struct RunRecord {
  int epoch = 0;
  long effective_epochs = 0;
  double train_loss = 0.0;
  double val_error_pct = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
  long wall_ms = 0;
  std::uint64_t seed = 0;
};

struct RunOutcome {
  std::vector<RunRecord> records;
  double final_train_loss = 0.0;
  double final_val_error_pct = 0.0;
  double best_val_error_pct = 0.0;
  int best_epoch = 0;
  long effective_epochs = 0;
  ParamVector final_params;
  std::string out_dir;
};

/// Executes the training loop described by the config. When output_dir is
/// set, writes the resolved config snapshot, an environment stamp, per-epoch
/// run.csv rows, summary.json and the final weights — enough to re-run the
/// experiment bit-identically. Identical (config, seed) produce byte
/// identical run.csv except for the wall_ms column.
RunOutcome run_experiment(const ExperimentConfig& cfg);

struct SuiteRow {
  std::string label;
  std::string optimizer;
  int runs = 0;
  double mean_val_error_pct = 0.0;
  double std_val_error_pct = 0.0;  // sample std over seeds, 0 for one run
  long effective_epochs = 0;
  std::string display;  // "1.39 ± 0.03"
  std::string status;   // "ok" or the first error message
};

/// Runs every config (failures are recorded per row, the suite continues),
/// writes suite.csv plus merged curve data, and returns the table grouped
/// by (label, optimizer).
std::vector<SuiteRow> run_suite(const std::vector<ExperimentConfig>& configs,
                                const std::string& out_dir);

std::vector<ExperimentConfig> load_suite_file(const std::string& path);

/// Merges run.csv files from several run directories into one tidy CSV:
/// column "effective_epochs" plus <label>_train_loss / <label>_val_error_pct
/// per run, outer-joined on effective epochs.
void emit_plot_data(const std::vector<std::string>& run_dirs,
                    const std::string& out_csv);

/// Flat binary weight files ("ESGDW1" magic, u64 count, little-endian f64).
void save_weights(const ParamVector& x, const std::string& path);
ParamVector load_weights(const std::string& path);

/// Formats a double so it parses back to the identical value.
std::string format_full(double v);

}  // namespace esgd
