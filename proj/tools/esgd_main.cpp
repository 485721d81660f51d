// Command line front end: experiment runs, suites, spectrum reports, the
// quadrature oracle, and scope calibration.
//
// Exit codes: 0 success, 1 internal failure, 2 bad config or arguments,
// 3 divergence, 4 file errors.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "esgd/analysis.hpp"
#include "esgd/errors.hpp"
#include "esgd/harness.hpp"
#include "esgd/net.hpp"
#include "esgd/objective.hpp"
#include "esgd/optimize.hpp"
#include "esgd/oracle.hpp"

namespace {

namespace fs = std::filesystem;

struct RunArgs {
  std::string config_path;
  std::string profile;
  std::string out_override;
  std::vector<std::string> overrides;
};

int cmd_run(const RunArgs& args) {
  esgd::ExperimentConfig cfg =
      esgd::load_config(args.config_path, args.overrides, args.profile);
  if (!args.out_override.empty()) cfg.output_dir = args.out_override;
  const esgd::RunOutcome outcome = esgd::run_experiment(cfg);
  std::printf("run complete: epochs=%d effective_epochs=%ld\n", cfg.epochs,
              outcome.effective_epochs);
  std::printf("  final train loss     %.6f\n", outcome.final_train_loss);
  std::printf("  final val error (%%)  %.4f\n", outcome.final_val_error_pct);
  std::printf("  best  val error (%%)  %.4f (epoch %d)\n", outcome.best_val_error_pct,
              outcome.best_epoch);
  if (!outcome.out_dir.empty())
    std::printf("  artifacts in %s\n", outcome.out_dir.c_str());
  return 0;
}

int cmd_suite(const std::string& configs_path, const std::string& out_dir) {
  const auto configs = esgd::load_suite_file(configs_path);
  const auto rows = esgd::run_suite(configs, out_dir);
  std::printf("%-24s %-14s %5s %-16s %10s %s\n", "label", "optimizer", "runs",
              "val error (%)", "eff.epochs", "status");
  for (const auto& row : rows)
    std::printf("%-24s %-14s %5d %-16s %10ld %s\n", row.label.c_str(),
                row.optimizer.c_str(), row.runs, row.display.c_str(),
                row.effective_epochs, row.status.c_str());
  std::printf("table written to %s/suite.csv\n", out_dir.c_str());
  return 0;
}

struct SpectrumArgs {
  std::string run_dir;
  std::string source = "exact";
  std::string out_dir;
  int batch_size = 128;
  int passes = 1;
  int max_dim = 5000;
  int threads = 0;
  int hist_bins = 60;
  double zero_band = 1e-4;
};

int cmd_spectrum(const SpectrumArgs& args) {
  const fs::path run_dir(args.run_dir);
  std::ifstream cfg_in(run_dir / "config.json");
  if (!cfg_in) throw esgd::IoError("missing config.json in " + args.run_dir);
  std::stringstream buf;
  buf << cfg_in.rdbuf();
  const esgd::ExperimentConfig cfg = esgd::config_from_json_text(buf.str());
  const esgd::BuiltExperiment built = esgd::build_experiment(cfg);
  const esgd::ParamVector x = esgd::load_weights((run_dir / "weights.bin").string());
  if (x.size() != built.objective->dim())
    throw esgd::FormatError("weights do not match the model in config.json");

  esgd::SpectrumReport report = [&] {
    if (args.source == "exact") {
      const esgd::HessianResult hess =
          esgd::finite_difference_hessian(*built.objective, x, args.max_dim, args.threads);
      if (hess.asymmetry_warning)
        std::fprintf(stderr,
                     "warning: raw Hessian asymmetry %.3e before symmetrization\n",
                     hess.relative_asymmetry);
      return esgd::SpectrumReport::from_matrix(hess.hessian);
    }
    if (args.source != "fisher")
      throw esgd::ArgumentError("--source must be exact or fisher");
    const esgd::ParamVector diag = esgd::fisher_diagonal(
        *built.objective, x, std::min(args.batch_size, built.train->size()), args.passes,
        cfg.seed);
    return esgd::SpectrumReport::from_diagonal(diag);
  }();

  const fs::path out_dir = args.out_dir.empty() ? run_dir : fs::path(args.out_dir);
  fs::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "spectrum.csv");
    if (!csv) throw esgd::IoError("cannot write spectrum.csv");
    report.write_csv(csv);
  }
  {
    std::ofstream summary(out_dir / "spectrum_summary.json");
    if (!summary) throw esgd::IoError("cannot write spectrum_summary.json");
    summary << report.summary_json() << "\n";
  }
  {
    std::ofstream hist(out_dir / "spectrum_hist.csv");
    if (!hist) throw esgd::IoError("cannot write spectrum_hist.csv");
    report.write_histogram_csv(hist, args.hist_bins, args.zero_band);
  }
  std::printf("%s\n", report.summary_json().c_str());
  return 0;
}

struct OracleSmoothingArgs {
  std::string gammas = "0.1,1,1e6";
  double lo = -4.0, hi = 4.0;
  int points = 801;
  std::string out = "smoothing.csv";
  std::vector<double> landscape;  // cw,sw,hw,cs,ss,hs
};

int cmd_oracle_smoothing(const OracleSmoothingArgs& args) {
  esgd::Landscape1d f;
  if (!args.landscape.empty()) {
    if (args.landscape.size() != 6)
      throw esgd::ArgumentError("--landscape needs 6 values: cw,sw,hw,cs,ss,hs");
    f = esgd::Landscape1d{args.landscape[0], args.landscape[1], args.landscape[2],
                          args.landscape[3], args.landscape[4], args.landscape[5]};
  }
  f.validate();
  std::vector<double> gammas;
  std::stringstream ss(args.gammas);
  std::string tok;
  while (std::getline(ss, tok, ',')) gammas.push_back(std::stod(tok));

  const esgd::SmoothingTable table =
      esgd::smoothing_family(f, gammas, esgd::Grid1d{args.lo, args.hi, args.points});

  std::ofstream out(args.out);
  if (!out) throw esgd::IoError("cannot write " + args.out);
  out << "gamma,x,negF\n";
  for (const auto& row : table.rows)
    out << esgd::format_full(row.gamma) << ',' << esgd::format_full(row.x) << ','
        << esgd::format_full(row.neg_entropy) << '\n';
  for (const auto& [gamma, argmin] : table.argmin)
    std::printf("gamma %-12g argmin of -F at x = %.6f\n", gamma, argmin);
  std::printf("curves written to %s\n", args.out.c_str());
  return 0;
}

int cmd_oracle_check() {
  // Quadrature against the closed form on 1-d quadratics.
  double worst_f = 0.0, worst_g = 0.0;
  for (double a : {0.1, 1.0, 10.0}) {
    for (double gamma : {0.1, 1.0, 10.0}) {
      for (double x : {-2.0, 0.0, 0.7, 2.0}) {
        const auto f = [a](double t) { return 0.5 * a * t * t; };
        const esgd::GibbsSpec spec = esgd::make_gibbs_1d(gamma, x);
        const double width = 10.0 / std::sqrt(gamma);
        const esgd::Grid1d grid{x - width, x + width, 20001};
        const double f_quad = esgd::local_entropy_quadrature(f, spec, grid);
        const double g_quad = esgd::local_entropy_grad_quadrature(f, spec, grid);
        const Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, a);
        const auto closed =
            esgd::local_entropy_quadratic_closed_form(A, Eigen::VectorXd::Zero(1), spec);
        worst_f = std::max(worst_f, std::abs(f_quad - closed.log_partition));
        worst_g = std::max(worst_g, std::abs(g_quad - closed.grad[0]));
      }
    }
  }
  std::printf("max |F_quadrature - F_closed|    = %.3e\n", worst_f);
  std::printf("max |dF_quadrature - dF_closed|  = %.3e\n", worst_g);
  const bool ok = worst_f < 1e-8 && worst_g < 1e-8;
  std::printf("oracle check: %s\n", ok ? "OK" : "FAILED");
  return ok ? 0 : 1;
}

struct CalibrateArgs {
  std::string config_path;
  std::string profile;
  std::vector<std::string> overrides;
  int probes = 5;
};

int cmd_calibrate(const CalibrateArgs& args) {
  const esgd::ExperimentConfig cfg =
      esgd::load_config(args.config_path, args.overrides, args.profile);
  const esgd::BuiltExperiment built = esgd::build_experiment(cfg);

  esgd::Rng init_rng(cfg.seed, 0);
  const esgd::ParamVector x0 = built.objective->initial_params(init_rng);
  esgd::EntropySgdConfig entropy;
  entropy.L = cfg.L;
  entropy.eta_prime = cfg.eta_prime;
  entropy.epsilon = cfg.epsilon;
  entropy.alpha = cfg.alpha;
  entropy.inner_momentum = cfg.inner_momentum;

  esgd::Rng rng(cfg.seed, 1);
  const esgd::CalibrationResult result = esgd::calibrate_gamma(
      *built.objective, x0, entropy, std::min(cfg.batch_size, built.train->size()),
      args.probes, rng);
  std::printf("{\"gamma0\": %s, \"ratio\": %s, \"probes\": %d}\n",
              esgd::format_full(result.gamma).c_str(),
              esgd::format_full(result.ratio).c_str(), args.probes);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local-entropy optimization experiments"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "execute one training run");
  run->add_option("--config", run_args.config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--profile", run_args.profile, "preset to expand before the file");
  run->add_option("--out", run_args.out_override, "override output directory");
  run->add_option("--set", run_args.overrides,
                  "dotted-path override, e.g. --set model.dropout=0.2");

  std::string suite_path, suite_out = "suite-out";
  auto* suite = app.add_subcommand("suite", "run a list of configs and tabulate");
  suite->add_option("--configs", suite_path, "suite file: {\"runs\": [config, ...]}")
      ->required();
  suite->add_option("--out", suite_out, "output directory");

  SpectrumArgs spectrum_args;
  auto* spectrum = app.add_subcommand("spectrum", "curvature spectrum of a finished run");
  spectrum->add_option("--run", spectrum_args.run_dir, "run directory")->required();
  spectrum->add_option("--source", spectrum_args.source, "exact | fisher");
  spectrum->add_option("--out", spectrum_args.out_dir, "output directory");
  spectrum->add_option("--batch-size", spectrum_args.batch_size, "fisher batch size");
  spectrum->add_option("--passes", spectrum_args.passes, "fisher passes");
  spectrum->add_option("--max-dim", spectrum_args.max_dim, "dense Hessian cap");
  spectrum->add_option("--threads", spectrum_args.threads, "hessian worker threads");
  spectrum->add_option("--hist-bins", spectrum_args.hist_bins, "histogram bin count");
  spectrum->add_option("--zero-band", spectrum_args.zero_band,
                       "dedicated |lambda| <= band histogram bin");

  auto* oracle = app.add_subcommand("oracle", "quadrature ground truth");
  oracle->require_subcommand(1);
  OracleSmoothingArgs smoothing_args;
  auto* smoothing =
      oracle->add_subcommand("smoothing", "-F(x, gamma) curves over a landscape");
  smoothing->add_option("--gammas", smoothing_args.gammas, "comma separated scopes");
  smoothing->add_option("--lo", smoothing_args.lo, "query grid start");
  smoothing->add_option("--hi", smoothing_args.hi, "query grid end");
  smoothing->add_option("--points", smoothing_args.points, "query grid points");
  smoothing->add_option("--out", smoothing_args.out, "output CSV");
  smoothing->add_option("--landscape", smoothing_args.landscape,
                        "cw,sw,hw,cs,ss,hs of the double-well landscape");
  auto* check = oracle->add_subcommand("check", "quadrature vs closed form");

  CalibrateArgs calibrate_args;
  auto* calibrate =
      app.add_subcommand("calibrate-gamma", "match entropy and vanilla gradient norms");
  calibrate->add_option("--config", calibrate_args.config_path, "experiment config")
      ->required();
  calibrate->add_option("--profile", calibrate_args.profile, "preset name");
  calibrate->add_option("--set", calibrate_args.overrides, "dotted-path override");
  calibrate->add_option("--probes", calibrate_args.probes, "probes per ratio estimate");

  try {
    app.parse(argc, argv);
    if (*run) return cmd_run(run_args);
    if (*suite) return cmd_suite(suite_path, suite_out);
    if (*spectrum) return cmd_spectrum(spectrum_args);
    if (*smoothing) return cmd_oracle_smoothing(smoothing_args);
    if (*check) return cmd_oracle_check();
    if (*calibrate) return cmd_calibrate(calibrate_args);
    (void)oracle;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const esgd::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 3;
  } catch (const esgd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const esgd::ArgumentError& e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return 2;
  } catch (const esgd::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const esgd::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 4;
  } catch (const esgd::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
