// Copyright 2026 The grbmamp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// grbmamp command-line driver.
//
// Every subcommand takes --config FILE with one "key = value" per line;
// keys are the long flag names without dashes. Flags given on the command
// line win over the file, which wins over the defaults.
//
// Exit status: 0 success, 1 configuration or input error, 2 sweep finished
// with failed records.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

#include "grbmamp.hpp"

namespace {

using namespace grbmamp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

struct SweepFlags {
  ExperimentSpec spec;
  std::string mode = "grbm";
  std::string scaling = "unit-row";
  std::size_t limit = 0;

  void bind(CLI::App* sub, bool for_sweep) {
    sub->add_option("--dataset", spec.dataset, "IDX file or signal cache with the test signals")->required();
    sub->add_option("--first", spec.first_image, "Index of the first image");
    sub->add_option("--mode", mode, "Solver prior: iid, noniid or grbm")->capture_default_str();
    sub->add_option("--noise-var", spec.noise_var, "AWGN variance")->capture_default_str();
    sub->add_option("--seed", spec.seed, "Base seed")->capture_default_str();
    sub->add_option("--scaling", scaling, "Sensing matrix scaling: unit-row or inv-sqrt-n")->capture_default_str();
    sub->add_option("--model", spec.model, "GRBM model file (grbm mode)");
    sub->add_option("--prior-data", spec.prior_data, "Signals used to estimate iid/noniid priors");
    sub->add_option("--prior", spec.prior, "Explicit iid prior, e.g. gb:0.2,0,1 or tgb:0.2,0.5,0.1,0,1");
    sub->add_option("--min-slab-var", spec.min_slab_var, "Floor for estimated slab variances")->capture_default_str();
    sub->add_option("--damping", spec.damping, "Outer damping gamma in [0, 1)")->capture_default_str();
    sub->add_option("--tol", spec.tol, "Outer tolerance on mean |delta a|")->capture_default_str();
    sub->add_option("--max-iter", spec.max_iterations, "Outer iteration cap")->capture_default_str();
    sub->add_option("--inner-tol", spec.inner_tol, "TAP tolerance on max |delta a|")->capture_default_str();
    sub->add_option("--max-inner", spec.max_inner, "TAP sweep cap")->capture_default_str();
    sub->add_flag("--unnormalized-correlation", spec.unnormalized_correlation, "Omit the 1/N in the correlation");
    sub->add_flag("--binarize", spec.binarize, "Threshold signals at 0.5");
    if (for_sweep) {
      sub->add_option("--count", spec.num_images, "Number of images (0: all)")->capture_default_str();
      sub->add_option("--alphas", spec.alphas, "Measurement rates M/N")->delimiter(',')->capture_default_str();
      sub->add_option("--reps", spec.repetitions, "Repetitions per (image, alpha)")->capture_default_str();
      sub->add_option("--rho-bin-width", spec.rho_bin_width, "Width of the sparsity bins")->capture_default_str();
      sub->add_option("--out", spec.output_dir, "Output directory")->capture_default_str();
      sub->add_option("--limit", limit, "Stop after this many new records (0: no limit)");
    }
  }

  void resolve() {
    spec.mode = parse_mode(mode);
    spec.scaling = parse_scaling(scaling);
  }
};

int run_train(const std::string& data_path, std::size_t first, std::size_t count, bool binarized, TrainConfig cfg,
              const std::string& out, const std::string& log_path) {
  SignalSet data = slice(load_signals(data_path), static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  if (binarized) binarize(data);
  Rng rng = make_stream(cfg.seed, {});
  std::printf("training on %lld signals of dimension %lld, %d hidden units\n", static_cast<long long>(data.size()),
              static_cast<long long>(data.dim()), cfg.hidden);
  const auto result = train(data.samples, cfg, rng, [](const EpochLog& e) {
    std::printf("epoch %3d  recon %.6f  |W| %.4f  %.1fs\n", e.epoch, e.recon_error, e.weight_norm, e.seconds);
    std::fflush(stdout);
  });
  save_model(out, result.model);
  if (!log_path.empty()) write_training_log(log_path, result.log);
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int run_reconstruct(SweepFlags& f, std::size_t image, double alpha) {
  f.resolve();
  ExperimentSpec& spec = f.spec;
  spec.first_image = image;
  spec.num_images = 1;
  spec.alphas = {alpha};
  const auto ctx = prepare_sweep(spec);
  const auto r = run_record(spec, ctx, 0, 0, 0);
  std::printf("image %lld  mode %s  alpha %g  M %lld  K %lld  rho %.4f\n", static_cast<long long>(r.image),
              r.mode.c_str(), r.alpha, static_cast<long long>(r.M), static_cast<long long>(r.K), r.rho);
  std::printf("mse_db %.4f  correlation %.6f  iterations %d  inner %lld  converged %d  status %s\n", r.mse_db,
              r.correlation, r.iterations, static_cast<long long>(r.inner_sweeps), r.converged ? 1 : 0,
              r.status.c_str());
  return r.failed() ? kExitPartial : kExitOk;
}

int run_sweep(SweepFlags& f) {
  f.resolve();
  const auto s = run_phase_sweep(f.spec, f.limit);
  std::printf("%zu records (%zu resumed), %zu failed, written to %s\n", s.total, s.resumed, s.failed,
              f.spec.output_dir.c_str());
  for (const auto& row : summarize_by_alpha(read_records(std::filesystem::path(f.spec.output_dir) / "records.csv"))) {
    std::printf("  alpha %-6g  n %-5d  mse_db %9.3f  correlation %.4f  converged %.3f\n", row.alpha, row.count,
                row.mean_mse_db, row.mean_correlation, row.converged_fraction);
  }
  return s.failed ? kExitPartial : kExitOk;
}

int run_inspect(const std::string& path, bool text, bool with_marginals) {
  const Grbm model = load_model(path);
  if (text) {
    std::fputs(encode_model_text(model).c_str(), stdout);
    return kExitOk;
  }
  auto layer_kind = [](const std::vector<Prior>& l) {
    return l.empty() ? "none" : kind_name(kind_of(l.front()));
  };
  std::printf("visible %lld (%s)\nhidden  %lld (%s)\n", static_cast<long long>(model.num_visible()),
              layer_kind(model.visible_priors()), static_cast<long long>(model.num_hidden()),
              layer_kind(model.hidden_priors()));
  const auto& w = model.couplings();
  if (w.size() > 0) {
    std::printf("W: |W|_F %.6g  max|W| %.6g  mean %.6g\n", w.norm(), w.cwiseAbs().maxCoeff(), w.mean());
  }
  if (with_marginals) {
    const auto m = marginals(model);
    const auto& s = m.state;
    std::printf("TAP marginals: %s after %d sweeps\n", m.converged ? "converged" : "not converged", m.sweeps);
    if (s.visible_a.size() > 0) {
      std::printf("  visible mean of a %.6g  mean of c %.6g\n", s.visible_a.mean(), s.visible_c.mean());
    }
    if (s.hidden_a.size() > 0) {
      std::printf("  hidden  mean of a %.6g  mean of c %.6g\n", s.hidden_a.mean(), s.hidden_c.mean());
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed sensing with AMP and GRBM priors"};
  app.require_subcommand(1);
  // Keys live under a section named after the subcommand, e.g. [sweep].
  // fallthrough() lets `grbmamp sweep --config f.ini` reach this option.
  app.set_config("--config", "", "Read options from an INI file with [subcommand] sections");
  app.fallthrough();

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a GRBM by contrastive divergence");
  std::string train_data, train_out, train_log;
  std::size_t train_first = 0, train_count = 0;
  bool train_binarize = false;
  TrainConfig cfg;
  train_cmd->add_option("--data", train_data, "Training signals (IDX or signal cache)")->required();
  train_cmd->add_option("--first", train_first, "Index of the first training signal");
  train_cmd->add_option("--count", train_count, "Number of training signals (0: all)");
  train_cmd->add_flag("--binarize", train_binarize, "Threshold signals at 0.5");
  train_cmd->add_option("--out", train_out, "Model file (.txt for the text format)")->required();
  train_cmd->add_option("--log", train_log, "Training log CSV");
  train_cmd->add_option("--hidden", cfg.hidden, "Hidden units")->capture_default_str();
  train_cmd->add_option("--epochs", cfg.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--decay", cfg.weight_decay, "L2 weight decay")->capture_default_str();
  train_cmd->add_option("--momentum", cfg.momentum, "Momentum")->capture_default_str();
  train_cmd->add_option("--batch", cfg.batch_size, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--cd-steps", cfg.cd_steps, "Gibbs steps per update")->capture_default_str();
  train_cmd->add_option("--lo", cfg.lo, "Lower truncation bound")->capture_default_str();
  train_cmd->add_option("--hi", cfg.hi, "Upper truncation bound")->capture_default_str();
  train_cmd->add_option("--init-scale", cfg.init_scale, "Initial weight sd")->capture_default_str();
  train_cmd->add_option("--min-slab-var", cfg.min_slab_var, "Floor for slab variances")->capture_default_str();
  train_cmd->add_option("--seed", cfg.seed, "Seed")->capture_default_str();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Phase-diagram sweep over measurement rates");
  SweepFlags sweep;
  sweep.bind(sweep_cmd, true);

  // reconstruct
  auto* rec_cmd = app.add_subcommand("reconstruct", "Reconstruct one image and print its metrics");
  SweepFlags rec;
  std::size_t rec_image = 0;
  double rec_alpha = 0.25;
  rec.bind(rec_cmd, false);
  rec_cmd->add_option("--image", rec_image, "Image index")->capture_default_str();
  rec_cmd->add_option("--alpha", rec_alpha, "Measurement rate M/N")->capture_default_str();

  // aggregate
  auto* agg_cmd = app.add_subcommand("aggregate", "Recompute grid.csv and summary.csv from records.csv");
  std::string agg_dir;
  double agg_width = 0.025;
  agg_cmd->add_option("--dir", agg_dir, "Sweep output directory")->required();
  agg_cmd->add_option("--rho-bin-width", agg_width, "Width of the sparsity bins")->capture_default_str();

  // inspect-model
  auto* insp_cmd = app.add_subcommand("inspect-model", "Describe a GRBM model file");
  std::string insp_path;
  bool insp_text = false, insp_marg = false;
  insp_cmd->add_option("--model", insp_path, "Model file")->required();
  insp_cmd->add_flag("--text", insp_text, "Print the model in the text format");
  insp_cmd->add_flag("--marginals", insp_marg, "Run TAP with no external field and summarize");

  // synth
  auto* syn_cmd = app.add_subcommand("synth", "Write synthetic spike-and-slab signals to a signal cache");
  std::string syn_out;
  Eigen::Index syn_n = 1000, syn_count = 100;
  double syn_rho = 0.2;
  SlabParams syn_slab;
  std::vector<double> syn_bounds;
  std::uint64_t syn_seed = 1;
  syn_cmd->add_option("--out", syn_out, "Output file")->required();
  syn_cmd->add_option("--n", syn_n, "Signal length")->capture_default_str();
  syn_cmd->add_option("--count", syn_count, "Number of signals")->capture_default_str();
  syn_cmd->add_option("--rho", syn_rho, "Fraction of nonzeros")->capture_default_str();
  syn_cmd->add_option("--mean", syn_slab.mean, "Slab mean")->capture_default_str();
  syn_cmd->add_option("--var", syn_slab.var, "Slab variance")->capture_default_str();
  syn_cmd->add_option("--bounds", syn_bounds, "Truncate the slab to lo,hi")->delimiter(',')->expected(2);
  syn_cmd->add_option("--seed", syn_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(train_data, train_first, train_count, train_binarize, cfg, train_out, train_log);
    if (*sweep_cmd) return run_sweep(sweep);
    if (*rec_cmd) return run_reconstruct(rec, rec_image, rec_alpha);
    if (*agg_cmd) {
      aggregate_directory(agg_dir, agg_width);
      std::printf("rewrote grid.csv and summary.csv in %s\n", agg_dir.c_str());
      return kExitOk;
    }
    if (*insp_cmd) return run_inspect(insp_path, insp_text, insp_marg);
    if (*syn_cmd) {
      if (!syn_bounds.empty()) syn_slab.bounds = std::make_pair(syn_bounds[0], syn_bounds[1]);
      Rng rng = make_stream(syn_seed, {});
      SignalSet set = synth_sparse(syn_n, syn_rho, syn_slab, syn_count, rng);
      set.seed = syn_seed;
      write_signal_cache(syn_out, set);
      std::printf("wrote %lld signals to %s\n", static_cast<long long>(set.size()), syn_out.c_str());
      return kExitOk;
    }
  } catch (const grbmamp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
