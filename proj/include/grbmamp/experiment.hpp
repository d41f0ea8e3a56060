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

// Phase-diagram sweeps over (alpha, rho).
//
// A sweep reconstructs every selected image at every measurement rate and
// repetition with one solver mode, writing one record per run. Each run
// draws its instance from the stream (seed, image, alpha index,
// repetition), so the three modes see identical instances and the result
// does not depend on thread count or order.
//
// Output directory layout:
//   spec.txt      canonical spec; a resumed sweep must match it
//   records.csv   one row per (image, alpha, repetition), sorted
//   timing.csv    wall time per record (kept apart so records.csv is
//                 reproducible bit for bit)
//   grid.csv      means per (alpha, rho bin)
//   summary.csv   means per alpha

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "grbmamp/amp.hpp"
#include "grbmamp/binary_io.hpp"
#include "grbmamp/data.hpp"
#include "grbmamp/errors.hpp"
#include "grbmamp/metrics.hpp"
#include "grbmamp/model_io.hpp"
#include "grbmamp/rng.hpp"

namespace grbmamp {

enum class SolverMode { kIid, kNonIid, kGrbm };

inline const char* mode_name(SolverMode m) {
  switch (m) {
    case SolverMode::kIid: return "iid";
    case SolverMode::kNonIid: return "noniid";
    case SolverMode::kGrbm: return "grbm";
  }
  return "unknown";
}

inline SolverMode parse_mode(const std::string& s) {
  for (auto m : {SolverMode::kIid, SolverMode::kNonIid, SolverMode::kGrbm}) {
    if (s == mode_name(m)) return m;
  }
  throw InvalidArgument("unknown solver mode '" + s + "' (iid, noniid, grbm)");
}

inline const char* scaling_name(MatrixScaling s) {
  return s == MatrixScaling::kUnitRow ? "unit-row" : "inv-sqrt-n";
}

inline MatrixScaling parse_scaling(const std::string& s) {
  if (s == "unit-row") return MatrixScaling::kUnitRow;
  if (s == "inv-sqrt-n") return MatrixScaling::kInvSqrtN;
  throw InvalidArgument("unknown scaling '" + s + "' (unit-row, inv-sqrt-n)");
}

// "bernoulli:bias", "gb:rho,mean,var" or "tgb:rho,mean,var,lo,hi".
inline Prior parse_prior(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("prior '" + text + "' lacks a kind prefix");
  const std::string kind = text.substr(0, colon);
  std::vector<double> v;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  try {
    while (std::getline(ss, item, ',')) v.push_back(io::parse_double(item));
  } catch (const FormatError& e) {
    throw InvalidArgument("prior '" + text + "': " + e.what());
  }
  Prior p;
  if (kind == "bernoulli" && v.size() == 1) {
    p = Bernoulli{v[0]};
  } else if (kind == "gb" && v.size() == 3) {
    p = GaussBernoulli{v[0], v[1], v[2]};
  } else if (kind == "tgb" && v.size() == 5) {
    p = TruncGaussBernoulli{v[0], v[1], v[2], v[3], v[4]};
  } else {
    throw InvalidArgument("prior '" + text + "': expected bernoulli:b, gb:rho,mean,var or tgb:rho,mean,var,lo,hi");
  }
  validate(p);
  return p;
}

inline std::string format_prior(const Prior& p) {
  return std::visit(
      [](const auto& q) -> std::string {
        using T = std::decay_t<decltype(q)>;
        auto f = [](double x) { return io::format_double(x); };
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return "bernoulli:" + f(q.bias);
        } else if constexpr (std::is_same_v<T, GaussBernoulli>) {
          return "gb:" + f(q.rho) + "," + f(q.mean) + "," + f(q.var);
        } else {
          return "tgb:" + f(q.rho) + "," + f(q.mean) + "," + f(q.var) + "," + f(q.lo) + "," + f(q.hi);
        }
      },
      p);
}

struct ExperimentSpec {
  std::string dataset;               // IDX or signal cache
  std::size_t first_image = 0;
  std::size_t num_images = 0;        // 0: to the end of the dataset
  SolverMode mode = SolverMode::kGrbm;
  std::vector<double> alphas{0.10, 0.15, 0.25};
  int repetitions = 1;
  double noise_var = 1e-8;
  std::uint64_t seed = 1;
  MatrixScaling scaling = MatrixScaling::kUnitRow;
  std::string model;                 // GRBM mode
  std::string prior_data;            // iid / noniid: estimate priors from this set
  std::string prior;                 // iid: explicit prior instead of prior_data
  double min_slab_var = 1e-4;
  double damping = 0.5;
  double tol = 1e-7;
  int max_iterations = 250;
  double inner_tol = 1e-9;
  int max_inner = 100;
  double rho_bin_width = 0.025;
  bool unnormalized_correlation = false;
  bool binarize = false;             // threshold images at 0.5 first
  std::string output_dir = "results";

  // One "key = value" line per field that affects the records.
  std::string canonical() const {
    std::ostringstream o;
    auto d = [](double x) { return io::format_double(x); };
    o << "dataset = " << dataset << '\n'
      << "first_image = " << first_image << '\n'
      << "num_images = " << num_images << '\n'
      << "mode = " << mode_name(mode) << '\n'
      << "alphas =";
    for (double a : alphas) o << ' ' << d(a);
    o << '\n'
      << "repetitions = " << repetitions << '\n'
      << "noise_var = " << d(noise_var) << '\n'
      << "seed = " << seed << '\n'
      << "scaling = " << scaling_name(scaling) << '\n'
      << "model = " << model << '\n'
      << "prior_data = " << prior_data << '\n'
      << "prior = " << prior << '\n'
      << "min_slab_var = " << d(min_slab_var) << '\n'
      << "damping = " << d(damping) << '\n'
      << "tol = " << d(tol) << '\n'
      << "max_iterations = " << max_iterations << '\n'
      << "inner_tol = " << d(inner_tol) << '\n'
      << "max_inner = " << max_inner << '\n'
      << "unnormalized_correlation = " << (unnormalized_correlation ? 1 : 0) << '\n'
      << "binarize = " << (binarize ? 1 : 0) << '\n';
    return o.str();
  }

  void validate() const {
    if (alphas.empty()) throw InvalidArgument("sweep: alpha grid is empty");
    for (double a : alphas) {
      if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("sweep: alphas must lie in (0, 1]");
    }
    if (repetitions < 1) throw InvalidArgument("sweep: repetitions must be >= 1");
    if (!(noise_var > 0.0)) throw InvalidArgument("sweep: noise variance must be positive");
    if (!(rho_bin_width > 0.0)) throw InvalidArgument("sweep: rho bin width must be positive");
    if (dataset.empty()) throw InvalidArgument("sweep: no dataset given");
    if (!std::filesystem::exists(dataset)) throw InvalidArgument("sweep: dataset " + dataset + " not found");
    if (mode == SolverMode::kGrbm) {
      if (model.empty() || !std::filesystem::exists(model)) throw InvalidArgument("sweep: grbm mode needs an existing model file");
    } else if (mode == SolverMode::kIid && !prior.empty()) {
      parse_prior(prior);
    } else if (prior_data.empty() || !std::filesystem::exists(prior_data)) {
      throw InvalidArgument(std::string("sweep: ") + mode_name(mode) + " mode needs prior_data (or prior for iid)");
    }
  }
};

struct ResultRecord {
  std::int64_t image = 0;
  int repetition = 0;
  int alpha_index = 0;
  double alpha = 0.0;
  std::int64_t M = 0;
  std::int64_t K = 0;
  double rho = 0.0;
  std::string mode;
  double mse_db = 0.0;
  double correlation = 0.0;
  int iterations = 0;
  std::int64_t inner_sweeps = 0;
  bool converged = false;
  double final_delta = 0.0;     // mean |delta a| of the last iteration
  std::string status = "ok";    // "ok" or "failed:<reason>"
  std::uint64_t seed = 0;       // stream seed of the instance
  double seconds = 0.0;         // not part of records.csv

  auto key() const { return std::make_tuple(image, alpha_index, repetition); }
  bool failed() const { return status != "ok"; }
};

inline constexpr char kRecordsHeader[] = "# grbmamp-records v1";
inline constexpr char kRecordsColumns[] =
    "image,repetition,alpha_index,alpha,M,K,rho,mode,mse_db,correlation,iterations,inner_sweeps,converged,"
    "final_delta,status,seed";

inline std::string format_record(const ResultRecord& r) {
  auto d = [](double x) { return io::format_double(x); };
  std::ostringstream o;
  o << r.image << ',' << r.repetition << ',' << r.alpha_index << ',' << d(r.alpha) << ',' << r.M << ',' << r.K
    << ',' << d(r.rho) << ',' << r.mode << ',' << d(r.mse_db) << ',' << d(r.correlation) << ',' << r.iterations
    << ',' << r.inner_sweeps << ',' << (r.converged ? 1 : 0) << ',' << d(r.final_delta) << ',' << r.status << ','
    << r.seed;
  return o.str();
}

inline std::optional<ResultRecord> parse_record(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (f.size() != 16) return std::nullopt;
  try {
    ResultRecord r;
    r.image = io::parse_int<std::int64_t>(f[0]);
    r.repetition = io::parse_int<int>(f[1]);
    r.alpha_index = io::parse_int<int>(f[2]);
    r.alpha = io::parse_double(f[3]);
    r.M = io::parse_int<std::int64_t>(f[4]);
    r.K = io::parse_int<std::int64_t>(f[5]);
    r.rho = io::parse_double(f[6]);
    r.mode = f[7];
    r.mse_db = io::parse_double(f[8]);
    r.correlation = io::parse_double(f[9]);
    r.iterations = io::parse_int<int>(f[10]);
    r.inner_sweeps = io::parse_int<std::int64_t>(f[11]);
    r.converged = io::parse_int<int>(f[12]) != 0;
    r.final_delta = io::parse_double(f[13]);
    r.status = f[14];
    r.seed = io::parse_int<std::uint64_t>(f[15]);
    return r;
  } catch (const FormatError&) {
    return std::nullopt;
  }
}

// Complete, well-formed rows only; a torn final line is dropped.
inline std::vector<ResultRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<ResultRecord> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line[0] == '#' || line == kRecordsColumns) continue;
    if (auto r = parse_record(line)) out.push_back(std::move(*r));
  }
  return out;
}

inline void sort_records(std::vector<ResultRecord>& records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

inline void write_records(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot create " + path.string());
  out << kRecordsHeader << '\n' << kRecordsColumns << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
}

struct GridCell {
  double alpha = 0.0;
  int bin = 0;
  double rho_lo = 0.0;
  double rho_hi = 0.0;
  int count = 0;       // successful records
  int failed = 0;
  double mean_mse_db = 0.0;
  double mean_correlation = 0.0;
  double median_mse_db = 0.0;
  double median_correlation = 0.0;
  double converged_fraction = 0.0;
  double mk_alpha = 0.0;  // alpha where M = K for the bin centre
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct Accumulator {
  std::vector<double> mse, corr;
  int converged = 0;
  int failed = 0;
  void add(const ResultRecord& r) {
    if (r.failed()) {
      ++failed;
      return;
    }
    mse.push_back(r.mse_db);
    corr.push_back(r.correlation);
    if (r.converged) ++converged;
  }
  int total() const { return static_cast<int>(mse.size()) + failed; }
};

}  // namespace detail

// Records must be in sorted order for the means to be reproducible.
inline std::vector<GridCell> aggregate_grid(const std::vector<ResultRecord>& records, double bin_width) {
  std::map<std::pair<double, int>, detail::Accumulator> cells;
  for (const auto& r : records) {
    const int bin = static_cast<int>(std::floor(r.rho / bin_width));
    cells[{r.alpha, bin}].add(r);
  }
  std::vector<GridCell> out;
  for (const auto& [key, acc] : cells) {
    GridCell c;
    c.alpha = key.first;
    c.bin = key.second;
    c.rho_lo = c.bin * bin_width;
    c.rho_hi = (c.bin + 1) * bin_width;
    c.count = static_cast<int>(acc.mse.size());
    c.failed = acc.failed;
    c.mean_mse_db = detail::mean(acc.mse);
    c.mean_correlation = detail::mean(acc.corr);
    c.median_mse_db = detail::median(acc.mse);
    c.median_correlation = detail::median(acc.corr);
    c.converged_fraction = static_cast<double>(acc.converged) / acc.total();
    c.mk_alpha = 0.5 * (c.rho_lo + c.rho_hi);
    out.push_back(c);
  }
  return out;
}

struct AlphaSummary {
  double alpha = 0.0;
  int count = 0;
  int failed = 0;
  double mean_mse_db = 0.0;
  double mean_correlation = 0.0;
  double median_mse_db = 0.0;
  double median_correlation = 0.0;
  double converged_fraction = 0.0;
};

inline std::vector<AlphaSummary> summarize_by_alpha(const std::vector<ResultRecord>& records) {
  std::map<double, detail::Accumulator> groups;
  for (const auto& r : records) groups[r.alpha].add(r);
  std::vector<AlphaSummary> out;
  for (const auto& [alpha, acc] : groups) {
    AlphaSummary s;
    s.alpha = alpha;
    s.count = static_cast<int>(acc.mse.size());
    s.failed = acc.failed;
    s.mean_mse_db = detail::mean(acc.mse);
    s.mean_correlation = detail::mean(acc.corr);
    s.median_mse_db = detail::median(acc.mse);
    s.median_correlation = detail::median(acc.corr);
    s.converged_fraction = static_cast<double>(acc.converged) / acc.total();
    out.push_back(s);
  }
  return out;
}

// Median columns are extras for robustness checks, not the headline means.
inline void write_grid(const std::filesystem::path& path, const std::vector<GridCell>& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot create " + path.string());
  auto d = [](double x) { return io::format_double(x); };
  out << "# grbmamp-grid v1\n"
      << "alpha,rho_bin,rho_lo,rho_hi,count,failed,mean_mse_db,mean_correlation,median_mse_db_extra,"
         "median_correlation_extra,converged_fraction,mk_alpha\n";
  for (const auto& c : grid) {
    out << d(c.alpha) << ',' << c.bin << ',' << d(c.rho_lo) << ',' << d(c.rho_hi) << ',' << c.count << ','
        << c.failed << ',' << d(c.mean_mse_db) << ',' << d(c.mean_correlation) << ',' << d(c.median_mse_db) << ','
        << d(c.median_correlation) << ',' << d(c.converged_fraction) << ',' << d(c.mk_alpha) << '\n';
  }
}

inline void write_summary(const std::filesystem::path& path, const std::vector<AlphaSummary>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot create " + path.string());
  auto d = [](double x) { return io::format_double(x); };
  out << "# grbmamp-summary v1\n"
      << "alpha,count,failed,mean_mse_db,mean_correlation,median_mse_db_extra,median_correlation_extra,"
         "converged_fraction\n";
  for (const auto& s : rows) {
    out << d(s.alpha) << ',' << s.count << ',' << s.failed << ',' << d(s.mean_mse_db) << ','
        << d(s.mean_correlation) << ',' << d(s.median_mse_db) << ',' << d(s.median_correlation) << ','
        << d(s.converged_fraction) << '\n';
  }
}

// Rewrites grid.csv and summary.csv from records.csv in `dir`.
inline void aggregate_directory(const std::filesystem::path& dir, double bin_width) {
  auto records = read_records(dir / "records.csv");
  sort_records(records);
  write_grid(dir / "grid.csv", aggregate_grid(records, bin_width));
  write_summary(dir / "summary.csv", summarize_by_alpha(records));
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("GRBMAMP_THREADS")) {
    try {
      const auto n = io::parse_int<unsigned>(env);
      if (n >= 1) return n;
    } catch (const FormatError&) {
    }
    throw InvalidArgument("GRBMAMP_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Everything a sweep needs, loaded once.
struct SweepContext {
  SignalSet signals;
  SolverOptions options;
};

inline SweepContext prepare_sweep(const ExperimentSpec& spec) {
  spec.validate();
  SweepContext ctx;
  SignalSet all = load_signals(spec.dataset);
  if (spec.first_image > static_cast<std::size_t>(all.size())) throw InvalidArgument("sweep: first_image beyond dataset");
  ctx.signals = slice(all, static_cast<Eigen::Index>(spec.first_image), static_cast<Eigen::Index>(spec.num_images));
  if (spec.binarize) grbmamp::binarize(ctx.signals);
  if (ctx.signals.size() == 0) throw InvalidArgument("sweep: no images selected");
  const auto n = ctx.signals.dim();

  SolverOptions& o = ctx.options;
  o.damping = spec.damping;
  o.tol = spec.tol;
  o.max_iterations = spec.max_iterations;
  o.inner_tol = spec.inner_tol;
  o.max_inner = spec.max_inner;
  if (spec.mode == SolverMode::kGrbm) {
    auto model = std::make_shared<const Grbm>(load_model(spec.model));
    if (model->num_visible() != n) throw InvalidArgument("sweep: model visible layer does not match the dataset");
    o.prior = GrbmPrior{model};
  } else if (spec.mode == SolverMode::kIid && !spec.prior.empty()) {
    o.prior = FactorizedPrior{{parse_prior(spec.prior)}};
  } else {
    SignalSet train = load_signals(spec.prior_data);
    if (spec.binarize) grbmamp::binarize(train);
    if (train.dim() != n) throw InvalidArgument("sweep: prior data dimension does not match the dataset");
    PriorEstimation est;
    est.min_var = spec.min_slab_var;
    if (std::isfinite(train.lo) && std::isfinite(train.hi)) est.bounds = std::make_pair(train.lo, train.hi);
    if (spec.mode == SolverMode::kIid) {
      o.prior = FactorizedPrior{{estimate_iid_prior(train.samples, est)}};
    } else {
      o.prior = FactorizedPrior{estimate_factorized_priors(train.samples, est)};
    }
  }
  detail::check_options(o, n);
  return ctx;
}

// One record; solver failures become a failed record.
inline ResultRecord run_record(const ExperimentSpec& spec, const SweepContext& ctx, Eigen::Index image, int alpha_index,
                               int repetition) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRecord r;
  r.image = static_cast<std::int64_t>(spec.first_image) + image;
  r.alpha_index = alpha_index;
  r.repetition = repetition;
  r.alpha = spec.alphas[static_cast<std::size_t>(alpha_index)];
  r.mode = mode_name(spec.mode);
  const Eigen::VectorXd x = ctx.signals.signal(image);
  r.K = count_nonzero(x);
  r.rho = static_cast<double>(r.K) / static_cast<double>(x.size());
  r.M = measurement_count(x.size(), r.alpha);
  r.seed = stream_seed(spec.seed, {static_cast<std::uint64_t>(r.image), static_cast<std::uint64_t>(alpha_index),
                                   static_cast<std::uint64_t>(repetition)});
  Rng rng(r.seed);
  const auto inst = make_instance(x, r.alpha, spec.noise_var, spec.scaling, rng);
  try {
    const auto rec = reconstruct(inst, ctx.options);
    r.mse_db = mse_db(x, rec.a);
    const auto corr = correlation(
        x, rec.a, spec.unnormalized_correlation ? CorrelationForm::kUnnormalized : CorrelationForm::kPearson);
    r.correlation = corr.value;
    r.iterations = rec.diagnostics.iterations;
    r.inner_sweeps = rec.diagnostics.total_inner_sweeps();
    r.converged = rec.diagnostics.converged;
    r.final_delta = rec.diagnostics.mean_delta.empty() ? 0.0 : rec.diagnostics.mean_delta.back();
  } catch (const NonFiniteError& e) {
    r.status = "failed:nonfinite@" + std::to_string(e.iteration());
    r.mse_db = r.correlation = r.final_delta = std::nan("");
    r.iterations = e.iteration();
  } catch (const Error& e) {
    r.status = "failed:error";
    r.mse_db = r.correlation = r.final_delta = std::nan("");
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct SweepSummary {
  std::size_t total = 0;
  std::size_t resumed = 0;  // records found on disk
  std::size_t failed = 0;
};

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace detail

// Runs or resumes a sweep. `limit` > 0 stops after that many new records
// (used to exercise resumption).
inline SweepSummary run_phase_sweep(const ExperimentSpec& spec, std::size_t limit = 0) {
  const SweepContext ctx = prepare_sweep(spec);
  const std::filesystem::path dir = spec.output_dir;
  std::filesystem::create_directories(dir);
  const auto spec_path = dir / "spec.txt";
  const auto records_path = dir / "records.csv";
  const std::string canon = spec.canonical();

  std::vector<ResultRecord> done;
  if (std::filesystem::exists(spec_path)) {
    if (detail::read_text(spec_path) != canon) {
      throw InvalidArgument("sweep: " + dir.string() + " holds results of a different spec");
    }
    if (std::filesystem::exists(records_path)) done = read_records(records_path);
  } else {
    std::ofstream(spec_path, std::ios::binary) << canon;
  }

  std::set<std::tuple<std::int64_t, int, int>> have;
  for (const auto& r : done) have.insert(r.key());
  struct Job {
    Eigen::Index image;
    int alpha_index;
    int repetition;
  };
  std::vector<Job> jobs;
  for (Eigen::Index s = 0; s < ctx.signals.size(); ++s) {
    for (int a = 0; a < static_cast<int>(spec.alphas.size()); ++a) {
      for (int rep = 0; rep < spec.repetitions; ++rep) {
        const auto key = std::make_tuple(static_cast<std::int64_t>(spec.first_image) + s, a, rep);
        if (!have.count(key)) jobs.push_back({s, a, rep});
      }
    }
  }
  if (limit > 0 && jobs.size() > limit) jobs.resize(limit);

  // Completed rows are appended as they finish, so an interrupted run
  // keeps them.
  {
    std::ofstream out(records_path, std::ios::binary | std::ios::trunc);
    out << kRecordsHeader << '\n' << kRecordsColumns << '\n';
    for (const auto& r : done) out << format_record(r) << '\n';
  }
  std::ofstream append(records_path, std::ios::binary | std::ios::app);
  std::ofstream timing(dir / "timing.csv", std::ios::binary | std::ios::app);
  std::mutex write_mutex;
  std::atomic<std::size_t> next{0};
  std::vector<ResultRecord> fresh(jobs.size());
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      fresh[j] = run_record(spec, ctx, jobs[j].image, jobs[j].alpha_index, jobs[j].repetition);
      std::lock_guard<std::mutex> lock(write_mutex);
      append << format_record(fresh[j]) << '\n' << std::flush;
      timing << fresh[j].image << ',' << fresh[j].alpha_index << ',' << fresh[j].repetition << ','
             << io::format_double(fresh[j].seconds) << '\n';
    }
  };
  const unsigned threads = std::min<std::size_t>(worker_count(), std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  append.close();

  SweepSummary summary;
  summary.resumed = done.size();
  done.insert(done.end(), fresh.begin(), fresh.end());
  sort_records(done);
  write_records(records_path, done);
  write_grid(dir / "grid.csv", aggregate_grid(done, spec.rho_bin_width));
  write_summary(dir / "summary.csv", summarize_by_alpha(done));
  summary.total = done.size();
  for (const auto& r : done) summary.failed += r.failed() ? 1 : 0;
  return summary;
}

}  // namespace grbmamp
