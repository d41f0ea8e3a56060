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

// Signal sets, dataset files, and compressed-sensing instance synthesis.
//
// Two on-disk formats are read:
//   * IDX (the MNIST container): big-endian header, unsigned bytes, first
//     dimension is the sample index and the rest is flattened row-major.
//     Bytes are scaled by 1/255. gzip-compressed files are accepted.
//   * Signal cache: "GRBMSIG1", u32 version, u64 S, u64 N, f64 lo, f64 hi,
//     u64 seed, u32 length + source string, then S*N little-endian f64
//     in sample-major order.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grbmamp/amp.hpp"
#include "grbmamp/binary_io.hpp"
#include "grbmamp/errors.hpp"
#include "grbmamp/prior.hpp"
#include "grbmamp/rng.hpp"

namespace grbmamp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SignalSet {
  RowMatrix samples;         // S x N, one signal per row
  std::vector<int> sparsity;  // nonzero count per row
  double lo = 0.0;
  double hi = 1.0;
  std::string source;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
  Eigen::VectorXd signal(Eigen::Index s) const { return samples.row(s).transpose(); }
};

inline int count_nonzero(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return static_cast<int>((x.array() != 0.0).count());
}

inline void recount_sparsity(SignalSet& set) {
  set.sparsity.resize(static_cast<std::size_t>(set.size()));
  for (Eigen::Index s = 0; s < set.size(); ++s) {
    set.sparsity[static_cast<std::size_t>(s)] = static_cast<int>((set.samples.row(s).array() != 0.0).count());
  }
}

// `expected_dim` > 0 rejects files whose flattened sample size differs.
inline SignalSet load_idx(const std::filesystem::path& path, Eigen::Index expected_dim = 0) {
  const auto bytes = io::read_file(path);
  io::Reader in(bytes, path.string());
  if (bytes.size() < 4) throw BadMagic(path.string() + ": too short for an IDX header");
  const auto magic = in.get_be<std::uint32_t>();
  const unsigned type = (magic >> 8) & 0xff;
  const unsigned ndims = magic & 0xff;
  if ((magic >> 16) != 0 || type != 0x08) {
    throw BadMagic(path.string() + ": not an unsigned-byte IDX file");
  }
  if (ndims < 2) throw BadMagic(path.string() + ": IDX tensor needs at least 2 dimensions");
  std::vector<std::uint64_t> dims(ndims);
  for (auto& d : dims) d = in.get_be<std::uint32_t>();
  std::uint64_t n = 1;
  for (unsigned k = 1; k < ndims; ++k) n *= dims[k];
  if (dims[0] == 0 || n == 0) throw DimensionMismatch(path.string() + ": zero-sized dimension");
  if (expected_dim > 0 && n != static_cast<std::uint64_t>(expected_dim)) {
    throw DimensionMismatch(path.string() + ": sample size " + std::to_string(n) + ", expected " +
                            std::to_string(expected_dim));
  }
  const std::uint64_t count = dims[0] * n;
  if (in.remaining() < count) {
    throw TruncatedFile(path.string() + ": payload has " + std::to_string(in.remaining()) +
                        " bytes, header declares " + std::to_string(count));
  }
  SignalSet set;
  set.samples.resize(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(n));
  const unsigned char* p = in.cursor();
  double* out = set.samples.data();
  for (std::uint64_t k = 0; k < count; ++k) out[k] = p[k] / 255.0;
  set.lo = 0.0;
  set.hi = 1.0;
  set.source = path.string();
  recount_sparsity(set);
  return set;
}

// Writes samples as an IDX tensor of shape (S, rows, cols) or (S, N) when
// `rows` is 0. Values are quantized to round(255 x) after clamping to [0, 1].
inline void write_idx(const std::filesystem::path& path, const SignalSet& set, std::uint32_t rows = 0) {
  io::Writer w;
  const auto n = static_cast<std::uint32_t>(set.dim());
  if (rows != 0 && n % rows != 0) throw InvalidArgument("write_idx: rows does not divide N");
  const unsigned ndims = rows != 0 ? 3 : 2;
  auto put_be = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) w.bytes().push_back(static_cast<unsigned char>(v >> s));
  };
  put_be(0x00000800u | ndims);
  put_be(static_cast<std::uint32_t>(set.size()));
  if (rows != 0) {
    put_be(rows);
    put_be(n / rows);
  } else {
    put_be(n);
  }
  const double* p = set.samples.data();
  for (Eigen::Index k = 0; k < set.samples.size(); ++k) {
    w.bytes().push_back(static_cast<unsigned char>(std::lround(std::clamp(p[k], 0.0, 1.0) * 255.0)));
  }
  io::write_file(path, w.bytes());
}

inline constexpr char kSignalCacheMagic[] = "GRBMSIG1";

inline void write_signal_cache(const std::filesystem::path& path, const SignalSet& set) {
  io::Writer w;
  w.put_bytes(std::string_view(kSignalCacheMagic, 8));
  w.put<std::uint32_t>(1);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(set.size()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(set.dim()));
  w.put<double>(set.lo);
  w.put<double>(set.hi);
  w.put<std::uint64_t>(set.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.source.size()));
  w.put_bytes(set.source);
  const double* p = set.samples.data();
  for (Eigen::Index k = 0; k < set.samples.size(); ++k) w.put<double>(p[k]);
  io::write_file(path, w.bytes());
}

inline SignalSet read_signal_cache(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::Reader in(bytes, path.string());
  if (bytes.size() < 8 || in.get_bytes(8) != std::string(kSignalCacheMagic, 8)) {
    throw BadMagic(path.string() + ": not a signal cache file");
  }
  const auto version = in.get_le<std::uint32_t>();
  if (version != 1) throw FormatError(path.string() + ": unsupported cache version " + std::to_string(version));
  const auto s = in.get_le<std::uint64_t>();
  const auto n = in.get_le<std::uint64_t>();
  SignalSet set;
  set.lo = in.get_le<double>();
  set.hi = in.get_le<double>();
  set.seed = in.get_le<std::uint64_t>();
  set.source = in.get_bytes(in.get_le<std::uint32_t>());
  if (n != 0 && s > in.remaining() / 8 / n) throw TruncatedFile(path.string() + ": payload shorter than header declares");
  in.need(s * n * 8);
  set.samples.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n));
  double* out = set.samples.data();
  for (std::uint64_t k = 0; k < s * n; ++k) out[k] = in.get_le<double>();
  recount_sparsity(set);
  return set;
}

// Dispatches on content: signal cache by magic, IDX otherwise.
inline SignalSet load_signals(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() >= 8 && std::equal(bytes.begin(), bytes.begin() + 8, kSignalCacheMagic)) {
    return read_signal_cache(path);
  }
  return load_idx(path);
}

// Keeps rows [first, first + count) (count 0 means to the end).
inline SignalSet slice(const SignalSet& set, Eigen::Index first, Eigen::Index count = 0) {
  if (first < 0 || first > set.size()) throw InvalidArgument("slice: start out of range");
  const Eigen::Index n = count == 0 ? set.size() - first : std::min(count, set.size() - first);
  SignalSet out = set;
  out.samples = set.samples.middleRows(first, n);
  recount_sparsity(out);
  return out;
}

// Maps values above `threshold` to 1 and the rest to 0.
inline void binarize(SignalSet& set, double threshold = 0.5) {
  set.samples = (set.samples.array() > threshold).cast<double>();
  set.lo = 0.0;
  set.hi = 1.0;
  recount_sparsity(set);
}

enum class MatrixScaling {
  kUnitRow,        // F_mi ~ N(0, 1/N), so rows have unit expected norm
  kInvSqrtN,       // F_mi ~ N(0, 1/sqrt(N))
};

inline Eigen::Index measurement_count(Eigen::Index n, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("measurement rate must lie in (0, 1]");
  const auto m = static_cast<Eigen::Index>(std::lround(alpha * static_cast<double>(n)));
  if (m < 1) throw InvalidArgument("measurement rate gives M = 0");
  return m;
}

// F filled row by row, then the noise vector, all from `rng`.
inline CsInstance make_instance(const Eigen::VectorXd& signal, double alpha, double noise_var,
                                MatrixScaling scaling, Rng& rng) {
  if (!(noise_var >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
  const auto n = signal.size();
  const auto m = measurement_count(n, alpha);
  const double variance = scaling == MatrixScaling::kUnitRow
                              ? 1.0 / static_cast<double>(n)
                              : 1.0 / std::sqrt(static_cast<double>(n));
  const double sd = std::sqrt(variance);
  NormalSampler normal;
  CsInstance inst;
  inst.F.resize(m, n);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) inst.F(r, i) = sd * normal(rng);
  }
  inst.y = inst.F * signal;
  const double noise_sd = std::sqrt(noise_var);
  for (Eigen::Index r = 0; r < m; ++r) inst.y[r] += noise_sd * normal(rng);
  inst.noise_var = noise_var;
  inst.truth = signal;
  return inst;
}

struct SlabParams {
  double mean = 0.0;
  double var = 1.0;
  std::optional<std::pair<double, double>> bounds;  // truncate the slab to [lo, hi]
};

inline Prior make_spike_slab(double rho, const SlabParams& slab) {
  if (slab.bounds) return TruncGaussBernoulli{rho, slab.mean, slab.var, slab.bounds->first, slab.bounds->second};
  return GaussBernoulli{rho, slab.mean, slab.var};
}

// S i.i.d. spike-and-slab signals of length N.
inline SignalSet synth_sparse(Eigen::Index n, double rho, const SlabParams& slab, Eigen::Index count,
                              Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("synth_sparse: rho must lie in [0, 1]");
  const Prior prior = make_spike_slab(rho, slab);
  validate(prior);
  SignalSet set;
  set.samples.resize(count, n);
  for (Eigen::Index s = 0; s < count; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) set.samples(s, i) = sample(prior, {0.0, 0.0}, rng);
  }
  if (slab.bounds) {
    set.lo = slab.bounds->first;
    set.hi = slab.bounds->second;
  } else {
    set.lo = -special::kInf;
    set.hi = special::kInf;
  }
  set.source = "synthetic gauss-bernoulli rho=" + io::format_double(rho);
  recount_sparsity(set);
  return set;
}

struct PriorEstimation {
  std::optional<std::pair<double, double>> bounds;  // truncated slab when set
  double min_var = 1e-4;
};

namespace detail {

inline Prior estimate_one(double nonzero, double total, double sum, double sum_sq,
                          const PriorEstimation& opt) {
  const double rho = total > 0 ? nonzero / total : 0.0;
  double mean = 0.0;
  double var = 1.0;
  if (nonzero > 0) {
    mean = sum / nonzero;
    var = std::max(opt.min_var, sum_sq / nonzero - mean * mean);
  } else if (opt.bounds) {
    mean = 0.5 * (opt.bounds->first + opt.bounds->second);
  }
  return make_spike_slab(rho, {mean, var, opt.bounds});
}

}  // namespace detail

// Per-coefficient spike-and-slab priors: rho_i is the empirical nonzero
// frequency, the slab mean and variance those of the nonzero values.
inline std::vector<Prior> estimate_factorized_priors(const RowMatrix& samples, const PriorEstimation& opt) {
  std::vector<Prior> out;
  out.reserve(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index i = 0; i < samples.cols(); ++i) {
    double k = 0, sum = 0, sum_sq = 0;
    for (Eigen::Index s = 0; s < samples.rows(); ++s) {
      const double v = samples(s, i);
      if (v != 0.0) {
        k += 1;
        sum += v;
        sum_sq += v * v;
      }
    }
    out.push_back(detail::estimate_one(k, static_cast<double>(samples.rows()), sum, sum_sq, opt));
  }
  return out;
}

// One spike-and-slab prior pooled over every coefficient.
inline Prior estimate_iid_prior(const RowMatrix& samples, const PriorEstimation& opt) {
  double k = 0, sum = 0, sum_sq = 0;
  const double* p = samples.data();
  for (Eigen::Index j = 0; j < samples.size(); ++j) {
    if (p[j] != 0.0) {
      k += 1;
      sum += p[j];
      sum_sq += p[j] * p[j];
    }
  }
  return detail::estimate_one(k, static_cast<double>(samples.size()), sum, sum_sq, opt);
}

}  // namespace grbmamp
