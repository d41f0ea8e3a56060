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

// GRBM model files.
//
// Binary layout, all little-endian:
//
//   "GRBM"            4 bytes
//   version           u32 (= 1)
//   N, H              u64, u64
//   visible tag       u32 (PriorKind), then N x k f64 parameter rows
//   hidden tag        u32 (PriorKind), then H x k f64 parameter rows
//   W                 N x H f64, row-major
//
// Parameter rows are (bias) for Bernoulli, (rho, mean, var) for
// Gauss-Bernoulli and (rho, mean, var, lo, hi) for the truncated variant.
// Every unit of a layer shares the layer's tag.
//
// The text variant holds the same data:
//
//   grbm-text 1
//   visible <N> <kind>
//   <k numbers>          one line per visible unit
//   hidden <H> <kind>
//   <k numbers>          one line per hidden unit
//   weights
//   <H numbers>          one line per visible unit
//
// Numbers use the shortest decimal form that reads back exactly, so both
// formats round-trip bit for bit. '#' starts a comment line.

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grbmamp/binary_io.hpp"
#include "grbmamp/errors.hpp"
#include "grbmamp/grbm.hpp"
#include "grbmamp/prior.hpp"

namespace grbmamp {

namespace detail {

inline int param_count(PriorKind k) {
  switch (k) {
    case PriorKind::kBernoulli: return 1;
    case PriorKind::kGaussBernoulli: return 3;
    case PriorKind::kTruncGaussBernoulli: return 5;
  }
  throw FormatError("unknown prior tag " + std::to_string(static_cast<std::uint32_t>(k)));
}

inline PriorKind parse_kind_tag(std::uint32_t tag) {
  if (tag < 1 || tag > 3) throw FormatError("unknown prior tag " + std::to_string(tag));
  return static_cast<PriorKind>(tag);
}

inline PriorKind parse_kind_name(const std::string& name) {
  for (auto k : {PriorKind::kBernoulli, PriorKind::kGaussBernoulli, PriorKind::kTruncGaussBernoulli}) {
    if (name == kind_name(k)) return k;
  }
  throw FormatError("unknown prior kind '" + name + "'");
}

inline std::vector<double> prior_params(const Prior& p) {
  return std::visit(
      [](const auto& q) -> std::vector<double> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return {q.bias};
        } else if constexpr (std::is_same_v<T, GaussBernoulli>) {
          return {q.rho, q.mean, q.var};
        } else {
          return {q.rho, q.mean, q.var, q.lo, q.hi};
        }
      },
      p);
}

inline Prior prior_from_params(PriorKind k, const double* v) {
  switch (k) {
    case PriorKind::kBernoulli: return Bernoulli{v[0]};
    case PriorKind::kGaussBernoulli: return GaussBernoulli{v[0], v[1], v[2]};
    case PriorKind::kTruncGaussBernoulli: return TruncGaussBernoulli{v[0], v[1], v[2], v[3], v[4]};
  }
  throw FormatError("unknown prior kind");
}

inline PriorKind layer_kind(const std::vector<Prior>& layer, const char* name) {
  if (layer.empty()) return PriorKind::kBernoulli;
  const auto k = kind_of(layer.front());
  for (const auto& p : layer) {
    if (kind_of(p) != k) throw InvalidArgument(std::string("model file: mixed prior kinds in ") + name + " layer");
  }
  return k;
}

inline Grbm checked_model(Eigen::MatrixXd w, std::vector<Prior> vis, std::vector<Prior> hid, const std::string& src) {
  try {
    return Grbm(std::move(w), std::move(vis), std::move(hid));
  } catch (const InvalidArgument& e) {
    throw FormatError(src + ": invalid model contents: " + e.what());
  }
}

}  // namespace detail

inline std::vector<unsigned char> encode_model(const Grbm& model) {
  io::Writer out;
  out.put_bytes("GRBM");
  out.put<std::uint32_t>(1);
  out.put<std::uint64_t>(static_cast<std::uint64_t>(model.num_visible()));
  out.put<std::uint64_t>(static_cast<std::uint64_t>(model.num_hidden()));
  for (const auto* layer : {&model.visible_priors(), &model.hidden_priors()}) {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(
        detail::layer_kind(*layer, layer == &model.visible_priors() ? "visible" : "hidden")));
    for (const auto& p : *layer) {
      for (double v : detail::prior_params(p)) out.put<double>(v);
    }
  }
  const auto& w = model.couplings();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) out.put<double>(w(i, j));
  }
  return std::move(out.bytes());
}

inline Grbm decode_model(const std::vector<unsigned char>& bytes, const std::string& name = "model") {
  io::Reader in(bytes, name);
  if (bytes.size() < 4 || in.get_bytes(4) != "GRBM") throw BadMagic(name + ": not a GRBM model file");
  const auto version = in.get_le<std::uint32_t>();
  if (version != 1) throw FormatError(name + ": unsupported model version " + std::to_string(version));
  const auto n = in.get_le<std::uint64_t>();
  const auto h = in.get_le<std::uint64_t>();
  auto read_layer = [&](std::uint64_t count) {
    const auto kind = detail::parse_kind_tag(in.get_le<std::uint32_t>());
    const int k = detail::param_count(kind);
    if (count > in.remaining() / (8 * static_cast<std::uint64_t>(k))) {
      throw TruncatedFile(name + ": prior block shorter than declared");
    }
    std::vector<Prior> layer;
    layer.reserve(count);
    double v[5];
    for (std::uint64_t u = 0; u < count; ++u) {
      for (int j = 0; j < k; ++j) v[j] = in.get_le<double>();
      layer.push_back(detail::prior_from_params(kind, v));
    }
    return layer;
  };
  auto vis = read_layer(n);
  auto hid = read_layer(h);
  if (h != 0 && n > in.remaining() / 8 / h) throw TruncatedFile(name + ": weight block shorter than declared");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = in.get_le<double>();
  }
  if (in.remaining() != 0) throw FormatError(name + ": trailing bytes after weights");
  return detail::checked_model(std::move(w), std::move(vis), std::move(hid), name);
}

inline std::string encode_model_text(const Grbm& model) {
  std::string s = "grbm-text 1\n";
  auto layer = [&](const char* name, const std::vector<Prior>& priors) {
    const auto kind = detail::layer_kind(priors, name);
    s += std::string(name) + " " + std::to_string(priors.size()) + " " + kind_name(kind) + "\n";
    for (const auto& p : priors) {
      const auto v = detail::prior_params(p);
      for (std::size_t j = 0; j < v.size(); ++j) s += (j ? " " : "") + io::format_double(v[j]);
      s += "\n";
    }
  };
  layer("visible", model.visible_priors());
  layer("hidden", model.hidden_priors());
  s += "weights\n";
  const auto& w = model.couplings();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) s += (j ? " " : "") + io::format_double(w(i, j));
    s += "\n";
  }
  return s;
}

inline Grbm decode_model_text(const std::string& text, const std::string& name = "model") {
  std::istringstream lines(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(lines, line)) {
    std::istringstream ws(line);
    std::vector<std::string> tok;
    std::string t;
    while (ws >> t) tok.push_back(t);
    if (tok.empty() || tok.front().front() == '#') continue;
    rows.push_back(std::move(tok));
  }
  std::size_t r = 0;
  auto next = [&]() -> const std::vector<std::string>& {
    if (r >= rows.size()) throw TruncatedFile(name + ": text model ends early");
    return rows[r++];
  };
  const auto& head = next();
  if (head.size() != 2 || head[0] != "grbm-text") throw BadMagic(name + ": not a text GRBM model");
  if (head[1] != "1") throw FormatError(name + ": unsupported text model version " + head[1]);
  auto read_layer = [&](const char* section) {
    const auto& hdr = next();
    if (hdr.size() != 3 || hdr[0] != section) throw FormatError(name + ": expected '" + section + " <count> <kind>'");
    const auto count = io::parse_int<std::size_t>(hdr[1]);
    const auto kind = detail::parse_kind_name(hdr[2]);
    const auto k = static_cast<std::size_t>(detail::param_count(kind));
    std::vector<Prior> layer;
    double v[5];
    for (std::size_t u = 0; u < count; ++u) {
      const auto& row = next();
      if (row.size() != k) throw DimensionMismatch(name + ": " + section + " row has wrong parameter count");
      for (std::size_t j = 0; j < k; ++j) v[j] = io::parse_double(row[j]);
      layer.push_back(detail::prior_from_params(kind, v));
    }
    return layer;
  };
  auto vis = read_layer("visible");
  auto hid = read_layer("hidden");
  const auto& wh = next();
  if (wh.size() != 1 || wh[0] != "weights") throw FormatError(name + ": expected 'weights'");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(vis.size()), static_cast<Eigen::Index>(hid.size()));
  for (Eigen::Index i = 0; i < w.rows() && w.cols() > 0; ++i) {
    const auto& row = next();
    if (static_cast<Eigen::Index>(row.size()) != w.cols()) throw DimensionMismatch(name + ": weight row has wrong length");
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = io::parse_double(row[static_cast<std::size_t>(j)]);
  }
  if (r != rows.size()) throw FormatError(name + ": trailing content after weights");
  return detail::checked_model(std::move(w), std::move(vis), std::move(hid), name);
}

inline bool is_text_model_path(const std::filesystem::path& path) {
  return path.extension() == ".txt";
}

// Text when the name ends in ".txt", binary otherwise.
inline void save_model(const std::filesystem::path& path, const Grbm& model) {
  if (is_text_model_path(path)) {
    const auto s = encode_model_text(model);
    io::write_file(path, std::vector<unsigned char>(s.begin(), s.end()));
  } else {
    io::write_file(path, encode_model(model));
  }
}

// Detects the format from the content.
inline Grbm load_model(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "GRBM") {
    return decode_model(bytes, path.string());
  }
  return decode_model_text(std::string(bytes.begin(), bytes.end()), path.string());
}

}  // namespace grbmamp
