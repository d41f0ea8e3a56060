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

// Contrastive-divergence training of a GRBM with truncated Gauss-Bernoulli
// visible units and binary hidden units.
//
// The visible spike-and-slab parameters are estimated per unit from the
// data and stay fixed; W and the hidden biases follow
//
//   grad W  = <x h^T>_data - <x h^T>_model
//   grad b  = <h>_data - <h>_model
//   v      <- momentum v + lr (grad - decay W)      (no decay on biases)
//   W      <- W + v
//
// The data term uses mean-field hidden activations, the model term the
// sampled states at the end of a k-step block Gibbs chain started at the
// data.

#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "grbmamp/binary_io.hpp"
#include "grbmamp/data.hpp"
#include "grbmamp/errors.hpp"
#include "grbmamp/grbm.hpp"
#include "grbmamp/prior.hpp"
#include "grbmamp/rng.hpp"

namespace grbmamp {

struct TrainConfig {
  int hidden = 100;
  int epochs = 20;
  double learning_rate = 0.01;
  double weight_decay = 0.001;
  double momentum = 0.5;
  int batch_size = 100;
  int cd_steps = 1;
  double lo = 0.0;
  double hi = 1.0;
  double init_scale = 0.01;   // sd of the initial weights
  double min_slab_var = 1e-4;
  std::uint64_t seed = 1;

  void validate() const {
    if (hidden < 1 || epochs < 0 || batch_size < 1 || cd_steps < 1) {
      throw InvalidArgument("train: hidden, batch size and CD steps must be positive");
    }
    if (!(learning_rate > 0.0) || !(weight_decay >= 0.0) || !(momentum >= 0.0 && momentum < 1.0)) {
      throw InvalidArgument("train: need lr > 0, decay >= 0, momentum in [0, 1)");
    }
    if (!(lo < hi) || lo > 0.0 || hi < 0.0) throw InvalidArgument("train: bounds must satisfy lo <= 0 <= hi, lo < hi");
    if (!(init_scale >= 0.0) || !(min_slab_var > 0.0)) throw InvalidArgument("train: bad init scale or variance floor");
  }
};

struct EpochLog {
  int epoch = 0;
  double recon_error = 0.0;  // mean squared error of E[x | h] per coefficient
  double weight_norm = 0.0;  // Frobenius norm of W
  double seconds = 0.0;      // wall time since training started
};

struct TrainResult {
  Grbm model;
  std::vector<EpochLog> log;
};

// One block Gibbs step from `visible`: h ~ P(h | x), then x' ~ P(x | h).
template <class R>
std::pair<Eigen::VectorXd, Eigen::VectorXd> gibbs_step(const Grbm& model, const Eigen::VectorXd& visible, R& rng) {
  if (visible.size() != model.num_visible()) throw InvalidArgument("gibbs: visible length mismatch");
  const Eigen::VectorXd hidden_field = model.couplings().transpose() * visible;
  Eigen::VectorXd h(model.num_hidden());
  for (Eigen::Index mu = 0; mu < h.size(); ++mu) {
    h[mu] = sample(model.hidden_priors()[static_cast<std::size_t>(mu)], {0.0, hidden_field[mu]}, rng);
  }
  const Eigen::VectorXd visible_field = model.couplings() * h;
  Eigen::VectorXd x(model.num_visible());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = sample(model.visible_priors()[static_cast<std::size_t>(i)], {0.0, visible_field[i]}, rng);
  }
  return {std::move(h), std::move(x)};
}

// Shuffles with uniforms drawn from `rng`, so the order is the same on
// every standard library.
template <class R>
void shuffle_indices(std::vector<Eigen::Index>& idx, R& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(idx[i - 1], idx[j]);
  }
}

struct Gradient {
  Eigen::MatrixXd W;
  Eigen::VectorXd bias;
};

// Momentum step with L2 decay on W only.
inline void apply_update(Eigen::MatrixXd& W, Eigen::VectorXd& bias, Gradient& velocity, const Gradient& grad,
                         const TrainConfig& config) {
  velocity.W = config.momentum * velocity.W + config.learning_rate * (grad.W - config.weight_decay * W);
  velocity.bias = config.momentum * velocity.bias + config.learning_rate * grad.bias;
  W += velocity.W;
  bias += velocity.bias;
}

inline std::vector<Prior> hidden_layer(const Eigen::VectorXd& bias) {
  std::vector<Prior> out;
  out.reserve(static_cast<std::size_t>(bias.size()));
  for (Eigen::Index mu = 0; mu < bias.size(); ++mu) out.push_back(Bernoulli{bias[mu]});
  return out;
}

using EpochCallback = std::function<void(const EpochLog&)>;

template <class R>
TrainResult train(const RowMatrix& data, const TrainConfig& config, R& rng, const EpochCallback& on_epoch = {}) {
  config.validate();
  const Eigen::Index s_count = data.rows();
  const Eigen::Index n = data.cols();
  const Eigen::Index h = config.hidden;
  if (s_count < 1 || n < 1) throw InvalidArgument("train: empty data");
  if (!data.allFinite() || data.minCoeff() < config.lo || data.maxCoeff() > config.hi) {
    throw InvalidArgument("train: data outside the truncation bounds");
  }

  const auto visible = estimate_factorized_priors(
      data, PriorEstimation{std::make_pair(config.lo, config.hi), config.min_slab_var});

  NormalSampler normal;
  Eigen::MatrixXd W(n, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index mu = 0; mu < h; ++mu) W(i, mu) = config.init_scale * normal(rng);
  }
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(h);
  Gradient velocity{Eigen::MatrixXd::Zero(n, h), Eigen::VectorXd::Zero(h)};

  std::vector<Eigen::Index> order(static_cast<std::size_t>(s_count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_indices(order, rng);
    double sq_error = 0.0;
    for (Eigen::Index first = 0, batch = 0; first < s_count; first += config.batch_size, ++batch) {
      const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, s_count - first);
      Eigen::MatrixXd x(b, n);
      for (Eigen::Index r = 0; r < b; ++r) x.row(r) = data.row(order[static_cast<std::size_t>(first + r)]);

      Eigen::MatrixXd h_data = (x * W).rowwise() + bias.transpose();
      h_data = h_data.unaryExpr([](double t) { return special::sigmoid(t); });

      Eigen::MatrixXd h_prob = h_data;
      Eigen::MatrixXd h_model(b, h);
      Eigen::MatrixXd x_model(b, n);
      for (int step = 0; step < config.cd_steps; ++step) {
        for (Eigen::Index r = 0; r < b; ++r) {
          for (Eigen::Index mu = 0; mu < h; ++mu) h_model(r, mu) = uniform01(rng) < h_prob(r, mu) ? 1.0 : 0.0;
        }
        const Eigen::MatrixXd field = h_model * W.transpose();
        for (Eigen::Index r = 0; r < b; ++r) {
          for (Eigen::Index i = 0; i < n; ++i) {
            const Prior& p = visible[static_cast<std::size_t>(i)];
            if (step == 0) {
              const double mean = posterior_moments(p, {0.0, field(r, i)}).mean;
              sq_error += (x(r, i) - mean) * (x(r, i) - mean);
            }
            x_model(r, i) = sample(p, {0.0, field(r, i)}, rng);
          }
        }
        h_prob = ((x_model * W).rowwise() + bias.transpose()).unaryExpr([](double t) { return special::sigmoid(t); });
      }
      for (Eigen::Index r = 0; r < b; ++r) {
        for (Eigen::Index mu = 0; mu < h; ++mu) h_model(r, mu) = uniform01(rng) < h_prob(r, mu) ? 1.0 : 0.0;
      }

      const double inv_b = 1.0 / static_cast<double>(b);
      Gradient grad;
      grad.W = (x.transpose() * h_data - x_model.transpose() * h_model) * inv_b;
      grad.bias = (h_data.colwise().sum() - h_model.colwise().sum()).transpose() * inv_b;
      apply_update(W, bias, velocity, grad, config);
      if (!W.allFinite() || !bias.allFinite()) {
        throw NonFiniteError("train: non-finite parameters at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch),
                             epoch);
      }
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.recon_error = sq_error / static_cast<double>(s_count * n);
    entry.weight_norm = W.norm();
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.model = Grbm(std::move(W), visible, hidden_layer(bias));
  return result;
}

inline void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot create " + path.string());
  out << "# grbmamp-training-log v1\n";
  out << "epoch,recon_error,weight_norm,seconds\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << io::format_double(e.recon_error) << ',' << io::format_double(e.weight_norm) << ','
        << io::format_double(e.seconds) << '\n';
  }
}

}  // namespace grbmamp
