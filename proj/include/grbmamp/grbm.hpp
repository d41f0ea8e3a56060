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

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "grbmamp/errors.hpp"
#include "grbmamp/prior.hpp"

namespace grbmamp {

// Generalized RBM: P(x, h) ∝ exp(x^T W h) prod_i P_i(x_i) prod_mu P_mu(h_mu).
// The visible and hidden layers may use any prior variant. The global
// normalization is never formed.
class Grbm {
 public:
  Grbm() = default;

  Grbm(Eigen::MatrixXd couplings, std::vector<Prior> visible, std::vector<Prior> hidden)
      : w_(std::move(couplings)), visible_(std::move(visible)), hidden_(std::move(hidden)) {
    if (w_.rows() != static_cast<Eigen::Index>(visible_.size()) ||
        w_.cols() != static_cast<Eigen::Index>(hidden_.size())) {
      throw InvalidArgument("grbm: coupling matrix is " + std::to_string(w_.rows()) + "x" +
                            std::to_string(w_.cols()) + " but priors are " +
                            std::to_string(visible_.size()) + " visible, " +
                            std::to_string(hidden_.size()) + " hidden");
    }
    if (!w_.allFinite()) throw InvalidArgument("grbm: couplings must be finite");
    for (const auto& p : visible_) validate(p);
    for (const auto& p : hidden_) validate(p);
    w_sq_ = w_.cwiseAbs2();
  }

  Eigen::Index num_visible() const { return w_.rows(); }
  Eigen::Index num_hidden() const { return w_.cols(); }

  // Visible x hidden.
  const Eigen::MatrixXd& couplings() const { return w_; }
  const Eigen::MatrixXd& squared_couplings() const { return w_sq_; }
  const std::vector<Prior>& visible_priors() const { return visible_; }
  const std::vector<Prior>& hidden_priors() const { return hidden_; }

  friend bool operator==(const Grbm& a, const Grbm& b) {
    return a.w_.rows() == b.w_.rows() && a.w_.cols() == b.w_.cols() && a.w_ == b.w_ &&
           a.visible_ == b.visible_ && a.hidden_ == b.hidden_;
  }

 private:
  Eigen::MatrixXd w_;
  Eigen::MatrixXd w_sq_;
  std::vector<Prior> visible_;
  std::vector<Prior> hidden_;
};

}  // namespace grbmamp
