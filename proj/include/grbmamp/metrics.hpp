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
#include <cmath>

#include "grbmamp/errors.hpp"

namespace grbmamp {

inline constexpr double kMseFloorDb = -160.0;

// 10 log10(||x - a||^2 / N), floored at -160 dB (exact recovery).
inline double mse_db(const Eigen::VectorXd& x, const Eigen::VectorXd& a) {
  if (x.size() != a.size() || x.size() == 0) throw InvalidArgument("mse_db: length mismatch");
  const double mse = (x - a).squaredNorm() / static_cast<double>(x.size());
  if (mse == 0.0) return kMseFloorDb;
  return std::max(kMseFloorDb, 10.0 * std::log10(mse));
}

enum class CorrelationForm {
  kPearson,  // centered inner product / (N sd_x sd_a), in [-1, 1]
  kUnnormalized,  // centered inner product / (sd_x sd_a), no 1/N
};

struct Correlation {
  double value = 0.0;
  bool constant_input = false;  // a vector had zero spread; value is 0
};

inline Correlation correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                               CorrelationForm form = CorrelationForm::kPearson) {
  if (x.size() != a.size() || x.size() == 0) throw InvalidArgument("correlation: length mismatch");
  const double n = static_cast<double>(x.size());
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd da = a.array() - a.mean();
  const double sx = std::sqrt(dx.square().sum() / n);
  const double sa = std::sqrt(da.square().sum() / n);
  if (sx == 0.0 || sa == 0.0) return {0.0, true};
  const double inner = (dx * da).sum();
  if (form == CorrelationForm::kUnnormalized) return {inner / (sx * sa), false};
  return {std::clamp(inner / (n * sx * sa), -1.0, 1.0), false};
}

}  // namespace grbmamp
