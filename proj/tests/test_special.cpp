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

#include "grbmamp/special.hpp"

#include <gtest/gtest.h>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

namespace {

using namespace grbmamp::special;
using Big = boost::multiprecision::cpp_bin_float_50;

double big_erfcx(double x) {
  const Big b(x);
  return static_cast<double>(boost::multiprecision::exp(b * b) * boost::multiprecision::erfc(b));
}

TEST(Special, ErfcxMatchesHighPrecision) {
  for (double x : {-5.0, -1.0, -0.1, 0.0, 0.3, 1.0, 4.0, 10.0, 25.9, 26.1, 40.0, 1e3}) {
    const double want = big_erfcx(x);
    EXPECT_NEAR(erfcx(x) / want, 1.0, 4e-15) << "x = " << x;
  }
}

TEST(Special, LogUpperTailDeepTail) {
  for (double x : {-8.0, -1.0, 0.0, 2.0, 10.0, 40.0, 200.0}) {
    const Big b(x);
    const double want = static_cast<double>(
        boost::multiprecision::log(boost::multiprecision::erfc(b / boost::multiprecision::sqrt(Big(2))) / 2));
    EXPECT_NEAR(log_upper_tail(x), want, 1e-13 * std::max(1.0, std::abs(want))) << "x = " << x;
  }
}

TEST(Special, TailQuantileInvertsLogTail) {
  for (double lq : {-0.7, -1.0, -5.0, -50.0, -700.0, -5000.0}) {
    const double t = upper_tail_quantile(lq);
    EXPECT_NEAR(log_upper_tail(t), lq, 1e-12 * std::abs(lq));
  }
  EXPECT_EQ(upper_tail_quantile(-0.1), 0.0);
}

TEST(Special, SoftplusAndSigmoid) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-700.0), 0.0);
  EXPECT_DOUBLE_EQ(softplus(-700.0), std::exp(-700.0));
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_DOUBLE_EQ(sigmoid(-40.0) + sigmoid(40.0), 1.0);
  EXPECT_EQ(log_add_exp(-kInf, 3.0), 3.0);
}

TEST(Special, GaussLegendreIntegratesPolynomialsExactly) {
  const auto& gl = gauss_legendre64();
  double w_sum = 0.0;
  for (int i = 0; i < GaussLegendre64::kSize; ++i) w_sum += gl.weights[i];
  EXPECT_NEAR(w_sum, 2.0, 1e-14);
  for (int p = 0; p <= 126; p += 6) {
    double s = 0.0;
    for (int i = 0; i < GaussLegendre64::kSize; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], p);
    EXPECT_NEAR(s, 2.0 / (p + 1), 1e-14) << "degree " << p;
  }
}

TEST(Special, UpperSegmentMatchesDirectFormulas) {
  // Moderate range where the textbook expressions are accurate.
  for (auto [a, b] : {std::pair{0.0, 1.0}, {0.5, 3.0}, {1.0, kInf}, {3.5, 4.0}, {5.0, kInf}}) {
    const double qa = 0.5 * std::erfc(a / kSqrt2), qb = b == kInf ? 0.0 : 0.5 * std::erfc(b / kSqrt2);
    const double pa = std::exp(-0.5 * a * a) / std::sqrt(2 * M_PI);
    const double pb = b == kInf ? 0.0 : std::exp(-0.5 * b * b) / std::sqrt(2 * M_PI);
    const double mass = qa - qb;
    const double mean = (pa - pb) / mass;
    const double second = 1.0 + (a * pa - (b == kInf ? 0.0 : b * pb)) / mass;
    const auto seg = upper_segment(a, b);
    EXPECT_NEAR(seg.log_scaled_mass, std::log(mass / pa), 1e-11);
    EXPECT_NEAR(seg.offset, mean - a, 1e-10);
    EXPECT_NEAR(seg.var, second - mean * mean, 1e-9);
  }
}

}  // namespace
