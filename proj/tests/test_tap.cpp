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

#include "grbmamp/tap.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "grbmamp/rng.hpp"
#include "oracles.hpp"

namespace {

using namespace grbmamp;

Eigen::MatrixXd random_couplings(Eigen::Index n, Eigen::Index h, Rng& rng) {
  NormalSampler normal;
  Eigen::MatrixXd w(n, h);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = normal(rng);
  return w;
}

Grbm truncated_model(const Eigen::MatrixXd& w, Rng& rng) {
  std::vector<Prior> vis, hid;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    vis.push_back(TruncGaussBernoulli{0.2 + 0.6 * uniform01(rng), uniform01(rng), 0.05 + 0.3 * uniform01(rng), 0.0, 1.0});
  }
  for (Eigen::Index mu = 0; mu < w.cols(); ++mu) hid.push_back(Bernoulli{-1.0 + 2.0 * uniform01(rng)});
  return Grbm(w, vis, hid);
}

TEST(Tap, DecoupledModel) {
  std::vector<Prior> vis(5, TruncGaussBernoulli{0.3, 0.5, 0.2, 0.0, 1.0});
  const Grbm model(Eigen::MatrixXd::Zero(5, 3), vis, std::vector<Prior>(3, Bernoulli{0.7}));
  const Eigen::VectorXd A = Eigen::VectorXd::LinSpaced(5, 0.0, 10.0);
  const Eigen::VectorXd B = Eigen::VectorXd::LinSpaced(5, -2.0, 6.0);
  const auto r = infer(model, A, B, std::nullopt, {});
  EXPECT_TRUE(r.converged);
  // The first sweep is not eligible for convergence; the second confirms it.
  EXPECT_EQ(r.sweeps, 2);
  for (int i = 0; i < 5; ++i) {
    const auto m = posterior_moments(vis[i], {A[i], B[i]});
    EXPECT_EQ(r.state.visible_a[i], m.mean);
    EXPECT_EQ(r.state.visible_c[i], m.var);
  }
  for (int mu = 0; mu < 3; ++mu) EXPECT_DOUBLE_EQ(r.state.hidden_a[mu], special::sigmoid(0.7));
}

TEST(Tap, MarginalsOfDecoupledBernoulliHidden) {
  const Grbm model(Eigen::MatrixXd::Zero(2, 2), std::vector<Prior>(2, TruncGaussBernoulli{0.5, 0.5, 0.1, 0.0, 1.0}),
                   std::vector<Prior>(2, Bernoulli{0.0}));
  const auto r = marginals(model);
  EXPECT_DOUBLE_EQ(r.state.hidden_a[0], 0.5);
  EXPECT_DOUBLE_EQ(r.state.hidden_a[1], 0.5);
}

TEST(Tap, PureSpikeVisible) {
  Rng rng(1);
  const Grbm model(random_couplings(4, 3, rng), std::vector<Prior>(4, TruncGaussBernoulli{0.0, 0.5, 0.1, 0.0, 1.0}),
                   std::vector<Prior>(3, Bernoulli{0.1}));
  const auto r = marginals(model);
  EXPECT_TRUE(r.state.visible_a.isZero(0.0));
}

TEST(Tap, TwoBernoulliUnitsMatchEnumeration) {
  Eigen::MatrixXd w(1, 1);
  w(0, 0) = 0.1;
  const Grbm model(w, {Bernoulli{0.0}}, {Bernoulli{0.0}});
  const auto r = marginals(model);
  // Four joint states with weights 1, 1, 1, e^w.
  const double z = 3.0 + std::exp(0.1);
  const double exact = (1.0 + std::exp(0.1)) / z;
  EXPECT_NEAR(r.state.visible_a[0], exact, 1e-3);
  EXPECT_NEAR(r.state.hidden_a[0], exact, 1e-3);
  const auto o = oracle::enumerate(model, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(o.visible_a[0], exact, 1e-12);
}

TEST(Tap, TruncatedModelMatchesEnumeration) {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd w = random_couplings(8, 4, rng);
    w *= 0.05 / w.cwiseAbs().maxCoeff();
    const Grbm model = truncated_model(w, rng);
    Eigen::VectorXd A(8), B(8);
    for (int i = 0; i < 8; ++i) {
      A[i] = 5.0 * uniform01(rng);
      B[i] = -2.0 + 4.0 * uniform01(rng);
    }
    const auto r = infer(model, A, B, std::nullopt, {});
    ASSERT_TRUE(r.converged);
    const auto o = oracle::enumerate(model, A, B);
    EXPECT_LT((r.state.visible_a - o.visible_a).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_LT((r.state.hidden_a - o.hidden_a).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Tap, SignStructureAndBoundsAtEverySweep) {
  Rng rng(3);
  const Grbm model = truncated_model(0.8 * random_couplings(10, 5, rng), rng);
  const Eigen::VectorXd A = Eigen::VectorXd::Constant(10, 2.0);
  const Eigen::VectorXd B = Eigen::VectorXd::LinSpaced(10, -3.0, 3.0);
  std::optional<TapState> state;
  for (int sweep = 0; sweep < 30; ++sweep) {
    TapOptions one;
    one.max_sweeps = 1;
    const auto r = infer(model, A, B, state, one);
    state = r.state;
    ASSERT_TRUE((state->hidden_A.array() <= 0.0).all());
    ASSERT_TRUE((state->visible_A.array() <= 0.0).all());
    ASSERT_TRUE((state->visible_a.array() >= 0.0).all());
    ASSERT_TRUE((state->visible_a.array() <= 1.0).all());
    ASSERT_TRUE((state->visible_c.array() >= 0.0).all());
    ASSERT_TRUE((state->hidden_c.array() >= 0.0).all());
  }
}

// Max marginal error against enumeration for W = s W0.
double scaled_error(const Eigen::MatrixXd& w0, const Grbm& base, double s, const Eigen::VectorXd& A,
                    const Eigen::VectorXd& B) {
  const Grbm model(s * w0, base.visible_priors(), base.hidden_priors());
  TapOptions opt;
  opt.tol = 1e-13;
  opt.max_sweeps = 500;
  const auto r = infer(model, A, B, std::nullopt, opt);
  const auto o = oracle::enumerate(model, A, B);
  return std::max((r.state.visible_a - o.visible_a).cwiseAbs().maxCoeff(),
                  (r.state.hidden_a - o.hidden_a).cwiseAbs().maxCoeff());
}

TEST(Tap, ErrorDecaysCubically) {
  Rng rng(4);
  for (int rep = 0; rep < 3; ++rep) {
    const Eigen::MatrixXd w0 = random_couplings(6, 3, rng);
    const Grbm base = truncated_model(w0, rng);
    const Eigen::VectorXd A = Eigen::VectorXd::Constant(6, 1.0);
    const Eigen::VectorXd B = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
    const double e1 = scaled_error(w0, base, 0.2, A, B);
    const double e2 = scaled_error(w0, base, 0.1, A, B);
    const double e3 = scaled_error(w0, base, 0.05, A, B);
    EXPECT_GE(e1 / e2, 4.0) << e1 << " " << e2;
    EXPECT_GE(e2 / e3, 4.0) << e2 << " " << e3;
  }
}

TEST(Tap, RestartFromFixedPoint) {
  Rng rng(5);
  const Grbm model = truncated_model(0.3 * random_couplings(8, 4, rng), rng);
  const Eigen::VectorXd A = Eigen::VectorXd::Constant(8, 3.0);
  const Eigen::VectorXd B = Eigen::VectorXd::LinSpaced(8, -1.0, 2.0);
  const auto first = infer(model, A, B, std::nullopt, {});
  ASSERT_TRUE(first.converged);
  const auto again = infer(model, A, B, first.state, {});
  EXPECT_TRUE(again.converged);
  EXPECT_LE(again.sweeps, 2);
}

TEST(Tap, MonotoneResponse) {
  Rng rng(6);
  const Grbm model = truncated_model(0.3 * random_couplings(8, 4, rng), rng);
  const Eigen::VectorXd A = Eigen::VectorXd::Constant(8, 2.0);
  Eigen::VectorXd B = Eigen::VectorXd::Zero(8);
  double last = -1.0;
  for (double b = -3.0; b <= 3.0; b += 0.5) {
    B[2] = b;
    const auto r = infer(model, A, B, std::nullopt, {});
    EXPECT_GT(r.state.visible_a[2], last);
    last = r.state.visible_a[2];
  }
}

TEST(Tap, SelfConsistentOnsagerAgreesAtWeakCoupling) {
  Rng rng(7);
  Eigen::MatrixXd w = random_couplings(8, 4, rng);
  w *= 0.05 / w.cwiseAbs().maxCoeff();
  const Grbm model = truncated_model(w, rng);
  const Eigen::VectorXd A = Eigen::VectorXd::Constant(8, 1.0);
  const Eigen::VectorXd B = Eigen::VectorXd::LinSpaced(8, -1.0, 1.0);
  TapOptions alt;
  alt.onsager = OnsagerTiming::kSelfConsistent;
  const auto r1 = infer(model, A, B, std::nullopt, {});
  const auto r2 = infer(model, A, B, std::nullopt, alt);
  ASSERT_TRUE(r2.converged);
  // Both readings share the fixed point.
  EXPECT_LT((r1.state.visible_a - r2.state.visible_a).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Tap, InnerDampingKeepsFixedPoint) {
  Rng rng(8);
  const Grbm model = truncated_model(0.3 * random_couplings(8, 4, rng), rng);
  const Eigen::VectorXd A = Eigen::VectorXd::Constant(8, 2.0);
  const Eigen::VectorXd B = Eigen::VectorXd::LinSpaced(8, -1.0, 1.0);
  TapOptions damped;
  damped.damping = 0.5;
  damped.max_sweeps = 1000;
  const auto r1 = infer(model, A, B, std::nullopt, {});
  const auto r2 = infer(model, A, B, std::nullopt, damped);
  ASSERT_TRUE(r2.converged);
  EXPECT_LT((r1.state.visible_a - r2.state.visible_a).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Tap, Errors) {
  const Grbm bad(Eigen::MatrixXd::Constant(1, 1, 5.0), {GaussBernoulli{0.5, 0.0, 1.0}}, {Bernoulli{-6.25}});
  EXPECT_THROW(marginals(bad), InvalidArgument);
  const Grbm ok(Eigen::MatrixXd::Zero(2, 1), std::vector<Prior>(2, Bernoulli{0.0}), {Bernoulli{0.0}});
  EXPECT_THROW(infer(ok, Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d::Zero(), std::nullopt, {}), InvalidArgument);
  EXPECT_THROW(infer(ok, Eigen::Vector2d::Zero(), Eigen::Vector2d(NAN, 0.0), std::nullopt, {}), InvalidArgument);
  EXPECT_THROW(infer(ok, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), std::nullopt, {}), InvalidArgument);
}

}  // namespace
