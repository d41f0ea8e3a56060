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

// TAP fixed-point inference on a generalized RBM under external
// per-visible fields (A_ext, B_ext). The iteration works on node beliefs
// only. One sweep updates, in order:
//
//   visible fields   Av = -W^2 ch,          Bv = av * Av + W ah
//   visible moments  (av, cv) = f_v(A_ext + Av, B_ext + Bv)
//   hidden fields    Ah = -(W^2)^T cv,      Bh = ah * Ah + W^T av
//   hidden moments   (ah, ch) = f_h(Ah, Bh)
//
// where f are the tilted moments of each unit's prior. The products av*Av
// and ah*Ah are the Onsager reaction terms.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "grbmamp/errors.hpp"
#include "grbmamp/grbm.hpp"
#include "grbmamp/prior.hpp"

namespace grbmamp {

struct TapState {
  Eigen::VectorXd hidden_A;
  Eigen::VectorXd hidden_B;
  Eigen::VectorXd hidden_a;
  Eigen::VectorXd hidden_c;
  Eigen::VectorXd visible_A;
  Eigen::VectorXd visible_B;
  Eigen::VectorXd visible_a;
  Eigen::VectorXd visible_c;
};

// Which mean enters the Onsager term a * A.
enum class OnsagerTiming {
  // The unit's mean from the previous sweep (the value stored in the state).
  kPreviousSweep,
  // Solve a = f(A, a * A + rest) per unit, so the reaction term uses the
  // mean produced in the current sweep.
  kSelfConsistent,
};

struct TapOptions {
  double tol = 1e-9;      // on max |delta av| between sweeps
  int max_sweeps = 100;
  double damping = 0.0;   // inner blend of old and new moments, in [0, 1)
  OnsagerTiming onsager = OnsagerTiming::kPreviousSweep;
};

struct TapResult {
  TapState state;
  bool converged = false;
  int sweeps = 0;
};

namespace detail {

inline void check_external(const Grbm& model, const Eigen::VectorXd& ext_A,
                           const Eigen::VectorXd& ext_B) {
  if (ext_A.size() != model.num_visible() || ext_B.size() != model.num_visible()) {
    throw InvalidArgument("tap: external field length does not match the visible layer");
  }
  if (!ext_A.allFinite() || !ext_B.allFinite()) throw InvalidArgument("tap: external fields must be finite");
  if ((ext_A.array() < 0.0).any()) throw InvalidArgument("tap: external precision must be non-negative");
}

inline Moments unit_moments(const Prior& prior, TiltedField field) {
  try {
    return posterior_moments(prior, field);
  } catch (const NonNormalizable& e) {
    throw InvalidArgument(std::string("tap: untruncated visible prior became non-normalizable; "
                                      "use a truncated visible prior (") +
                          e.what() + ")");
  }
}

// Moments of one unit given its precision and the field excluding the
// Onsager term; `a_prev` is the mean from the previous sweep.
inline Moments onsager_unit(const Prior& prior, double precision, double field_rest,
                            double reaction, double a_prev, OnsagerTiming timing) {
  if (timing == OnsagerTiming::kPreviousSweep || reaction == 0.0) {
    return unit_moments(prior, {precision, field_rest + a_prev * reaction});
  }
  double a = a_prev;
  Moments m{};
  for (int it = 0; it < 50; ++it) {
    m = unit_moments(prior, {precision, field_rest + a * reaction});
    const double step = std::abs(m.mean - a);
    a = m.mean;
    if (step < 1e-13) break;
  }
  return m;
}

}  // namespace detail

// Starting point used when no previous state exists: visible moments from
// the external field alone, hidden moments zero.
inline TapState initial_tap_state(const Grbm& model, const Eigen::VectorXd& ext_A,
                                  const Eigen::VectorXd& ext_B) {
  const auto n = model.num_visible();
  const auto h = model.num_hidden();
  TapState s;
  s.visible_A = Eigen::VectorXd::Zero(n);
  s.visible_B = Eigen::VectorXd::Zero(n);
  s.visible_a.resize(n);
  s.visible_c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto m = detail::unit_moments(model.visible_priors()[i], {ext_A[i], ext_B[i]});
    s.visible_a[i] = m.mean;
    s.visible_c[i] = m.var;
  }
  s.hidden_A = Eigen::VectorXd::Zero(h);
  s.hidden_B = Eigen::VectorXd::Zero(h);
  s.hidden_a = Eigen::VectorXd::Zero(h);
  s.hidden_c = Eigen::VectorXd::Zero(h);
  return s;
}

// Runs sweeps until max |delta av| < tol or max_sweeps. Starting from the
// default state, the first sweep cannot be judged converged: its visible
// update sees the placeholder hidden moments, not computed ones.
inline TapResult infer(const Grbm& model, const Eigen::VectorXd& ext_A, const Eigen::VectorXd& ext_B,
                       const std::optional<TapState>& init, const TapOptions& options) {
  detail::check_external(model, ext_A, ext_B);
  if (options.max_sweeps < 1 || !(options.tol > 0.0)) throw InvalidArgument("tap: bad iteration controls");
  if (!(options.damping >= 0.0 && options.damping < 1.0)) throw InvalidArgument("tap: damping must lie in [0, 1)");

  TapResult result;
  TapState& s = result.state;
  bool hidden_ready = init.has_value();
  s = init ? *init : initial_tap_state(model, ext_A, ext_B);
  if (s.visible_a.size() != model.num_visible() || s.hidden_a.size() != model.num_hidden()) {
    throw InvalidArgument("tap: initial state does not match the model");
  }

  const auto& w = model.couplings();
  const auto& w_sq = model.squared_couplings();
  const auto& vis = model.visible_priors();
  const auto& hid = model.hidden_priors();
  const double keep = options.damping;

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    result.sweeps = sweep;

    s.visible_A.noalias() = -(w_sq * s.hidden_c);
    Eigen::VectorXd field_rest = w * s.hidden_a;
    double max_delta = 0.0;
    for (Eigen::Index i = 0; i < model.num_visible(); ++i) {
      const double a_prev = s.visible_a[i];
      const auto m = detail::onsager_unit(vis[i], ext_A[i] + s.visible_A[i],
                                          ext_B[i] + field_rest[i], s.visible_A[i], a_prev,
                                          options.onsager);
      const double a_reaction = options.onsager == OnsagerTiming::kPreviousSweep ? a_prev : m.mean;
      s.visible_B[i] = a_reaction * s.visible_A[i] + field_rest[i];
      const double a_new = keep * a_prev + (1.0 - keep) * m.mean;
      s.visible_c[i] = keep * s.visible_c[i] + (1.0 - keep) * m.var;
      max_delta = std::max(max_delta, std::abs(a_new - a_prev));
      s.visible_a[i] = a_new;
    }

    s.hidden_A.noalias() = -(w_sq.transpose() * s.visible_c);
    Eigen::VectorXd hidden_rest = w.transpose() * s.visible_a;
    for (Eigen::Index mu = 0; mu < model.num_hidden(); ++mu) {
      const double a_prev = s.hidden_a[mu];
      const auto m = detail::onsager_unit(hid[mu], s.hidden_A[mu], hidden_rest[mu], s.hidden_A[mu],
                                          a_prev, options.onsager);
      const double a_reaction = options.onsager == OnsagerTiming::kPreviousSweep ? a_prev : m.mean;
      s.hidden_B[mu] = a_reaction * s.hidden_A[mu] + hidden_rest[mu];
      s.hidden_a[mu] = keep * a_prev + (1.0 - keep) * m.mean;
      s.hidden_c[mu] = keep * s.hidden_c[mu] + (1.0 - keep) * m.var;
    }

    if (!s.visible_a.allFinite() || !s.visible_c.allFinite() || !s.hidden_a.allFinite() ||
        !s.hidden_c.allFinite()) {
      throw NonFiniteError("tap: non-finite moments", sweep);
    }
    if (hidden_ready && max_delta < options.tol) {
      result.converged = true;
      break;
    }
    hidden_ready = true;
  }
  return result;
}

// Model marginals with no external field.
inline TapResult marginals(const Grbm& model, const TapOptions& options = {}) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.num_visible());
  return infer(model, zero, zero, std::nullopt, options);
}

}  // namespace grbmamp
