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

// Approximate message passing for y = F x + w, w ~ N(0, noise_var I).
//
// One outer iteration:
//
//   V_m     = sum_i F_mi^2 c_i
//   omega_m = sum_i F_mi a_i - V_m (y_m - omega_m') / (noise_var + V_m')
//   A_i     = sum_m F_mi^2 / (noise_var + V_m)
//   B_i     = A_i a_i + sum_m F_mi (y_m - omega_m) / (noise_var + V_m)
//   (a, c)  <- damped moments of the prior tilted by (A, B)
//
// where primed quantities come from the previous iteration. The prior is
// either factorized (one scalar prior per coefficient) or a GRBM evaluated
// by the TAP inner solver.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "grbmamp/errors.hpp"
#include "grbmamp/grbm.hpp"
#include "grbmamp/prior.hpp"
#include "grbmamp/tap.hpp"

namespace grbmamp {

struct CsInstance {
  Eigen::MatrixXd F;  // M x N
  Eigen::VectorXd y;  // M
  double noise_var = 1e-8;
  std::optional<Eigen::VectorXd> truth;  // N, when known

  Eigen::Index num_measurements() const { return F.rows(); }
  Eigen::Index num_coefficients() const { return F.cols(); }

  void validate() const {
    if (F.rows() < 1 || F.cols() < 1) throw InvalidArgument("instance: empty sensing matrix");
    if (y.size() != F.rows()) throw InvalidArgument("instance: y length does not match F rows");
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw InvalidArgument("instance: noise variance must be positive");
    if (truth && truth->size() != F.cols()) throw InvalidArgument("instance: truth length does not match F columns");
    if (!F.allFinite() || !y.allFinite()) throw InvalidArgument("instance: non-finite entries");
  }
};

struct AmpState {
  Eigen::VectorXd a;      // posterior means, N
  Eigen::VectorXd c;      // posterior variances, N
  Eigen::VectorXd V;      // channel variances, M
  Eigen::VectorXd omega;  // Onsager-corrected predictions, M
  Eigen::VectorXd A;      // effective precisions, N
  Eigen::VectorXd B;      // effective fields, N
};

// One prior per coefficient; a single entry is broadcast to all of them.
struct FactorizedPrior {
  std::vector<Prior> priors;
};

struct GrbmPrior {
  std::shared_ptr<const Grbm> model;
  double inner_damping = 0.0;
  OnsagerTiming onsager = OnsagerTiming::kPreviousSweep;
};

using PriorModel = std::variant<FactorizedPrior, GrbmPrior>;

struct SolverOptions {
  double damping = 0.5;     // weight kept from the previous (a, c)
  double tol = 1e-7;        // on mean |delta a|
  int max_iterations = 250;
  double inner_tol = 1e-9;  // GRBM mode only
  int max_inner = 100;
  PriorModel prior;
};

struct Diagnostics {
  int iterations = 0;
  bool converged = false;
  std::vector<double> mean_delta;    // per outer iteration
  std::vector<int> inner_sweeps;     // per outer iteration (0 in factorized mode)
  int inner_nonconverged = 0;
  int total_inner_sweeps() const {
    int t = 0;
    for (int s : inner_sweeps) t += s;
    return t;
  }
};

struct Reconstruction {
  Eigen::VectorXd a;
  Eigen::VectorXd c;
  Diagnostics diagnostics;
};

struct PriorUpdateStatus {
  int inner_sweeps = 0;
  bool inner_converged = true;
};

namespace detail {

inline const Prior& factor_at(const FactorizedPrior& f, Eigen::Index i) {
  return f.priors.size() == 1 ? f.priors.front() : f.priors[static_cast<std::size_t>(i)];
}

inline void check_options(const SolverOptions& o, Eigen::Index n) {
  if (!(o.damping >= 0.0 && o.damping < 1.0)) throw InvalidArgument("solver: damping must lie in [0, 1)");
  if (!(o.tol > 0.0) || !(o.inner_tol > 0.0)) throw InvalidArgument("solver: tolerances must be positive");
  if (o.max_iterations < 1 || o.max_inner < 1) throw InvalidArgument("solver: iteration caps must be >= 1");
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FactorizedPrior>) {
          if (p.priors.size() != 1 && static_cast<Eigen::Index>(p.priors.size()) != n) {
            throw InvalidArgument("solver: need one prior or one per coefficient");
          }
          for (const auto& q : p.priors) validate(q);
        } else {
          if (!p.model) throw InvalidArgument("solver: GRBM prior without a model");
          if (p.model->num_visible() != n) throw InvalidArgument("solver: GRBM visible layer does not match N");
        }
      },
      o.prior);
}

}  // namespace detail

// a, c from the prior at zero field; omega = y so the first Onsager
// correction vanishes; V = 1.
inline AmpState initial_state(const CsInstance& instance, const SolverOptions& options) {
  const auto n = instance.num_coefficients();
  const auto m = instance.num_measurements();
  AmpState s;
  s.a.resize(n);
  s.c.resize(n);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FactorizedPrior>) {
          for (Eigen::Index i = 0; i < n; ++i) {
            const auto mom = posterior_moments(detail::factor_at(p, i), {0.0, 0.0});
            s.a[i] = mom.mean;
            s.c[i] = mom.var;
          }
        } else {
          TapOptions tap{options.inner_tol, options.max_inner, p.inner_damping, p.onsager};
          const auto marg = marginals(*p.model, tap);
          s.a = marg.state.visible_a;
          s.c = marg.state.visible_c;
        }
      },
      options.prior);
  s.V = Eigen::VectorXd::Ones(m);
  s.omega = instance.y;
  s.A = Eigen::VectorXd::Zero(n);
  s.B = Eigen::VectorXd::Zero(n);
  return s;
}

// Updates (V, omega). `f_sq` is F with squared entries.
inline void channel_update(AmpState& s, const CsInstance& instance, const Eigen::MatrixXd& f_sq,
                           int iteration = 0) {
  const double delta = instance.noise_var;
  Eigen::VectorXd v_new = f_sq * s.c;
  Eigen::VectorXd correction =
      v_new.array() * (instance.y - s.omega).array() / (delta + s.V.array());
  s.omega = instance.F * s.a - correction;
  s.V = std::move(v_new);
  if (!s.V.allFinite() || !s.omega.allFinite()) throw NonFiniteError("amp: channel update", iteration);
}

// Updates (A, B) from the current (V, omega).
inline void field_update(AmpState& s, const CsInstance& instance, const Eigen::MatrixXd& f_sq,
                         int iteration = 0) {
  const Eigen::ArrayXd inv = 1.0 / (instance.noise_var + s.V.array());
  const Eigen::VectorXd residual = ((instance.y - s.omega).array() * inv).matrix();
  s.A = f_sq.transpose() * inv.matrix();
  s.B = s.A.cwiseProduct(s.a) + instance.F.transpose() * residual;
  if (!s.A.allFinite() || !s.B.allFinite()) throw NonFiniteError("amp: field update", iteration);
}

// Replaces (a, c) by the damped moments of the prior under (A, B).
inline PriorUpdateStatus prior_update(AmpState& s, const SolverOptions& options) {
  const auto n = s.a.size();
  Eigen::VectorXd a_new(n);
  Eigen::VectorXd c_new(n);
  PriorUpdateStatus status;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FactorizedPrior>) {
          for (Eigen::Index i = 0; i < n; ++i) {
            const auto m = posterior_moments(detail::factor_at(p, i), {s.A[i], s.B[i]});
            a_new[i] = m.mean;
            c_new[i] = m.var;
          }
        } else {
          TapOptions tap{options.inner_tol, options.max_inner, p.inner_damping, p.onsager};
          const auto r = infer(*p.model, s.A, s.B, std::nullopt, tap);
          a_new = r.state.visible_a;
          c_new = r.state.visible_c;
          status.inner_sweeps = r.sweeps;
          status.inner_converged = r.converged;
        }
      },
      options.prior);
  const double g = options.damping;
  s.a = g * s.a + (1.0 - g) * a_new;
  s.c = g * s.c + (1.0 - g) * c_new;
  return status;
}

// Iterates until mean |delta a| < tol or max_iterations. Non-convergence
// is reported in the diagnostics, not thrown.
inline Reconstruction reconstruct(const CsInstance& instance, const SolverOptions& options) {
  instance.validate();
  detail::check_options(options, instance.num_coefficients());
  const Eigen::MatrixXd f_sq = instance.F.cwiseAbs2();
  AmpState s = initial_state(instance, options);
  Reconstruction out;
  auto& d = out.diagnostics;
  for (int t = 1; t <= options.max_iterations; ++t) {
    const Eigen::VectorXd a_prev = s.a;
    channel_update(s, instance, f_sq, t);
    field_update(s, instance, f_sq, t);
    PriorUpdateStatus status;
    try {
      status = prior_update(s, options);
    } catch (const NumericalOverflow& e) {
      throw NonFiniteError(std::string("amp: prior update: ") + e.what(), t);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError(std::string("amp: inner inference: ") + e.what(), t);
    }
    if (!s.a.allFinite() || !s.c.allFinite()) throw NonFiniteError("amp: prior update", t);
    const double change = (s.a - a_prev).cwiseAbs().mean();
    d.iterations = t;
    d.mean_delta.push_back(change);
    d.inner_sweeps.push_back(status.inner_sweeps);
    if (!status.inner_converged) ++d.inner_nonconverged;
    if (change < options.tol) {
      d.converged = true;
      break;
    }
  }
  out.a = std::move(s.a);
  out.c = std::move(s.c);
  return out;
}

}  // namespace grbmamp
