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

// Reference computations that share no numerics with the library:
// adaptive Gauss-Kronrod quadrature of the defining integrals, and exact
// enumeration over hidden configurations of small GRBMs.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "grbmamp/grbm.hpp"
#include "grbmamp/prior.hpp"

namespace oracle {

struct Stats {
  double log_z = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

// exp(-P x^2 / 2 + m x + k) integrated against (x - shift)^power over
// [lo, hi], returned relative to exp(gmax) where gmax is the maximum of the
// exponent on the interval. Only the region within 60 of the maximum is
// integrated; the rest is below double precision.
struct QuadResult {
  double value;
  double gmax;
};

inline double quad_exponent(double P, double m, double x) { return (m - 0.5 * P * x) * x; }

inline double exponent_max(double P, double m, double lo, double hi) {
  double g = std::max(quad_exponent(P, m, lo), quad_exponent(P, m, hi));
  if (P > 0) {
    const double v = m / P;
    if (v > lo && v < hi) g = std::max(g, quad_exponent(P, m, v));
  }
  return g;
}

inline double integrate(double P, double m, double lo, double hi, double gmax, int power, double shift) {
  using boost::math::quadrature::gauss_kronrod;
  const double floor = gmax - 60.0;
  std::vector<double> cuts{lo, hi};
  auto add = [&](double x) {
    if (x > lo && x < hi) cuts.push_back(x);
  };
  if (P != 0.0) {
    add(m / P);
    const double disc = m * m - 2.0 * P * floor;
    if (disc >= 0.0) {
      add((m + std::sqrt(disc)) / P);
      add((m - std::sqrt(disc)) / P);
    }
  } else if (m != 0.0) {
    add(floor / m);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    if (std::max({quad_exponent(P, m, a), quad_exponent(P, m, b), quad_exponent(P, m, mid)}) < floor) continue;
    auto f = [&](double x) {
      const double e = std::exp(quad_exponent(P, m, x) - gmax);
      double d = 1.0;
      for (int p = 0; p < power; ++p) d *= (x - shift);
      return d * e;
    };
    total += gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
  }
  return total;
}

// Tilted spike-and-slab statistics; the slab is N(mean, var) restricted to
// [lo, hi] (infinite bounds for the untruncated variant).
inline Stats spike_slab(double rho, double mu, double var, double lo, double hi, double A, double B) {
  const bool bounded = std::isfinite(lo) && std::isfinite(hi);
  const double P = A + 1.0 / var;
  const double m = B + mu / var;
  double tlo = lo, thi = hi;
  if (!bounded) {
    const double half = std::sqrt(2.0 * 70.0 / P);
    tlo = m / P - half;
    thi = m / P + half;
  }
  const double gmax = exponent_max(P, m, tlo, thi);
  const double i0 = integrate(P, m, tlo, thi, gmax, 0, 0.0);
  const double mean = integrate(P, m, tlo, thi, gmax, 1, 0.0) / i0;
  const double var_s = integrate(P, m, tlo, thi, gmax, 2, mean) / i0;

  // Slab normalizer, the same integral with no tilt.
  const double P0 = 1.0 / var, m0 = mu / var;
  double nlo = lo, nhi = hi;
  if (!bounded) {
    nlo = mu - std::sqrt(2.0 * 70.0 * var);
    nhi = mu + std::sqrt(2.0 * 70.0 * var);
  }
  const double g0 = exponent_max(P0, m0, nlo, nhi);
  const double log_norm = std::log(integrate(P0, m0, nlo, nhi, g0, 0, 0.0)) + g0;
  const double log_slab = std::log(rho) + gmax + std::log(i0) - log_norm;
  Stats s;
  if (rho < 1.0) {
    const double log_spike = std::log1p(-rho);
    const double hi_l = std::max(log_spike, log_slab);
    s.log_z = hi_l + std::log(std::exp(log_spike - hi_l) + std::exp(log_slab - hi_l));
  } else {
    s.log_z = log_slab;
  }
  const double w = std::exp(log_slab - s.log_z);
  s.mean = w * mean;
  s.var = w * var_s + w * (1.0 - w) * mean * mean;
  return s;
}

inline Stats stats(const grbmamp::Prior& prior, double A, double B) {
  using namespace grbmamp;
  if (const auto* p = std::get_if<Bernoulli>(&prior)) {
    // Two states, weights 1 and exp(bias - A/2 + B).
    const long double t = p->bias - 0.5L * A + B;
    const long double z = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    const long double q = std::exp(t - z);
    return {static_cast<double>(z), static_cast<double>(q), static_cast<double>(q * (1 - q))};
  }
  if (const auto* p = std::get_if<GaussBernoulli>(&prior)) {
    if (p->rho == 0.0) return {0.0, 0.0, 0.0};
    const double inf = std::numeric_limits<double>::infinity();
    return spike_slab(p->rho, p->mean, p->var, -inf, inf, A, B);
  }
  const auto& p = std::get<TruncGaussBernoulli>(prior);
  if (p.rho == 0.0) return {0.0, 0.0, 0.0};
  return spike_slab(p.rho, p.mean, p.var, p.lo, p.hi, A, B);
}

struct Marginals {
  Eigen::VectorXd visible_a, visible_c, hidden_a, hidden_c;
};

// Exact marginals of a GRBM with Bernoulli hidden units under external
// visible fields, by summing over all 2^H hidden states. Given h the
// visible units are independent, each tilted by (ext_A, ext_B + W h).
inline Marginals enumerate(const grbmamp::Grbm& model, const Eigen::VectorXd& ext_A, const Eigen::VectorXd& ext_B) {
  using namespace grbmamp;
  const auto n = model.num_visible();
  const auto h = model.num_hidden();
  const auto states = std::size_t{1} << h;
  std::vector<double> log_w(states);
  std::vector<Eigen::VectorXd> mean(states), second(states);
  Eigen::VectorXd hv(h);
  for (std::size_t s = 0; s < states; ++s) {
    double lw = 0.0;
    for (Eigen::Index mu = 0; mu < h; ++mu) {
      hv[mu] = (s >> mu) & 1u ? 1.0 : 0.0;
      lw += hv[mu] * std::get<Bernoulli>(model.hidden_priors()[mu]).bias;
    }
    const Eigen::VectorXd field = ext_B + model.couplings() * hv;
    mean[s].resize(n);
    second[s].resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto st = stats(model.visible_priors()[i], ext_A[i], field[i]);
      lw += st.log_z;
      mean[s][i] = st.mean;
      second[s][i] = st.var + st.mean * st.mean;
    }
    log_w[s] = lw;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double z = 0.0;
  for (double& lw : log_w) z += (lw = std::exp(lw - top));
  Marginals out;
  out.visible_a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd vis_sq = Eigen::VectorXd::Zero(n);
  out.hidden_a = Eigen::VectorXd::Zero(h);
  for (std::size_t s = 0; s < states; ++s) {
    const double p = log_w[s] / z;
    out.visible_a += p * mean[s];
    vis_sq += p * second[s];
    for (Eigen::Index mu = 0; mu < h; ++mu) {
      if ((s >> mu) & 1u) out.hidden_a[mu] += p;
    }
  }
  out.visible_c = vis_sq - out.visible_a.cwiseAbs2();
  out.hidden_c = out.hidden_a.array() * (1.0 - out.hidden_a.array());
  return out;
}

}  // namespace oracle
