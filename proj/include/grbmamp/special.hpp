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

// Scalar special functions for Gaussian tails and log-domain arithmetic.
// Everything here is written so that ratios of tiny tail probabilities stay
// accurate: tails are carried as Mills ratios R(x) = Q(x) / phi(x), where
// Q is the standard normal upper tail and phi the standard normal density.

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace grbmamp::special {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2 pi)/2
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kSqrtPiOver2 = 1.25331413731550025121;

// log(exp(a) + exp(b)); either argument may be -inf.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// log(1 + exp(x)).
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Scaled complementary error function exp(x^2) erfc(x).
inline double erfcx(double x) {
  if (x < 0) {
    if (x < -26.6) return kInf;
    const double x2 = x * x;
    const double x2_err = std::fma(x, x, -x2);
    return 2.0 * std::exp(x2) * (1.0 + x2_err) - erfcx(-x);
  }
  if (x < 26.0) {
    // exp(x^2) with the rounding error of x^2 folded back in.
    const double x2 = x * x;
    const double x2_err = std::fma(x, x, -x2);
    return std::exp(x2) * (1.0 + x2_err) * std::erfc(x);
  }
  if (x == kInf) return 0.0;
  // Asymptotic series; at x >= 26 eight terms are exhausted far below eps.
  const double inv = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) * inv;
    sum += term;
  }
  return sum / (x * std::sqrt(std::numbers::pi));
}

// Mills ratio Q(x) / phi(x).
inline double mills_ratio(double x) {
  return kSqrtPiOver2 * erfcx(x / kSqrt2);
}

// log Q(x) for any real x.
inline double log_upper_tail(double x) {
  if (x >= 0) return -0.5 * x * x - kHalfLog2Pi + std::log(mills_ratio(x));
  return std::log1p(-0.5 * std::erfc(-x / kSqrt2));
}

// Continued-fraction tail 2/(x + 3/(x + 4/(x + ...))), evaluated backwards.
// Only used for x > 3, where the depths below converge to full precision.
inline double mills_cf_tail(double x) {
  const int depth = x < 5.0 ? 400 : (x < 10.0 ? 150 : 60);
  double t = 0.0;
  for (int k = depth; k >= 2; --k) t = k / (x + t);
  return t;
}

// Standard normal restricted to [alpha, beta] with 0 <= alpha < beta
// (beta may be +inf). All quantities are relative to the left end so they
// stay accurate arbitrarily far into the tail.
struct UpperSegment {
  double log_scaled_mass;  // log((Q(alpha) - Q(beta)) / phi(alpha))
  double offset;           // E[t] - alpha
  double var;              // Var[t]
};

inline UpperSegment upper_segment(double alpha, double beta) {
  const double r_alpha = mills_ratio(alpha);
  // phi(beta) / phi(alpha)
  const double e_phi = beta == kInf ? 0.0 : std::exp(-0.5 * (beta - alpha) * (beta + alpha));
  const double r_beta = e_phi == 0.0 ? 0.0 : mills_ratio(beta);
  // Q(beta) / Q(alpha)
  const double tail_ratio = e_phi * r_beta / r_alpha;

  UpperSegment out{};
  out.log_scaled_mass = std::log(r_alpha) + std::log1p(-tail_ratio);

  const double p_alpha = 1.0 / (r_alpha * (1.0 - tail_ratio));
  const double p_beta = e_phi * p_alpha;
  const double beta_term = e_phi == 0.0 ? 0.0 : (beta - alpha) * p_beta;

  if (alpha > 3.0) {
    const double e = mills_cf_tail(alpha);
    const double d = 1.0 / (alpha + e);  // 1/R(alpha) - alpha, exactly
    if (e_phi < 1e-20) {
      out.offset = d;
      out.var = d * (e - d);
    } else {
      out.offset = (d * (1.0 - e_phi) + alpha * e_phi * (r_beta / r_alpha - 1.0)) /
                   (1.0 - tail_ratio);
      const double lambda = alpha + out.offset;
      out.var = 1.0 - lambda * out.offset - beta_term;
    }
  } else {
    const double lambda = p_alpha - p_beta;
    out.offset = lambda - alpha;
    out.var = 1.0 - lambda * out.offset - beta_term;
  }
  if (out.var < 0.0) out.var = 0.0;
  return out;
}

// log(Phi(beta) - Phi(alpha)) for alpha < beta; infinite ends allowed.
inline double log_gauss_interval(double alpha, double beta) {
  if (alpha >= 0) {
    return -0.5 * alpha * alpha - kHalfLog2Pi + upper_segment(alpha, beta).log_scaled_mass;
  }
  if (beta <= 0) {
    return -0.5 * beta * beta - kHalfLog2Pi + upper_segment(-beta, -alpha).log_scaled_mass;
  }
  return std::log(0.5 * (std::erf(beta / kSqrt2) - std::erf(alpha / kSqrt2)));
}

// t >= 0 with log Q(t) = log_q; requires log_q <= log(1/2).
// Newton on the concave log-tail, started to the right of the root so the
// iterates decrease monotonically onto it.
inline double upper_tail_quantile(double log_q) {
  constexpr double kLogHalf = -0.69314718055994530942;
  if (log_q >= kLogHalf) return 0.0;
  double t = std::sqrt(-2.0 * (log_q - kLogHalf));
  for (int it = 0; it < 100; ++it) {
    const double h = log_upper_tail(t) - log_q;
    const double next = t + h * mills_ratio(t);
    if (!(next > 0.0)) return 0.0;
    if (std::abs(next - t) <= 1e-15 * (1.0 + t)) return next;
    t = next;
  }
  return t;
}

// 64-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre64 {
  static constexpr int kSize = 64;
  std::array<double, kSize> nodes{};
  std::array<double, kSize> weights{};
};

inline const GaussLegendre64& gauss_legendre64() {
  static const GaussLegendre64 rule = [] {
    GaussLegendre64 r;
    constexpr int n = GaussLegendre64::kSize;
    for (int i = 0; i < n / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      r.nodes[i] = -x;
      r.nodes[n - 1 - i] = x;
      r.weights[i] = w;
      r.weights[n - 1 - i] = w;
    }
    return r;
  }();
  return rule;
}

}  // namespace grbmamp::special
