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

// Per-unit priors and their tilted moments.
//
// For a scalar prior P0 and a field (A, B) the tilted distribution is
//
//   Q(x) = P0(x) exp(-A x^2 / 2 + B x) / Z(A, B),
//
// and the quantities needed by message passing are ln Z, the mean
// a = d lnZ / dB and the variance c = d^2 lnZ / dB^2. All three variants
// below have closed forms; the truncated slab falls back to Gauss-Legendre
// quadrature when its total precision is too small (or negative) for the
// Gaussian-tail formulas to be well conditioned.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include "grbmamp/errors.hpp"
#include "grbmamp/special.hpp"

namespace grbmamp {

// Binary unit on {0, 1} with unnormalized weights {1, exp(bias)}.
struct Bernoulli {
  double bias = 0.0;
  friend bool operator==(const Bernoulli&, const Bernoulli&) = default;
};

// (1 - rho) delta(x) + rho N(x; mean, var).
struct GaussBernoulli {
  double rho = 1.0;
  double mean = 0.0;
  double var = 1.0;
  friend bool operator==(const GaussBernoulli&, const GaussBernoulli&) = default;
};

// Spike at zero plus a Gaussian slab renormalized to [lo, hi]. The spike
// must lie inside the bounds.
struct TruncGaussBernoulli {
  double rho = 1.0;
  double mean = 0.0;
  double var = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const TruncGaussBernoulli&, const TruncGaussBernoulli&) = default;
};

using Prior = std::variant<Bernoulli, GaussBernoulli, TruncGaussBernoulli>;

// Stable numeric tags, also used by the model file format.
enum class PriorKind : std::uint32_t {
  kBernoulli = 1,
  kGaussBernoulli = 2,
  kTruncGaussBernoulli = 3,
};

inline PriorKind kind_of(const Prior& p) {
  switch (p.index()) {
    case 0: return PriorKind::kBernoulli;
    case 1: return PriorKind::kGaussBernoulli;
    default: return PriorKind::kTruncGaussBernoulli;
  }
}

inline const char* kind_name(PriorKind k) {
  switch (k) {
    case PriorKind::kBernoulli: return "bernoulli";
    case PriorKind::kGaussBernoulli: return "gauss-bernoulli";
    case PriorKind::kTruncGaussBernoulli: return "trunc-gauss-bernoulli";
  }
  return "unknown";
}

inline void validate(const Prior& prior) {
  auto check_slab = [](double rho, double mean, double var) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("prior: rho must lie in [0, 1]");
    if (!std::isfinite(mean)) throw InvalidArgument("prior: slab mean must be finite");
    if (!(var > 0.0) || !std::isfinite(var)) throw InvalidArgument("prior: slab variance must be positive");
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          if (std::isnan(p.bias)) throw InvalidArgument("prior: bias is NaN");
        } else if constexpr (std::is_same_v<T, GaussBernoulli>) {
          check_slab(p.rho, p.mean, p.var);
        } else {
          check_slab(p.rho, p.mean, p.var);
          if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo < p.hi)) {
            throw InvalidArgument("prior: truncation bounds must satisfy lo < hi");
          }
          if (p.lo > 0.0 || p.hi < 0.0) {
            throw InvalidArgument("prior: truncation bounds must contain the spike at 0");
          }
        }
      },
      prior);
}

// Effective precision A and field B. A may be negative for the truncated
// and Bernoulli variants.
struct TiltedField {
  double A = 0.0;
  double B = 0.0;
};

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

struct TiltedStats {
  double log_z = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

// Total slab precision times squared interval width at or above which the
// truncated slab uses closed forms; below it, quadrature.
inline constexpr double kClosedFormMinPrecision = 1.0;

namespace detail {

enum class SegmentBranch { kClosedForm, kQuadrature };

// Integral of exp(g(x)), g(x) = -P x^2 / 2 + m x, over [lo, hi], together
// with the mean and variance of the normalized density.
struct Segment {
  double log_mass = 0.0;
  double mean = 0.0;
  double var = 0.0;
  SegmentBranch branch = SegmentBranch::kClosedForm;
};

struct ExpQuadratic {
  double P;
  double m;
  double operator()(double x) const { return (m - 0.5 * P * x) * x; }
};

// Max and min of g over [lo, hi].
inline std::pair<double, double> exponent_range(ExpQuadratic g, double lo, double hi) {
  double gmax = std::max(g(lo), g(hi));
  double gmin = std::min(g(lo), g(hi));
  if (g.P != 0.0) {
    const double vertex = g.m / g.P;
    if (vertex > lo && vertex < hi) {
      if (g.P > 0) gmax = std::max(gmax, g(vertex));
      else gmin = std::min(gmin, g(vertex));
    }
  }
  return {gmax, gmin};
}

// Exponent drop below the maximum beyond which the integrand is dropped
// (exp(-50) ~ 2e-22 relative).
inline constexpr double kNegligibleExponent = 50.0;

// A sub-interval on which g is monotone, with its exponent range.
struct Piece {
  double a;
  double b;
  double spread;
};

// Splits [lo, hi] into monotone pieces of g (at the vertex) restricted to
// where g >= gmax - kNegligibleExponent. At most four pieces.
inline int significant_pieces(ExpQuadratic g, double lo, double hi, double gmax, Piece* out) {
  const double level = gmax - kNegligibleExponent;
  double cuts[6] = {lo, hi, 0, 0, 0, 0};
  int n = 2;
  auto add = [&](double x) {
    if (x > lo && x < hi) cuts[n++] = x;
  };
  if (g.P != 0.0) {
    add(g.m / g.P);
    // roots of -P/2 x^2 + m x - level = 0
    const double qa = -0.5 * g.P;
    const double disc = g.m * g.m + 4.0 * qa * level;
    if (disc >= 0.0) {
      const double q = -0.5 * (g.m + std::copysign(std::sqrt(disc), g.m));
      if (q != 0.0) {
        add(q / qa);
        add(-level / q);
      }
    }
  } else if (g.m != 0.0) {
    add(level / g.m);
  }
  std::sort(cuts, cuts + n);
  int count = 0;
  for (int k = 0; k + 1 < n; ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    if (!(b > a)) continue;
    const double ga = g(a);
    const double gb = g(b);
    if (std::max(ga, gb) < level) continue;
    out[count++] = {a, b, std::abs(ga - gb)};
  }
  return count;
}

// Panels per piece; each panel sees an exponent swing of at most ~20, which
// 64 nodes integrate to rounding level.
inline int quadrature_panels(double spread) {
  return static_cast<int>(std::clamp(std::ceil(spread / 20.0), 1.0, 64.0));
}

template <class Fn>
void for_each_node(ExpQuadratic g, double lo, double hi, double gmax, Fn&& fn) {
  const auto& rule = special::gauss_legendre64();
  Piece pieces[5];
  const int n = significant_pieces(g, lo, hi, gmax, pieces);
  for (int j = 0; j < n; ++j) {
    const int panels = quadrature_panels(pieces[j].spread);
    const double width = (pieces[j].b - pieces[j].a) / panels;
    const double half = 0.5 * width;
    for (int p = 0; p < panels; ++p) {
      const double mid = pieces[j].a + (p + 0.5) * width;
      for (int k = 0; k < special::GaussLegendre64::kSize; ++k) {
        const double x = mid + half * rule.nodes[k];
        fn(x, half * rule.weights[k] * std::exp(g(x) - gmax));
      }
    }
  }
}

inline Segment quadrature_segment(double P, double m, double lo, double hi) {
  const ExpQuadratic g{P, m};
  const double gmax = exponent_range(g, lo, hi).first;
  const double ref = 0.5 * (lo + hi);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for_each_node(g, lo, hi, gmax, [&](double x, double e) {
    const double d = x - ref;
    s0 += e;
    s1 += e * d;
    s2 += e * d * d;
  });
  Segment out;
  out.branch = SegmentBranch::kQuadrature;
  out.log_mass = gmax + std::log(s0);
  const double off = s1 / s0;
  out.mean = std::clamp(ref + off, lo, hi);
  out.var = std::max(0.0, s2 / s0 - off * off);
  return out;
}

inline Segment closed_form_segment(double P, double m, double lo, double hi) {
  const ExpQuadratic g{P, m};
  const double s = 1.0 / std::sqrt(P);
  const double alpha = (lo * P - m) * s;
  const double beta = (hi * P - m) * s;
  Segment out;
  out.branch = SegmentBranch::kClosedForm;
  if (alpha >= 0.0) {
    const auto u = special::upper_segment(alpha, beta);
    out.log_mass = g(lo) + std::log(s) + u.log_scaled_mass;
    out.mean = lo + s * u.offset;
    out.var = s * s * u.var;
  } else if (beta <= 0.0) {
    const auto u = special::upper_segment(-beta, -alpha);
    out.log_mass = g(hi) + std::log(s) + u.log_scaled_mass;
    out.mean = hi - s * u.offset;
    out.var = s * s * u.var;
  } else {
    const double nu = m / P;
    const double z = 0.5 * (std::erf(beta / special::kSqrt2) - std::erf(alpha / special::kSqrt2));
    const double phi_a = std::exp(-0.5 * alpha * alpha - special::kHalfLog2Pi) / z;
    const double phi_b = std::exp(-0.5 * beta * beta - special::kHalfLog2Pi) / z;
    const double lambda = phi_a - phi_b;
    out.log_mass = 0.5 * m * nu + std::log(s) + special::kHalfLog2Pi + std::log(z);
    out.mean = nu + s * lambda;
    out.var = s * s * std::max(0.0, 1.0 + alpha * phi_a - beta * phi_b - lambda * lambda);
  }
  out.mean = std::clamp(out.mean, lo, hi);
  return out;
}

inline Segment exp_quadratic_segment(double P, double m, double lo, double hi) {
  const double width = hi - lo;
  if (P * width * width >= kClosedFormMinPrecision) return closed_form_segment(P, m, lo, hi);
  return quadrature_segment(P, m, lo, hi);
}

// Inverse-CDF draw from the density proportional to exp(g) on [lo, hi].
inline double sample_segment(double P, double m, double lo, double hi, double u) {
  const ExpQuadratic g{P, m};
  const double width = hi - lo;
  double x;
  if (P > 0.0 && P * width * width >= 1e-6) {
    const double s = 1.0 / std::sqrt(P);
    const double alpha = (lo * P - m) * s;
    const double beta = (hi * P - m) * s;
    auto tail_draw = [&](double a, double b, double v) {
      const double log_qa = special::log_upper_tail(a);
      const double ratio = b == special::kInf ? 0.0 : std::exp(special::log_upper_tail(b) - log_qa);
      const double t = special::upper_tail_quantile(log_qa + std::log1p(-v * (1.0 - ratio)));
      return std::max(0.0, t - a);
    };
    if (alpha >= 0.0) {
      x = lo + s * tail_draw(alpha, beta, u);
    } else if (beta <= 0.0) {
      x = hi - s * tail_draw(-beta, -alpha, u);
    } else {
      const double cdf_a = 0.5 * std::erfc(-alpha / special::kSqrt2);
      const double sf_b = 0.5 * std::erfc(beta / special::kSqrt2);
      const double z = 1.0 - cdf_a - sf_b;
      const double p = cdf_a + u * z;
      double t;
      if (p <= 0.5) {
        t = -special::upper_tail_quantile(std::log(p));
      } else {
        t = special::upper_tail_quantile(std::log(sf_b + (1.0 - u) * z));
      }
      x = m / P + s * t;
    }
  } else {
    // Numerical inverse CDF: pick a piece by mass, then bisect on the
    // cumulative integral inside it.
    const double gmax = exponent_range(g, lo, hi).first;
    const auto& rule = special::gauss_legendre64();
    auto mass = [&](double a, double b) {
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      double acc = 0.0;
      for (int k = 0; k < special::GaussLegendre64::kSize; ++k) {
        acc += half * rule.weights[k] * std::exp(g(mid + half * rule.nodes[k]) - gmax);
      }
      return acc;
    };
    auto piece_mass = [&](const Piece& pc) {
      const int panels = quadrature_panels(pc.spread);
      const double w = (pc.b - pc.a) / panels;
      double acc = 0.0;
      for (int p = 0; p < panels; ++p) acc += mass(pc.a + p * w, pc.a + (p + 1) * w);
      return acc;
    };
    Piece pieces[5];
    const int n = significant_pieces(g, lo, hi, gmax, pieces);
    double masses[5];
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += (masses[j] = piece_mass(pieces[j]));
    double target = u * total;
    int j = 0;
    for (; j < n - 1 && target > masses[j]; ++j) target -= masses[j];
    double a = pieces[j].a;
    double b = pieces[j].b;
    const double left = a;
    auto cumulative = [&](double t) {
      const int panels = quadrature_panels(std::abs(g(t) - g(left)));
      const double w = (t - left) / panels;
      double acc = 0.0;
      for (int p = 0; p < panels; ++p) acc += mass(left + p * w, left + (p + 1) * w);
      return acc;
    };
    for (int it = 0; it < 60; ++it) {
      const double c = 0.5 * (a + b);
      if (cumulative(c) < target) a = c;
      else b = c;
    }
    x = 0.5 * (a + b);
  }
  return std::clamp(x, lo, hi);
}

// Log-masses of the spike and slab components under the tilt, plus the
// slab's own tilted moments.
struct SpikeSlab {
  double log_spike = -special::kInf;
  double log_slab = -special::kInf;
  Segment slab;
};

inline SpikeSlab spike_slab(const GaussBernoulli& p, TiltedField f) {
  SpikeSlab out;
  if (p.rho < 1.0) out.log_spike = std::log1p(-p.rho);
  if (p.rho <= 0.0) return out;
  const double precision = f.A + 1.0 / p.var;
  if (!(precision > 0.0)) {
    throw NonNormalizable("gauss-bernoulli slab has non-positive total precision " +
                          std::to_string(precision));
  }
  const double lin = f.B + p.mean / p.var;
  out.log_slab = std::log(p.rho) - 0.5 * std::log(p.var * precision) -
                 0.5 * p.mean * p.mean / p.var + 0.5 * lin * lin / precision;
  out.slab.log_mass = out.log_slab;
  out.slab.mean = lin / precision;
  out.slab.var = 1.0 / precision;
  return out;
}

inline SpikeSlab spike_slab(const TruncGaussBernoulli& p, TiltedField f) {
  SpikeSlab out;
  if (p.rho < 1.0) out.log_spike = std::log1p(-p.rho);
  if (p.rho <= 0.0) return out;
  const double sd = std::sqrt(p.var);
  const double log_norm = special::log_gauss_interval((p.lo - p.mean) / sd, (p.hi - p.mean) / sd);
  const double precision = f.A + 1.0 / p.var;
  const double lin = f.B + p.mean / p.var;
  out.slab = exp_quadratic_segment(precision, lin, p.lo, p.hi);
  out.log_slab = std::log(p.rho) - log_norm - special::kHalfLog2Pi - 0.5 * std::log(p.var) -
                 0.5 * p.mean * p.mean / p.var + out.slab.log_mass;
  return out;
}

inline TiltedStats combine(const SpikeSlab& ss) {
  TiltedStats out;
  out.log_z = special::log_add_exp(ss.log_spike, ss.log_slab);
  if (!std::isfinite(out.log_z)) throw NumericalOverflow("tilted log-partition is not finite");
  if (ss.log_slab == -special::kInf) return out;
  const double w = std::exp(ss.log_slab - out.log_z);
  const double mu = ss.slab.mean;
  out.mean = w * mu;
  out.var = w * ss.slab.var + w * (1.0 - w) * mu * mu;
  if (!std::isfinite(out.mean) || !std::isfinite(out.var)) {
    throw NumericalOverflow("tilted moments are not finite");
  }
  return out;
}

}  // namespace detail

// ln Z together with the tilted mean and variance, in one evaluation.
inline TiltedStats tilted_stats(const Prior& prior, TiltedField field) {
  return std::visit(
      [&](const auto& p) -> TiltedStats {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          // x^2 = x on {0, 1}.
          const double t = p.bias - 0.5 * field.A + field.B;
          TiltedStats out;
          out.log_z = special::softplus(t);
          if (!std::isfinite(out.log_z)) throw NumericalOverflow("bernoulli log-partition is not finite");
          out.mean = special::sigmoid(t);
          out.var = out.mean * special::sigmoid(-t);
          return out;
        } else {
          return detail::combine(detail::spike_slab(p, field));
        }
      },
      prior);
}

inline double log_partition(const Prior& prior, TiltedField field) {
  return tilted_stats(prior, field).log_z;
}

inline Moments posterior_moments(const Prior& prior, TiltedField field) {
  const auto s = tilted_stats(prior, field);
  return {s.mean, s.var};
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine.
template <class Rng>
double uniform01(Rng& rng) {
  static_assert(Rng::max() - Rng::min() == ~std::uint64_t{0}, "needs a 64-bit engine");
  return static_cast<double>((rng() - Rng::min()) >> 11) * 0x1.0p-53;
}

// Exact draw from the tilted distribution. Consumes two uniforms for the
// spike-and-slab variants and one for Bernoulli.
template <class Rng>
double sample(const Prior& prior, TiltedField field, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          const double t = p.bias - 0.5 * field.A + field.B;
          return uniform01(rng) < special::sigmoid(t) ? 1.0 : 0.0;
        } else {
          const auto ss = detail::spike_slab(p, field);
          const auto stats = detail::combine(ss);
          const double u_slab = uniform01(rng);
          const double u_value = uniform01(rng);
          if (ss.log_slab == -special::kInf || u_slab >= std::exp(ss.log_slab - stats.log_z)) {
            return 0.0;
          }
          if constexpr (std::is_same_v<T, GaussBernoulli>) {
            const double sd = std::sqrt(ss.slab.var);
            const double v = std::clamp(u_value, 0x1.0p-60, 1.0 - 0x1.0p-53);
            const double t = v < 0.5 ? -special::upper_tail_quantile(std::log(v))
                                     : special::upper_tail_quantile(std::log1p(-v));
            return ss.slab.mean + sd * t;
          } else {
            return detail::sample_segment(field.A + 1.0 / p.var, field.B + p.mean / p.var, p.lo,
                                          p.hi, u_value);
          }
        }
      },
      prior);
}

}  // namespace grbmamp
