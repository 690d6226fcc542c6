#pragma once

// Inner problem: for a fixed point mass gamma, the maximum-entropy density
// on (0, inf) under the rescaled constraints
//   E_g[Y] = alpha1 / (1 - gamma),   E_g[log Y] = alpha2 / (1 - gamma).
// Mean-only gives an exponential, mean + log-mean gives a gamma density.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "semient/density.hpp"
#include "semient/error.hpp"
#include "semient/rootfind.hpp"
#include "semient/specfun.hpp"

namespace semient {

/// c* must stay at or below this for a gamma inner solution to exist.
inline constexpr double kLogGapMargin = -1e-12;

struct InnerSolution {
  ContinuousComponent g;
  double h_g;
  double m;                   // alpha1 / (1 - gamma)
  std::optional<double> l;    // alpha2 / (1 - gamma), gamma family only
};

namespace detail {

inline void require_open_unit(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorKind::Domain, "gamma must lie in (0,1), got " + std::to_string(gamma));
  }
}

inline double require_alpha2(const ConstraintSet& c) {
  if (c.family() != ConstraintFamily::MeanAndLogMean || !c.alpha2()) {
    throw Error(ErrorKind::Domain, "gamma family requires alpha2");
  }
  return *c.alpha2();
}

}  // namespace detail

/// c* = l - log m, the Jensen gap of the conditional moments at gamma.
/// Negative exactly when a non-degenerate positive law can match them.
inline double log_moment_gap(const ConstraintSet& c, double gamma) {
  detail::require_open_unit(gamma);
  const double alpha2 = detail::require_alpha2(c);
  const double q = 1.0 - gamma;
  return alpha2 / q - std::log(c.alpha1() / q);
}

inline InnerSolution inner_exponential(const ConstraintSet& c, double gamma) {
  detail::require_open_unit(gamma);
  const double m = c.alpha1() / (1.0 - gamma);
  const PositiveReal rate(1.0 / m);
  return {Exponential{rate}, 1.0 + std::log(m), m, std::nullopt};
}

/// Shape kappa with psi(kappa) - log(kappa) = gap (< 0).
inline double gamma_shape_from_log_gap(double gap) {
  if (!(gap <= kLogGapMargin)) {
    throw Error(ErrorKind::InfeasibleConstraints,
                "E[log Y] must be below log E[Y]; log-moment gap is " + std::to_string(gap));
  }
  // Scaled residual so that the |f| stopping test is relative to |gap|.
  const double scale = -gap;
  auto f = [gap, scale](double k) { return (digamma_minus_log(k) - gap) / scale; };

  double lo = 1.0, hi = 2.0;
  if (f(lo) > 0.0) {
    while (f(lo) > 0.0) {
      hi = lo;
      lo *= 0.5;
      if (lo < 0x1p-60) throw Error(ErrorKind::InfeasibleConstraints, "shape below representable range");
    }
  } else {
    while (f(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 0x1p60) throw Error(ErrorKind::InfeasibleConstraints, "shape above representable range");
    }
  }
  const auto report = solve_bracketed(f, make_bracket(f, lo, hi), 1e-15, 400);
  double k = report.solution;
  // Newton polish on the unscaled residual.
  for (int i = 0; i < 3; ++i) {
    const double r = digamma_minus_log(k) - gap;
    const double d = trigamma_minus_inv(k);
    if (!(d > 0.0)) break;
    const double next = k - r / d;
    if (!(next > lo && next < hi)) break;
    k = next;
  }
  return k;
}

/// Gamma(kappa, theta) with mean m and E[log Y] = l.
inline InnerSolution inner_gamma_from_moments(double m, double l) {
  if (!(m > 0.0) || !std::isfinite(m) || !std::isfinite(l)) {
    throw Error(ErrorKind::Domain, "inner_gamma requires finite m > 0 and finite l");
  }
  const double k = gamma_shape_from_log_gap(l - std::log(m));
  const PositiveReal shape(k);
  const PositiveReal scale(m / k);
  return {Gamma{shape, scale}, gamma_entropy(shape, scale), m, l};
}

inline InnerSolution inner_gamma(const ConstraintSet& c, double gamma) {
  detail::require_open_unit(gamma);
  const double alpha2 = detail::require_alpha2(c);
  const double q = 1.0 - gamma;
  return inner_gamma_from_moments(c.alpha1() / q, alpha2 / q);
}

inline InnerSolution inner_solve(const ConstraintSet& c, double gamma) {
  return c.family() == ConstraintFamily::MeanOnly ? inner_exponential(c, gamma) : inner_gamma(c, gamma);
}

/// Continuous-part entropy H(g*) of the inner solution at gamma.
inline double h_of_gamma(const ConstraintSet& c, double gamma) { return inner_solve(c, gamma).h_g; }

struct GammaInterval {
  double lo;
  double hi;
};

/// Range of point masses for which the inner problem is solvable, clipped to
/// [kGammaMargin, 1 - kGammaMargin]. Empty when no gamma works.
inline std::optional<GammaInterval> feasible_gamma_interval(const ConstraintSet& c) {
  constexpr double lo_clip = kGammaMargin;
  constexpr double hi_clip = 1.0 - kGammaMargin;
  if (c.family() == ConstraintFamily::MeanOnly) return GammaInterval{lo_clip, hi_clip};

  const double a1 = c.alpha1();
  const double a2 = detail::require_alpha2(c);
  // In u = 1 - gamma the gap is a2/u + log u - log a1, minimised at u = a2.
  auto gap = [a1, a2](double u) { return a2 / u + std::log(u) - std::log(a1) - kLogGapMargin; };
  const double u_min = kGammaMargin;
  const double u_max = 1.0 - kGammaMargin;
  const double u_star = std::clamp(a2, u_min, u_max);
  if (gap(u_star) >= 0.0) return std::nullopt;

  double u_lo = u_min;
  if (gap(u_min) >= 0.0) {
    u_lo = solve_bracketed(gap, make_bracket(gap, u_min, u_star), 1e-14).solution;
  }
  double u_hi = u_max;
  if (gap(u_max) >= 0.0) {
    u_hi = solve_bracketed(gap, make_bracket(gap, u_star, u_max), 1e-14).solution;
  }
  return GammaInterval{std::clamp(1.0 - u_hi, lo_clip, hi_clip), std::clamp(1.0 - u_lo, lo_clip, hi_clip)};
}

}  // namespace semient
