#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "semient/error.hpp"

namespace semient {

inline constexpr double kDefaultScalarTol = 1e-12;
inline constexpr double kDefaultSystemTol = 1e-10;
inline constexpr int kDefaultMaxIter = 100;

template <typename F>
concept ScalarFunction = requires(F f, double x) {
  { f(x) } -> std::convertible_to<double>;
};

/// An interval [lo, hi] with f(lo) and f(hi) of strictly opposite sign.
/// A zero at either end counts as a sign change.
struct Bracket {
  double lo;
  double hi;
  double f_lo;
  double f_hi;
};

/// Evaluates f at both ends and validates the bracket invariant.
template <ScalarFunction F>
Bracket make_bracket(F&& f, double lo, double hi) {
  if (!(lo < hi)) {
    throw Error(ErrorKind::NoSignChange, "bracket requires lo < hi");
  }
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (std::isnan(f_lo) || std::isnan(f_hi) || (f_lo > 0.0 && f_hi > 0.0) || (f_lo < 0.0 && f_hi < 0.0)) {
    throw Error(ErrorKind::NoSignChange, "f(lo)=" + std::to_string(f_lo) + " f(hi)=" + std::to_string(f_hi));
  }
  return Bracket{lo, hi, f_lo, f_hi};
}

template <typename T>
struct SolveReport {
  T solution{};
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

using ScalarReport = SolveReport<double>;

/// Brent's hybrid of inverse-quadratic interpolation, secant and bisection.
///
/// Stops when |f(x)| <= tol or the bracket has shrunk below tol * max(1, |x|).
/// The bisection safeguard bounds the work at roughly
/// log2((hi - lo) / tol) interpolation failures.
template <ScalarFunction F>
ScalarReport solve_bracketed(F&& f, const Bracket& bracket, double tol = kDefaultScalarTol, int max_iter = 200) {
  if (!(tol > 0.0)) {
    throw Error(ErrorKind::Domain, "solve_bracketed requires tol > 0");
  }
  if (!(bracket.lo < bracket.hi) || (bracket.f_lo > 0.0 && bracket.f_hi > 0.0) ||
      (bracket.f_lo < 0.0 && bracket.f_hi < 0.0) || std::isnan(bracket.f_lo) || std::isnan(bracket.f_hi)) {
    throw Error(ErrorKind::NoSignChange, "invalid bracket");
  }
  if (bracket.f_lo == 0.0) return {bracket.lo, 0.0, 0, true};
  if (bracket.f_hi == 0.0) return {bracket.hi, 0.0, 0, true};

  double a = bracket.lo, b = bracket.hi;
  double fa = bracket.f_lo, fb = bracket.f_hi;
  double c = a, fc = fa;
  double d = b - a, e = d;

  for (int iter = 1; iter <= max_iter; ++iter) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double width_tol = 0.5 * tol * std::max(1.0, std::abs(b));
    const double tol1 = std::max(width_tol, 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b));
    const double xm = 0.5 * (c - b);
    if (std::abs(fb) <= tol || std::abs(xm) <= tol1 || fb == 0.0) {
      return {b, std::abs(fb), iter, true};
    }
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if (std::isnan(fb)) {
      throw Error(ErrorKind::Domain, "objective returned NaN at x=" + std::to_string(b));
    }
  }
  throw Error(ErrorKind::MaxIterations, "solve_bracketed exhausted " + std::to_string(max_iter) + " iterations");
}

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

template <std::size_t N>
double inf_norm(const Vec<N>& v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

namespace detail {

// Gaussian elimination with partial pivoting; throws SingularJacobian.
template <std::size_t N>
Vec<N> solve_linear(Mat<N> a, Vec<N> b) {
  double scale = 0.0;
  for (const auto& row : a)
    for (double x : row) scale = std::max(scale, std::abs(x));
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::SingularJacobian, "Jacobian is zero or non-finite");
  }
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) <= 1e-14 * scale) {
      throw Error(ErrorKind::SingularJacobian, "pivot below threshold in column " + std::to_string(col));
    }
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double m = a[r][col] / a[col][col];
      for (std::size_t k = col; k < N; ++k) a[r][k] -= m * a[col][k];
      b[r] -= m * b[col];
    }
  }
  Vec<N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < N; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace detail

/// Forward-difference Jacobian, for systems without an analytic one.
template <std::size_t N, typename F>
auto finite_difference_jacobian(F f, double rel_step = 1e-7) {
  return [f = std::move(f), rel_step](const Vec<N>& x) {
    Mat<N> jac{};
    const Vec<N> f0 = f(x);
    for (std::size_t j = 0; j < N; ++j) {
      Vec<N> xp = x;
      const double h = rel_step * std::max(1.0, std::abs(x[j]));
      xp[j] += h;
      const Vec<N> f1 = f(xp);
      for (std::size_t i = 0; i < N; ++i) jac[i][j] = (f1[i] - f0[i]) / h;
    }
    return jac;
  };
}

template <std::size_t N>
struct NewtonOptions {
  double tol = kDefaultSystemTol;
  int max_iter = kDefaultMaxIter;
  int max_halvings = 40;
  /// Iterates for which this returns false are never accepted.
  std::function<bool(const Vec<N>&)> feasible = [](const Vec<N>&) { return true; };
};

/// Damped Newton for a small square system F(x) = 0.
///
/// A full step is halved until the iterate is feasible and the residual
/// max-norm decreases. If a feasible step exists but none decreases the
/// residual, the shortest feasible step is taken anyway.
template <std::size_t N, typename F, typename J>
SolveReport<Vec<N>> solve_newton_system(F&& fun, J&& jac, Vec<N> x, const NewtonOptions<N>& opts = {}) {
  if (!opts.feasible(x)) {
    throw Error(ErrorKind::InfeasibleIterate, "starting point is infeasible");
  }
  Vec<N> fx = fun(x);
  double norm = inf_norm<N>(fx);
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    if (!std::isfinite(norm)) {
      throw Error(ErrorKind::InfeasibleIterate, "residual is not finite");
    }
    if (norm <= opts.tol) {
      return {x, norm, iter, true};
    }
    if (iter == opts.max_iter) break;
    Vec<N> neg = fx;
    for (double& v : neg) v = -v;
    const Vec<N> step = detail::solve_linear<N>(jac(x), neg);

    double lambda = 1.0;
    bool any_feasible = false;
    Vec<N> fallback = x;
    Vec<N> fallback_f = fx;
    double fallback_norm = norm;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      Vec<N> trial = x;
      for (std::size_t i = 0; i < N; ++i) trial[i] += lambda * step[i];
      if (!opts.feasible(trial)) continue;
      const Vec<N> ft = fun(trial);
      const double nt = inf_norm<N>(ft);
      if (!std::isfinite(nt)) continue;
      any_feasible = true;
      fallback = trial;
      fallback_f = ft;
      fallback_norm = nt;
      if (nt < norm) break;
    }
    if (!any_feasible) {
      throw Error(ErrorKind::InfeasibleIterate, "damping could not restore feasibility");
    }
    x = fallback;
    fx = fallback_f;
    norm = fallback_norm;
  }
  throw Error(ErrorKind::MaxIterations, "Newton system did not converge in " + std::to_string(opts.max_iter) + " iterations");
}

}  // namespace semient
