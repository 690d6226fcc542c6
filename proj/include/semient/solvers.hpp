#pragma once

// Outer estimation of the point mass gamma.
//
//   aem          alternating maximisation; gamma_{k+1} solves
//                log((1-x)/x) - h(gamma_k) - (x - 1) * slope_k = 0
//                with slope_k the backward difference of h.
//   aem_politis  fixed point gamma = 1 / (1 + exp(h(gamma))).
//   two_part_em  gamma fixed to the observed zero proportion.
//
// exp_closed_form and gamma_direct characterise the same optimum without
// iterating on gamma and serve as cross-checks.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "semient/density.hpp"
#include "semient/error.hpp"
#include "semient/inner.hpp"
#include "semient/rootfind.hpp"
#include "semient/specfun.hpp"

namespace semient {

/// Smallest |gamma_k - gamma_{k-1}| for which the backward difference is used.
inline constexpr double kMinGammaStep = 1e-14;

/// Cap on step halvings when an AEM update would lower the entropy.
inline constexpr int kMaxAscentHalvings = 40;

struct SolverConfig {
  /// Stop when the entropy change between iterates is at most eps.
  double eps = 1e-8;
  int max_iter = 200;
  double gamma0 = 0.5;
  /// Second seed for the backward difference (AEM only). Defaults to
  /// gamma0 + 0.01, clamped into the open unit interval.
  std::optional<double> gamma_minus1;

  static SolverConfig starting_at(double gamma0, double eps = 1e-8, int max_iter = 200) {
    SolverConfig cfg;
    cfg.gamma0 = std::clamp(gamma0, kGammaMargin, 1.0 - kGammaMargin);
    cfg.eps = eps;
    cfg.max_iter = max_iter;
    return cfg;
  }

  [[nodiscard]] double seed_minus1() const {
    if (gamma_minus1) return *gamma_minus1;
    const double up = std::clamp(gamma0 + 0.01, kGammaMargin, 1.0 - kGammaMargin);
    return up != gamma0 ? up : gamma0 - 0.01;
  }

  void validate(bool needs_two_points) const {
    if (!(eps > 0.0)) throw Error(ErrorKind::Domain, "eps must be > 0");
    if (max_iter < 1) throw Error(ErrorKind::Domain, "max_iter must be >= 1");
    if (!(gamma0 > 0.0 && gamma0 < 1.0)) throw Error(ErrorKind::Domain, "gamma0 must lie in (0,1)");
    if (needs_two_points) {
      const double gm1 = seed_minus1();
      if (!(gm1 > 0.0 && gm1 < 1.0)) throw Error(ErrorKind::Domain, "gamma_minus1 must lie in (0,1)");
      if (gm1 == gamma0) throw Error(ErrorKind::Domain, "gamma_minus1 must differ from gamma0");
    }
  }
};

/// d/dgamma of H(gamma) = binary entropy + (1 - gamma) h(gamma), given h and h'.
/// Zero at the optimal point mass.
inline double outer_stationarity(double gamma, double h, double h_prime) {
  return std::log((1.0 - gamma) / gamma) - h - (gamma - 1.0) * h_prime;
}

namespace detail {

inline MaxEntSolution make_solution(double gamma, const InnerSolution& inner, ConvergenceTrace trace, Method method,
                                    SolverDiagnostics diag) {
  const double h_p = mixture_entropy(gamma, inner.h_g);
  return MaxEntSolution{SemiContinuousDensity(gamma, inner.g), inner.h_g, h_p, multipliers_for(inner.g),
                        std::move(trace), method, diag};
}

}  // namespace detail

/// Alternating entropy maximisation.
///
/// Each step solves the outer stationarity equation for the next gamma on
/// (kGammaMargin, 1 - kGammaMargin). The left side tends to +inf at 0 and
/// -inf at 1 and is strictly decreasing whenever slope > -4, so the bracket
/// holds a single root unless the slope is steep enough to push it past the
/// margins. If the inner problem has no solution at the new gamma (gamma
/// family only), or the new gamma lowers H(p), the step is halved back
/// toward gamma_k.
inline MaxEntSolution aem(const ConstraintSet& c, const SolverConfig& cfg) {
  cfg.validate(true);
  double g_prev = cfg.seed_minus1();
  double g_cur = cfg.gamma0;
  InnerSolution in_prev = inner_solve(c, g_prev);
  InnerSolution in_cur = inner_solve(c, g_cur);
  double H_cur = mixture_entropy(g_cur, in_cur.h_g);

  ConvergenceTrace trace;
  trace.push_back({-1, g_prev, in_prev.h_g, mixture_entropy(g_prev, in_prev.h_g)});
  trace.push_back({0, g_cur, in_cur.h_g, H_cur});

  const auto feasible = feasible_gamma_interval(c);
  if (!feasible) {
    throw Error(ErrorKind::InfeasibleConstraints, "no point mass admits an inner solution for these constraints", trace);
  }
  const GammaInterval interval = *feasible;

  SolverDiagnostics diag;
  // Replaces the older secant point by a probe next to g_cur, so that the
  // next slope is a local derivative estimate.
  auto reseed = [&] {
    const double delta = 0.01 * std::min(g_cur - interval.lo, interval.hi - g_cur);
    if (!(delta >= kMinGammaStep)) {
      throw Error(ErrorKind::DegenerateStep, "no room for a secant probe next to the feasible boundary", trace);
    }
    g_prev = g_cur - delta;
    in_prev = inner_solve(c, g_prev);
    ++diag.slope_resets;
  };
  for (int k = 1; k <= cfg.max_iter; ++k) {
    if (std::abs(g_cur - g_prev) < kMinGammaStep) reseed();
    const double slope = (in_cur.h_g - in_prev.h_g) / (g_cur - g_prev);
    const double h_cur = in_cur.h_g;
    auto update = [h_cur, slope](double x) { return outer_stationarity(x, h_cur, slope); };
    double g_next;
    const double f_lo = update(kGammaMargin);
    const double f_hi = update(1.0 - kGammaMargin);
    if (!std::isfinite(f_lo) || !std::isfinite(f_hi)) {
      throw Error(ErrorKind::Domain, "gamma update is not finite", trace);
    }
    if ((f_lo > 0.0) != (f_hi > 0.0)) {
      try {
        g_next = solve_bracketed(update, Bracket{kGammaMargin, 1.0 - kGammaMargin, f_lo, f_hi}, 1e-14).solution;
      } catch (const Error& e) {
        throw Error(e.kind(), std::string("gamma update: ") + e.what(), trace);
      }
    } else {
      // A steep slope near the edge of the feasible set pushes the root
      // outside the margins; move halfway toward that edge instead.
      g_next = 0.5 * (g_cur + (f_lo > 0.0 ? interval.hi : interval.lo));
      ++diag.boundary_steps;
    }

    std::optional<InnerSolution> in_next;
    for (int halving = 0; !in_next; ++halving) {
      try {
        in_next = inner_solve(c, g_next);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InfeasibleConstraints || halving >= 60) throw Error(e.kind(), e.what(), trace);
        g_next = 0.5 * (g_next + g_cur);
        ++diag.feasibility_halvings;
      }
    }

    double H_next = mixture_entropy(g_next, in_next->h_g);
    // Ascent safeguard, ignoring drops within eps. The feasible set is an
    // interval, so every point between g_cur and g_next stays solvable.
    int halvings = 0;
    for (; H_next < H_cur - cfg.eps && halvings < kMaxAscentHalvings; ++halvings) {
      g_next = 0.5 * (g_next + g_cur);
      in_next = inner_solve(c, g_next);
      H_next = mixture_entropy(g_next, in_next->h_g);
    }
    diag.ascent_halvings += halvings;
    const bool backtracked = halvings > 0;
    if (halvings == kMaxAscentHalvings) {
      // The secant slope points downhill; stay at g_cur with a local slope.
      reseed();
      continue;
    }
    trace.push_back({k, g_next, in_next->h_g, H_next});
    const double change = std::abs(H_next - H_cur);

    g_prev = g_cur;
    in_prev = std::move(in_cur);
    g_cur = g_next;
    in_cur = std::move(*in_next);
    H_cur = H_next;
    diag.iterations = k;

    if (change <= cfg.eps && !backtracked) {
      diag.converged = true;
      if (g_cur != g_prev) {
        const double final_slope = (in_cur.h_g - in_prev.h_g) / (g_cur - g_prev);
        diag.residual = outer_stationarity(g_cur, in_cur.h_g, final_slope);
      }
      return detail::make_solution(g_cur, in_cur, std::move(trace), Method::AEM, diag);
    }
  }
  throw Error(ErrorKind::MaxIterations, "AEM did not converge in " + std::to_string(cfg.max_iter) + " iterations",
              std::move(trace));
}

namespace detail {

// Two-cycle: successive steps alternate in sign and every other iterate
// nearly repeats.
inline bool is_two_cycle(const ConvergenceTrace& t) {
  if (t.size() < 4) return false;
  const double a = t[t.size() - 3].gamma, b = t[t.size() - 2].gamma, c = t[t.size() - 1].gamma;
  const double step = std::abs(c - b);
  return (c - b) * (b - a) < 0.0 && step > 0.0 && std::abs(c - a) < 1e-2 * step;
}

struct PolitisRun {
  bool converged = false;
  bool oscillating = false;
  double gamma = 0.0;
  std::optional<InnerSolution> inner;
  ConvergenceTrace trace;
  int iterations = 0;
};

inline PolitisRun politis_iterate(const ConstraintSet& c, const SolverConfig& cfg, bool averaged) {
  PolitisRun run;
  double g = cfg.gamma0;
  InnerSolution in = inner_solve(c, g);
  double H = mixture_entropy(g, in.h_g);
  run.trace.push_back({0, g, in.h_g, H});
  for (int k = 1; k <= cfg.max_iter; ++k) {
    double g_next = 1.0 / (1.0 + std::exp(in.h_g));
    if (averaged) g_next = 0.5 * (g_next + g);
    g_next = std::clamp(g_next, kGammaMargin, 1.0 - kGammaMargin);
    InnerSolution in_next = [&] {
      try {
        return inner_solve(c, g_next);
      } catch (const Error& e) {
        throw Error(e.kind(), e.what(), run.trace);
      }
    }();
    const double H_next = mixture_entropy(g_next, in_next.h_g);
    run.trace.push_back({k, g_next, in_next.h_g, H_next});
    const double change = std::abs(H_next - H);
    g = g_next;
    in = std::move(in_next);
    H = H_next;
    run.iterations = k;
    if (change <= cfg.eps) {
      run.converged = true;
      break;
    }
    if (!averaged && k >= cfg.max_iter / 2 && is_two_cycle(run.trace)) {
      run.oscillating = true;
      break;
    }
  }
  run.gamma = g;
  run.inner = std::move(in);
  return run;
}

}  // namespace detail

/// Fixed-point iteration gamma <- 1 / (1 + exp(H(g*))), g* the inner
/// solution at the previous gamma. A persistent 2-cycle triggers one retry
/// with half-step averaging, which is flagged in the diagnostics.
inline MaxEntSolution aem_politis(const ConstraintSet& c, const SolverConfig& cfg) {
  cfg.validate(false);
  detail::PolitisRun run = detail::politis_iterate(c, cfg, false);
  bool averaged = false;
  if (run.oscillating) {
    run = detail::politis_iterate(c, cfg, true);
    averaged = true;
  }
  if (!run.converged) {
    if (averaged || run.oscillating || detail::is_two_cycle(run.trace)) {
      throw Error(ErrorKind::OscillationDetected, "AEM-Politis gamma sequence oscillates", std::move(run.trace));
    }
    throw Error(ErrorKind::MaxIterations,
                "AEM-Politis did not converge in " + std::to_string(cfg.max_iter) + " iterations",
                std::move(run.trace));
  }
  SolverDiagnostics diag;
  diag.converged = true;
  diag.iterations = run.iterations;
  diag.averaged_fallback = averaged;
  diag.residual = run.gamma - 1.0 / (1.0 + std::exp(run.inner->h_g));
  return detail::make_solution(run.gamma, *run.inner, std::move(run.trace), Method::AEMPolitis, diag);
}

/// Baseline with the point mass pinned to the observed zero proportion.
inline MaxEntSolution two_part_em(const ConstraintSet& c, double zero_proportion) {
  if (!(zero_proportion > 0.0 && zero_proportion < 1.0)) {
    throw Error(ErrorKind::Domain, "zero proportion must lie in (0,1)");
  }
  const InnerSolution in = inner_solve(c, zero_proportion);
  SolverDiagnostics diag;
  diag.converged = true;
  ConvergenceTrace trace{{0, zero_proportion, in.h_g, mixture_entropy(zero_proportion, in.h_g)}};
  return detail::make_solution(zero_proportion, in, std::move(trace), Method::TwoPartEM, diag);
}

/// Root of x^2 - (2 + alpha1) x + 1 = 0 inside (0,1), written as
/// 2 / ((2 + a) + sqrt(a (a + 4))) to avoid cancellation for large a.
inline double exp_closed_form_gamma(double alpha1) {
  if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) {
    throw Error(ErrorKind::Domain, "alpha1 must be finite and > 0");
  }
  return 2.0 / ((2.0 + alpha1) + std::sqrt(alpha1 * (alpha1 + 4.0)));
}

/// Exact maximiser for the mean-only constraint.
inline MaxEntSolution exp_closed_form(double alpha1) {
  const double g = exp_closed_form_gamma(alpha1);
  const ConstraintSet c = ConstraintSet::mean_only(alpha1);
  const InnerSolution in = inner_exponential(c, g);
  SolverDiagnostics diag;
  diag.converged = true;
  diag.residual = outer_stationarity(g, in.h_g, 1.0 / (1.0 - g));
  ConvergenceTrace trace{{0, g, in.h_g, mixture_entropy(g, in.h_g)}};
  return detail::make_solution(g, in, std::move(trace), Method::ClosedForm, diag);
}

/// Solver configuration starting at `preferred` when the inner problem is
/// solvable there and at the second AEM seed; otherwise starts from the
/// midpoint of the feasible interval of point masses.
inline SolverConfig feasible_start(const ConstraintSet& c, double preferred, double eps = 1e-8, int max_iter = 200) {
  SolverConfig cfg = SolverConfig::starting_at(preferred, eps, max_iter);
  const auto interval = feasible_gamma_interval(c);
  if (!interval) {
    throw Error(ErrorKind::InfeasibleConstraints, "no point mass admits an inner solution for these constraints");
  }
  auto inside = [&](double g) { return g > interval->lo && g < interval->hi; };
  if (inside(cfg.gamma0) && inside(cfg.seed_minus1())) return cfg;
  const double mid = 0.5 * (interval->lo + interval->hi);
  cfg.gamma0 = mid;
  cfg.gamma_minus1.reset();
  if (!inside(cfg.seed_minus1())) cfg.gamma_minus1 = mid + 0.25 * (interval->hi - mid);
  return cfg;
}

/// Starting point (lambda1, lambda2, gamma) for gamma_direct.
struct DirectSeed {
  double lambda1;
  double lambda2;
  double gamma;

  /// lambda1 = 1/theta, lambda2 = 1 - kappa from a gamma-family solution.
  static DirectSeed from(const MaxEntSolution& s) {
    const auto* gm = std::get_if<Gamma>(&s.density.g());
    if (!gm) throw Error(ErrorKind::Domain, "direct system needs a gamma-family seed");
    return {1.0 / gm->scale, 1.0 - gm->shape, s.density.gamma()};
  }
};

/// Residuals of the joint stationarity system in (lambda1, lambda2, gamma):
///   (1 - l2)/l1 = a1/(1-g)
///   psi(1 - l2) - log l1 = a2/(1-g)
///   g = l1^(1-l2) / (l1^(1-l2) + Gamma(1-l2))
inline Vec<3> direct_residuals(double alpha1, double alpha2, const Vec<3>& x) {
  const double l1 = x[0], a = 1.0 - x[1], g = x[2];
  const double q = 1.0 - g;
  const double z = ln_gamma(a) - a * std::log(l1);
  return {a / l1 - alpha1 / q, digamma(a) - std::log(l1) - alpha2 / q, g - 1.0 / (1.0 + std::exp(z))};
}

inline Mat<3> direct_jacobian(double alpha1, double alpha2, const Vec<3>& x) {
  const double l1 = x[0], a = 1.0 - x[1], g = x[2];
  const double q = 1.0 - g;
  const double z = ln_gamma(a) - a * std::log(l1);
  const double s = 1.0 / (1.0 + std::exp(z));
  const double ds = s * (1.0 - s);
  return {{{-a / (l1 * l1), -1.0 / l1, -alpha1 / (q * q)},
           {-1.0 / l1, -trigamma(a), -alpha2 / (q * q)},
           {ds * (-a / l1), ds * (-(digamma(a) - std::log(l1))), 1.0}}};
}

/// Solves the three stationarity equations of the gamma family directly by
/// damped Newton with the guards lambda1 > 0, 1 - lambda2 > 0, gamma in (0,1).
inline MaxEntSolution gamma_direct(const ConstraintSet& c, const DirectSeed& seed,
                                   double tol = kDefaultSystemTol, int max_iter = kDefaultMaxIter) {
  const double a1 = c.alpha1();
  const double a2 = detail::require_alpha2(c);
  if (!feasible_gamma_interval(c)) {
    throw Error(ErrorKind::InfeasibleIterate, "no point mass admits a gamma inner solution for these constraints");
  }
  NewtonOptions<3> opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  opts.feasible = [](const Vec<3>& x) {
    return x[0] > 0.0 && std::isfinite(x[0]) && 1.0 - x[1] > 0.0 && x[2] > kGammaMargin && x[2] < 1.0 - kGammaMargin;
  };
  const auto report = solve_newton_system<3>([a1, a2](const Vec<3>& x) { return direct_residuals(a1, a2, x); },
                                             [a1, a2](const Vec<3>& x) { return direct_jacobian(a1, a2, x); },
                                             Vec<3>{seed.lambda1, seed.lambda2, seed.gamma}, opts);
  const auto& x = report.solution;
  const PositiveReal shape(1.0 - x[1]);
  const PositiveReal scale(1.0 / x[0]);
  const double h_g = gamma_entropy(shape, scale);
  const double g = x[2];
  SolverDiagnostics diag;
  diag.converged = true;
  diag.iterations = report.iterations;
  diag.residual = report.residual_norm;
  const double l0 = ln_gamma(shape) - shape * std::log(x[0]) - 1.0;
  ConvergenceTrace trace{{0, g, h_g, mixture_entropy(g, h_g)}};
  return MaxEntSolution{SemiContinuousDensity(g, Gamma{shape, scale}), h_g, mixture_entropy(g, h_g),
                        Multipliers{l0, x[0], x[1]}, std::move(trace), Method::DirectSystem, diag};
}

/// Runs one estimation method. Two-part EM uses `zero_proportion`, clamped
/// into the open unit interval so that samples without zeros stay usable.
/// The direct system is seeded from an AEM run with the same configuration.
inline MaxEntSolution estimate(const ConstraintSet& c, Method method, const SolverConfig& cfg,
                               std::optional<double> zero_proportion = std::nullopt) {
  switch (method) {
    case Method::AEM: return aem(c, cfg);
    case Method::AEMPolitis: return aem_politis(c, cfg);
    case Method::TwoPartEM:
      if (!zero_proportion) throw Error(ErrorKind::Domain, "two-part EM needs the observed zero proportion");
      return two_part_em(c, std::clamp(*zero_proportion, kGammaMargin, 1.0 - kGammaMargin));
    case Method::ClosedForm:
      if (c.family() != ConstraintFamily::MeanOnly) {
        throw Error(ErrorKind::Domain, "the closed form exists only for the mean-only constraint");
      }
      return exp_closed_form(c.alpha1());
    case Method::DirectSystem: {
      if (c.family() != ConstraintFamily::MeanAndLogMean) {
        throw Error(ErrorKind::Domain, "the direct system is defined for the mean and log-mean constraints");
      }
      return gamma_direct(c, DirectSeed::from(aem(c, cfg)));
    }
  }
  throw Error(ErrorKind::Domain, "unknown method");
}

}  // namespace semient
