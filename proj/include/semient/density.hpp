#pragma once

// Semi-continuous densities: an atom of mass gamma at zero plus
// (1 - gamma) times an exponential or gamma density on (0, inf).
// Entropies are in nats.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

#include "semient/error.hpp"
#include "semient/specfun.hpp"

namespace semient {

/// Lower/upper margin kept between any iterated gamma and {0, 1}.
inline constexpr double kGammaMargin = 1e-10;

enum class ConstraintFamily { MeanOnly, MeanAndLogMean };

inline constexpr std::string_view to_string(ConstraintFamily f) noexcept {
  return f == ConstraintFamily::MeanOnly ? "exp" : "gamma";
}

/// Moment constraints E[Y] = alpha1 and, for the gamma family,
/// E[h2(Y)] = alpha2 with h2(0) = 0, h2(y) = log y.
class ConstraintSet {
 public:
  static ConstraintSet mean_only(double alpha1) { return ConstraintSet(ConstraintFamily::MeanOnly, alpha1, std::nullopt); }

  static ConstraintSet mean_and_log_mean(double alpha1, double alpha2) {
    if (!std::isfinite(alpha2)) {
      throw Error(ErrorKind::Domain, "alpha2 must be finite");
    }
    return ConstraintSet(ConstraintFamily::MeanAndLogMean, alpha1, alpha2);
  }

  [[nodiscard]] ConstraintFamily family() const noexcept { return family_; }
  [[nodiscard]] double alpha1() const noexcept { return alpha1_; }
  [[nodiscard]] std::optional<double> alpha2() const noexcept { return alpha2_; }

 private:
  ConstraintSet(ConstraintFamily family, double alpha1, std::optional<double> alpha2)
      : family_(family), alpha1_(alpha1), alpha2_(alpha2) {
    if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) {
      throw Error(ErrorKind::Domain, "alpha1 must be finite and > 0");
    }
  }

  ConstraintFamily family_;
  double alpha1_;
  std::optional<double> alpha2_;
};

struct Exponential {
  PositiveReal rate;
};

struct Gamma {
  PositiveReal shape;
  PositiveReal scale;
};

using ContinuousComponent = std::variant<Exponential, Gamma>;

inline double exponential_entropy(PositiveReal rate) { return 1.0 - std::log(rate.value()); }

inline double gamma_entropy(PositiveReal shape, PositiveReal scale) {
  const double k = shape.value();
  return k + std::log(scale.value()) + ln_gamma(k) + (1.0 - k) * digamma(k);
}

inline double entropy(const ContinuousComponent& g) {
  return std::visit(
      [](const auto& c) {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, Exponential>) {
          return exponential_entropy(c.rate);
        } else {
          return gamma_entropy(c.shape, c.scale);
        }
      },
      g);
}

inline double mean(const ContinuousComponent& g) {
  if (const auto* e = std::get_if<Exponential>(&g)) return 1.0 / e->rate;
  const auto& gm = std::get<Gamma>(g);
  return gm.shape * gm.scale;
}

/// E[log Y] under the continuous component.
inline double mean_log(const ContinuousComponent& g) {
  if (const auto* e = std::get_if<Exponential>(&g)) return -detail::kEulerGamma - std::log(e->rate);
  const auto& gm = std::get<Gamma>(g);
  return std::log(gm.scale) + digamma(gm.shape);
}

inline double variance(const ContinuousComponent& g) {
  if (const auto* e = std::get_if<Exponential>(&g)) return 1.0 / (e->rate * e->rate);
  const auto& gm = std::get<Gamma>(g);
  return gm.shape * gm.scale * gm.scale;
}

inline double pdf(const ContinuousComponent& g, double y) {
  if (!(y > 0.0)) return 0.0;
  if (const auto* e = std::get_if<Exponential>(&g)) return e->rate * std::exp(-e->rate * y);
  const auto& gm = std::get<Gamma>(g);
  const double k = gm.shape, t = gm.scale;
  return std::exp((k - 1.0) * std::log(y) - y / t - ln_gamma(k) - k * std::log(t));
}

class SemiContinuousDensity {
 public:
  SemiContinuousDensity(double gamma, ContinuousComponent g) : gamma_(gamma), g_(std::move(g)) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw Error(ErrorKind::Domain, "point mass must lie in (0,1), got " + std::to_string(gamma));
    }
  }

  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] const ContinuousComponent& g() const noexcept { return g_; }

 private:
  double gamma_;
  ContinuousComponent g_;
};

/// H(p) = -gamma log gamma - (1-gamma) log(1-gamma) + (1-gamma) H(g).
inline double mixture_entropy(double gamma, double h_g) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorKind::Domain, "mixture_entropy requires gamma in (0,1)");
  }
  return -gamma * std::log(gamma) - (1.0 - gamma) * std::log1p(-gamma) + (1.0 - gamma) * h_g;
}

struct Moments {
  double mean;
  double variance;
};

/// Mean and variance of the two-part law, from E[Y] = (1-gamma) m and
/// E[Y^2] = (1-gamma)(v + m^2) of the continuous part.
inline Moments two_part_moments(const SemiContinuousDensity& d) {
  const double q = 1.0 - d.gamma();
  const double m = mean(d.g());
  const double v = variance(d.g());
  return {q * m, q * v + q * d.gamma() * m * m};
}

struct DensityValue {
  double atom_mass;
  double continuous_density;
};

inline DensityValue density_at(const SemiContinuousDensity& d, double y) {
  if (!(y >= 0.0)) {
    throw Error(ErrorKind::Domain, "density_at requires y >= 0");
  }
  if (y == 0.0) return {d.gamma(), 0.0};
  return {0.0, (1.0 - d.gamma()) * pdf(d.g(), y)};
}

enum class Method { AEM, AEMPolitis, TwoPartEM, ClosedForm, DirectSystem };

inline constexpr std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::AEM: return "aem";
    case Method::AEMPolitis: return "politis";
    case Method::TwoPartEM: return "twopart";
    case Method::ClosedForm: return "closed-form";
    case Method::DirectSystem: return "direct";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view s) noexcept {
  for (Method m : {Method::AEM, Method::AEMPolitis, Method::TwoPartEM, Method::ClosedForm, Method::DirectSystem}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

struct Multipliers {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  std::optional<double> lambda2;
};

struct SolverDiagnostics {
  bool converged = false;
  int iterations = 0;
  /// Stationarity residual of the outer gamma equation at the returned
  /// point, when the method defines one.
  std::optional<double> residual;
  /// gamma updates shortened to stay inside the feasible set (AEM).
  int feasibility_halvings = 0;
  /// gamma updates whose equation had no root inside the margins and were
  /// replaced by a half step toward the feasible boundary (AEM).
  int boundary_steps = 0;
  /// gamma updates halved back toward the previous iterate because they
  /// lowered H(p) (AEM).
  int ascent_halvings = 0;
  /// Times the AEM secant was re-seeded at a probe next to the current
  /// iterate after backtracking failed to find an ascent step.
  int slope_resets = 0;
  /// AEM-Politis fell back to averaged iteration after a 2-cycle.
  bool averaged_fallback = false;
};

struct MaxEntSolution {
  SemiContinuousDensity density;
  double h_g;
  double h_p;
  Multipliers multipliers;
  ConvergenceTrace trace;
  Method method;
  SolverDiagnostics diagnostics;
};

/// Lagrange multipliers of g(y) = exp(-1 - l0 - l1 y - l2 log y) matching g.
inline Multipliers multipliers_for(const ContinuousComponent& g) {
  if (const auto* e = std::get_if<Exponential>(&g)) {
    return {-1.0 - std::log(e->rate), e->rate, std::nullopt};
  }
  const auto& gm = std::get<Gamma>(g);
  const double k = gm.shape, t = gm.scale;
  return {ln_gamma(k) + k * std::log(t) - 1.0, 1.0 / t, 1.0 - k};
}

}  // namespace semient
