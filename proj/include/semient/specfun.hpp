#pragma once

// Log-gamma, digamma and trigamma on the positive reals.
//
// Small arguments are moved into a central band with the usual recurrences;
// large arguments use the Stirling / Bernoulli asymptotic series. Around the
// zeros of ln Gamma (x = 1, 2) a Taylor series in (x - 1) built from
// zeta(k) - 1 keeps the relative error bounded.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "semient/error.hpp"

namespace semient {

/// A strictly positive real. Construction with a non-positive or NaN value
/// throws Error{Domain}.
class PositiveReal {
 public:
  explicit PositiveReal(double value) : value_(value) {
    if (!(value > 0.0)) {
      throw Error(ErrorKind::Domain, "expected a positive value, got " + std::to_string(value));
    }
  }
  [[nodiscard]] double value() const noexcept { return value_; }
  operator double() const noexcept { return value_; }  // NOLINT(google-explicit-constructor)

 private:
  double value_;
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;

// zeta(k) - 1 for k = 2..40.
inline constexpr std::array<double, 39> kZetaMinusOne = {
    0.644934066848226436472,   0.2020569031595942854,     0.082323233711138191516,
    0.0369277551433699263314,  0.0173430619844491397145,  0.0083492773819228268398,
    0.00407735619794433937869, 0.00200839282608221441785, 0.000994575127818085337146,
    0.000494188604119464558702, 0.000246086553308048298638, 0.000122713347578489146752,
    6.12481350587048292585e-5, 3.05882363070204935517e-5, 1.52822594086518717326e-5,
    7.6371976378997622736e-6,  3.81729326499983985646e-6, 1.90821271655393892566e-6,
    9.53962033872796113152e-7, 4.76932986787806463117e-7, 2.38450502727732990004e-7,
    1.19219925965311073068e-7, 5.96081890512594796124e-8, 2.98035035146522801861e-8,
    1.49015548283650412347e-8, 7.45071178983542949198e-9, 3.72533402478845705482e-9,
    1.8626597235130490064e-9,  9.31327432419668182872e-10, 4.65662906503378407299e-10,
    2.328311833676505492e-10,  1.16415501727005197759e-10, 5.82077208790270088924e-11,
    2.91038504449709968693e-11, 1.45519218910419842359e-11, 7.27595983505748101452e-12,
    3.63797954737865119024e-12, 1.81898965030706594758e-12, 9.09494784026388928253e-13,
};

// ln Gamma(1 + z) for |z| <= 0.5:
//   -log1p(z) + z (1 - gamma_E) + sum_{k>=2} (-1)^k (zeta(k) - 1) z^k / k
inline double ln_gamma_1p(double z) noexcept {
  double sum = 0.0;
  double zk = z;
  for (std::size_t i = 0; i < kZetaMinusOne.size(); ++i) {
    zk *= z;
    const double k = static_cast<double>(i + 2);
    const double term = kZetaMinusOne[i] * zk / k;
    sum += (i % 2 == 0) ? term : -term;
  }
  return -std::log1p(z) + z * (1.0 - kEulerGamma) + sum;
}

// Stirling series for x >= 13.
inline double ln_gamma_asymptotic(double x) noexcept {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 + inv2 * (1.0 / 156.0)))))));
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

// psi(x) - log(x) for x >= 10, without the cancellation of subtracting logs.
inline double digamma_minus_log_asymptotic(double x) noexcept {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12.0 +
              inv2 * (-1.0 / 120.0 +
                      inv2 * (1.0 / 252.0 +
                              inv2 * (-1.0 / 240.0 +
                                      inv2 * (1.0 / 132.0 +
                                              inv2 * (-691.0 / 32760.0 + inv2 * (1.0 / 12.0)))))));
  return -0.5 * inv - series;
}

// psi'(x) - 1/x for x >= 10.
inline double trigamma_minus_inv_asymptotic(double x) noexcept {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * inv2 *
      (1.0 / 6.0 +
       inv2 * (-1.0 / 30.0 +
               inv2 * (1.0 / 42.0 +
                       inv2 * (-1.0 / 30.0 +
                               inv2 * (5.0 / 66.0 + inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))))));
  return 0.5 * inv2 + series;
}

inline void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorKind::Domain, std::string(fn) + " requires a finite x > 0, got " + std::to_string(x));
  }
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double ln_gamma(double x) {
  detail::require_positive(x, "ln_gamma");
  if (x < 0.5) {
    return detail::ln_gamma_1p(x) - std::log(x);
  }
  if (x <= 1.5) {
    return detail::ln_gamma_1p(x - 1.0);
  }
  if (x <= 2.5) {
    return std::log1p(x - 2.0) + detail::ln_gamma_1p(x - 2.0);
  }
  if (x < 13.0) {
    // Shift down into [1.5, 2.5]: Gamma(x) = (x-1)...(x-n) Gamma(x-n).
    double prod = 1.0;
    double y = x;
    while (y > 2.5) {
      y -= 1.0;
      prod *= y;
    }
    return std::log(prod) + std::log1p(y - 2.0) + detail::ln_gamma_1p(y - 2.0);
  }
  return detail::ln_gamma_asymptotic(x);
}

inline double ln_gamma(PositiveReal x) { return ln_gamma(x.value()); }

/// psi(x) - log(x). Stays accurate for large x where both terms are close.
inline double digamma_minus_log(double x) {
  detail::require_positive(x, "digamma_minus_log");
  if (x >= 10.0) {
    return detail::digamma_minus_log_asymptotic(x);
  }
  double shift = 0.0;
  double y = x;
  while (y < 10.0) {
    shift += 1.0 / y;
    y += 1.0;
  }
  return detail::digamma_minus_log_asymptotic(y) + std::log(y / x) - shift;
}

/// Digamma psi(x) = d/dx ln Gamma(x), x > 0.
inline double digamma(double x) {
  detail::require_positive(x, "digamma");
  double shift = 0.0;
  double y = x;
  while (y < 10.0) {
    shift += 1.0 / y;
    y += 1.0;
  }
  return std::log(y) + detail::digamma_minus_log_asymptotic(y) - shift;
}

inline double digamma(PositiveReal x) { return digamma(x.value()); }

/// psi'(x) - 1/x, which behaves like 1/(2x^2) for large x.
inline double trigamma_minus_inv(double x) {
  detail::require_positive(x, "trigamma_minus_inv");
  if (x >= 10.0) {
    return detail::trigamma_minus_inv_asymptotic(x);
  }
  double shift = 0.0;
  double y = x;
  while (y < 10.0) {
    shift += 1.0 / (y * y);
    y += 1.0;
  }
  return detail::trigamma_minus_inv_asymptotic(y) + 1.0 / y - 1.0 / x + shift;
}

/// Trigamma psi'(x), x > 0.
inline double trigamma(double x) {
  detail::require_positive(x, "trigamma");
  double shift = 0.0;
  double y = x;
  while (y < 10.0) {
    shift += 1.0 / (y * y);
    y += 1.0;
  }
  return 1.0 / y + detail::trigamma_minus_inv_asymptotic(y) + shift;
}

inline double trigamma(PositiveReal x) { return trigamma(x.value()); }

}  // namespace semient
