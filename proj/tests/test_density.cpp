#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>

#include "semient/density.hpp"
#include "semient/simulate.hpp"

using namespace semient;

namespace {

// -int_0^inf f log f with f = (1-gamma) g, the continuous part of p, by
// tanh-sinh on t in (0,1) with y = t/(1-t).
double continuous_entropy_quadrature(const SemiContinuousDensity& d) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto integrand = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double y = t / (1.0 - t);
    const double jac = 1.0 / ((1.0 - t) * (1.0 - t));
    const double f = density_at(d, y).continuous_density;
    if (!(f > 0.0) || !std::isfinite(f)) return 0.0;
    return -f * std::log(f) * jac;
  };
  return integrator.integrate(integrand, 0.0, 1.0, 1e-13);
}

double continuous_mass_quadrature(const SemiContinuousDensity& d) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto integrand = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double y = t / (1.0 - t);
    return density_at(d, y).continuous_density / ((1.0 - t) * (1.0 - t));
  };
  return integrator.integrate(integrand, 0.0, 1.0, 1e-13);
}

}  // namespace

TEST(ConstraintSet, Invariants) {
  EXPECT_THROW(ConstraintSet::mean_only(0.0), Error);
  EXPECT_THROW(ConstraintSet::mean_only(-1.0), Error);
  EXPECT_THROW(ConstraintSet::mean_and_log_mean(1.0, std::nan("")), Error);
  const auto c = ConstraintSet::mean_and_log_mean(2.0, 0.1);
  EXPECT_EQ(c.family(), ConstraintFamily::MeanAndLogMean);
  EXPECT_DOUBLE_EQ(*c.alpha2(), 0.1);
  EXPECT_FALSE(ConstraintSet::mean_only(1.0).alpha2().has_value());
}

TEST(SemiContinuousDensity, RejectsBoundaryMass) {
  EXPECT_THROW(SemiContinuousDensity(0.0, Exponential{PositiveReal(1.0)}), Error);
  EXPECT_THROW(SemiContinuousDensity(1.0, Exponential{PositiveReal(1.0)}), Error);
  EXPECT_THROW(Exponential{PositiveReal(-1.0)}, Error);
}

TEST(MixtureEntropy, Examples) {
  EXPECT_NEAR(mixture_entropy(0.5, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(mixture_entropy(0.1, 1.0), 1.2250829733914482395, 1e-14);
  EXPECT_NEAR(mixture_entropy(0.9, 1.0), 0.42508297339144823951, 1e-14);
  EXPECT_THROW(mixture_entropy(0.0, 1.0), Error);
  EXPECT_THROW(mixture_entropy(1.0, 1.0), Error);
}

TEST(ExponentialEntropy, Examples) {
  EXPECT_DOUBLE_EQ(exponential_entropy(PositiveReal(1.0)), 1.0);
  EXPECT_NEAR(exponential_entropy(PositiveReal(std::exp(1.0))), 0.0, 1e-15);
  EXPECT_NEAR(exponential_entropy(PositiveReal(0.5)), 1.0 + std::log(2.0), 1e-15);
}

TEST(GammaEntropy, Examples) {
  EXPECT_NEAR(gamma_entropy(PositiveReal(1.0), PositiveReal(1.0)), 1.0, 1e-14);
  EXPECT_NEAR(gamma_entropy(PositiveReal(1.0), PositiveReal(2.0)), 1.0 + std::log(2.0), 1e-14);
  EXPECT_NEAR(gamma_entropy(PositiveReal(3.0), PositiveReal(0.5)), 1.1544313298030657212, 1e-13);
}

TEST(TwoPartMoments, Examples) {
  {
    const auto m = two_part_moments(SemiContinuousDensity(1e-12, Exponential{PositiveReal(1.0)}));
    EXPECT_NEAR(m.mean, 1.0, 1e-11);
    EXPECT_NEAR(m.variance, 1.0, 1e-11);
  }
  {
    const auto m = two_part_moments(SemiContinuousDensity(0.1, Exponential{PositiveReal(0.5)}));
    EXPECT_NEAR(m.mean, 1.8, 1e-14);
    EXPECT_NEAR(m.variance, 3.96, 1e-13);
  }
  {
    const auto m = two_part_moments(SemiContinuousDensity(0.5, Exponential{PositiveReal(1.0)}));
    EXPECT_NEAR(m.mean, 0.5, 1e-15);
    EXPECT_NEAR(m.variance, 0.75, 1e-15);
  }
  {
    // (1-g) k t^2 (1 + k g) for Gamma(3, 0.5), g = 0.1
    const auto m = two_part_moments(SemiContinuousDensity(0.1, Gamma{PositiveReal(3.0), PositiveReal(0.5)}));
    EXPECT_NEAR(m.mean, 1.35, 1e-14);
    EXPECT_NEAR(m.variance, 0.9 * 3.0 * 0.25 * 1.3, 1e-14);
  }
}

TEST(TwoPartMoments, MatchMonteCarlo) {
  const struct {
    Dgp dgp;
  } cases[] = {{Dgp::two_part_exponential(0.5, 1.0)},
               {Dgp::two_part_exponential(0.1, 0.5)},
               {Dgp::two_part_gamma(0.4, 3.0, 0.5)},
               {Dgp::two_part_gamma(0.2, 0.6, 2.0)}};
  for (const auto& tc : cases) {
    Rng rng = replication_stream(99, 0);
    const auto ys = sample(tc.dgp, 1'000'000, rng);
    double s1 = 0.0, s2 = 0.0;
    for (double y : ys) {
      s1 += y;
      s2 += y * y;
    }
    const double n = static_cast<double>(ys.size());
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    double s4 = 0.0;
    for (double y : ys) s4 += std::pow(y - mean, 4);
    const auto m = two_part_moments(tc.dgp.density());
    EXPECT_NEAR(mean, m.mean, 3.0 * std::sqrt(m.variance / n));
    // SE of the sample variance from the fourth central moment
    const double var_se = std::sqrt((s4 / n - var * var) / n);
    EXPECT_NEAR(var, m.variance, 3.0 * var_se);
  }
}

TEST(DensityAt, Examples) {
  const SemiContinuousDensity d(0.3, Exponential{PositiveReal(1.0)});
  EXPECT_DOUBLE_EQ(density_at(d, 0.0).atom_mass, 0.3);
  EXPECT_DOUBLE_EQ(density_at(d, 0.0).continuous_density, 0.0);
  EXPECT_DOUBLE_EQ(density_at(d, 1.0).atom_mass, 0.0);
  EXPECT_NEAR(density_at(d, 1.0).continuous_density, 0.25751560882000962512, 1e-15);
  const SemiContinuousDensity dg(0.5, Gamma{PositiveReal(2.0), PositiveReal(1.0)});
  EXPECT_NEAR(density_at(dg, 2.0).continuous_density, 0.13533528323661269189, 1e-15);
  EXPECT_THROW(density_at(d, -0.1), Error);
}

TEST(EntropyDecomposition, MatchesQuadratureForRandomDensities) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ug(0.02, 0.95);
  std::uniform_real_distribution<double> ulog(std::log(0.2), std::log(10.0));
  std::uniform_real_distribution<double> ushape(0.4, 12.0);
  for (int i = 0; i < 60; ++i) {
    const double g = ug(rng);
    const ContinuousComponent comp = (i % 2 == 0) ? ContinuousComponent{Exponential{PositiveReal(std::exp(ulog(rng)))}}
                                                  : ContinuousComponent{Gamma{PositiveReal(ushape(rng)),
                                                                              PositiveReal(std::exp(ulog(rng)))}};
    const SemiContinuousDensity d(g, comp);
    const double quad = -g * std::log(g) + continuous_entropy_quadrature(d);
    EXPECT_NEAR(quad, mixture_entropy(g, entropy(comp)), 1e-6) << "case " << i;
    EXPECT_NEAR(g + continuous_mass_quadrature(d), 1.0, 1e-8) << "case " << i;
  }
}

TEST(Multipliers, ReproduceDensity) {
  const ContinuousComponent comp = Gamma{PositiveReal(2.5), PositiveReal(0.7)};
  const auto lam = multipliers_for(comp);
  for (double y : {0.1, 1.0, 3.0}) {
    const double via = std::exp(-1.0 - lam.lambda0 - lam.lambda1 * y - *lam.lambda2 * std::log(y));
    EXPECT_NEAR(via, pdf(comp, y), 1e-13);
  }
  const ContinuousComponent e = Exponential{PositiveReal(1.7)};
  const auto le = multipliers_for(e);
  EXPECT_NEAR(std::exp(-1.0 - le.lambda0 - le.lambda1 * 0.4), pdf(e, 0.4), 1e-14);
}
