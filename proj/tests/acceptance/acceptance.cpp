// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "semient/semient.hpp"

using namespace semient;
namespace fs = std::filesystem;

namespace {

constexpr double kEps = 1e-15;
constexpr std::uint64_t kSeed = 7;

int failures = 0;

void verdict(int criterion, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Largest stationarity residual over converged AEM runs, with h' by central
/// differences of step 1e-6.
struct ResidualScan {
  double worst = 0.0;
  std::size_t runs = 0;

  void add(const ConstraintSet& c, const MaxEntSolution& s) {
    if (s.method != Method::AEM || !s.diagnostics.converged) return;
    const double g = s.density.gamma();
    constexpr double step = 1e-6;
    const double hp = (h_of_gamma(c, g + step) - h_of_gamma(c, g - step)) / (2.0 * step);
    worst = std::max(worst, std::abs(outer_stationarity(g, h_of_gamma(c, g), hp)));
    ++runs;
  }

  void add(const BenchmarkReport& r) {
    for (const auto& rep : r.details) {
      if (!rep.constraints) continue;
      for (const auto& o : rep.outcomes) {
        if (o.solution) add(rep.constraints->constraints, *o.solution);
      }
    }
  }
};

SimConfig study_config(const Dgp& dgp) {
  SimConfig cfg{dgp};
  cfg.n = 1000;
  cfg.replications = 100;
  cfg.seed = kSeed;
  cfg.eps = kEps;
  return cfg;
}

std::vector<BenchmarkReport> run_table(const std::vector<Dgp>& dgps) {
  std::vector<BenchmarkReport> out;
  for (const auto& d : dgps) out.push_back(run_benchmark(study_config(d), study_methods()));
  return out;
}

void criterion1(ResidualScan& scan) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ua(0.05, 20.0);
  double worst = 0.0;
  int failed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 50; ++i) {
    const double a = ua(rng);
    const auto c = ConstraintSet::mean_only(a);
    try {
      const auto s = aem(c, feasible_start(c, 0.5, kEps));
      scan.add(c, s);
      const double exact = ((2.0 + a) - std::sqrt((2.0 + a) * (2.0 + a) - 4.0)) / 2.0;
      worst = std::max(worst, std::abs(s.density.gamma() - exact));
    } catch (const Error&) {
      ++failed;
    }
  }
  const double secs = seconds_since(t0);
  verdict(1, failed == 0 && worst <= 1e-6 && secs < 1.0,
          "max |gamma - closed form| = " + fmt(worst) + ", failures " + std::to_string(failed) + ", " + fmt(secs) +
              " s");
}

std::vector<BenchmarkReport> criterion2(ResidualScan& scan) {
  const double reference_aem[] = {0.0, -0.2, -0.1, -0.1, -0.3, 0.0};
  const double reference_politis[] = {-3.2, -6.8, -4.5, -7.9, -8.1, -11.1};
  const double reference_twopart[] = {-6.2, -33.8, -0.5, -5.2, -22.8, -7.4};
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = run_table(table1_dgps());
  const double secs = seconds_since(t0);
  bool ok = secs < 120.0;
  std::ostringstream detail;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto* a = reports[i].row(Method::AEM);
    const auto* p = reports[i].row(Method::AEMPolitis);
    const auto* t = reports[i].row(Method::TwoPartEM);
    const bool row_ok = a->mean_pct_dev_h && p->mean_pct_dev_h && t->mean_pct_dev_h &&
                        std::abs(*a->mean_pct_dev_h - reference_aem[i]) <= 1.0 && *p->mean_pct_dev_h < 0.0 &&
                        std::abs(*p->mean_pct_dev_h - reference_politis[i]) <= 4.0 &&
                        (*t->mean_pct_dev_h < 0.0) == (reference_twopart[i] < 0.0);
    ok = ok && row_ok;
    scan.add(reports[i]);
    detail << " [" << reports[i].dgp.label() << " aem " << fmt(a->mean_pct_dev_h.value_or(NAN), 3) << " politis "
           << fmt(p->mean_pct_dev_h.value_or(NAN), 3) << " twopart " << fmt(t->mean_pct_dev_h.value_or(NAN), 3)
           << (row_ok ? "" : " MISMATCH") << "]";
  }
  verdict(2, ok, fmt(secs) + " s" + detail.str());
  return reports;
}

std::vector<BenchmarkReport> criterion3(ResidualScan& scan) {
  const double reference[] = {0.89, 1.76, 2.08, 1.85, 1.51, 2.17, 2.63};
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = run_table(table2_dgps());
  const double secs = seconds_since(t0);
  bool ok = secs < 300.0;
  std::ostringstream detail;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double a = reports[i].row(Method::AEM)->mean_entropy;
    const double p = reports[i].row(Method::AEMPolitis)->mean_entropy;
    const double t = reports[i].row(Method::TwoPartEM)->mean_entropy;
    const bool row_ok = std::abs(a - reference[i]) <= 0.05 && a >= p && a >= t;
    ok = ok && row_ok;
    scan.add(reports[i]);
    detail << " [" << reports[i].dgp.label() << " aem " << fmt(a) << " politis " << fmt(p) << " twopart " << fmt(t)
           << (row_ok ? "" : " MISMATCH") << "]";
  }
  verdict(3, ok, fmt(secs) + " s" + detail.str());
  return reports;
}

void criterion4() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ug(0.01, 0.99);
  std::uniform_real_distribution<double> ulog(std::log(0.1), std::log(20.0));
  std::uniform_real_distribution<double> ushape(0.3, 15.0);
  boost::math::quadrature::tanh_sinh<double> integrator;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double g = ug(rng);
    const ContinuousComponent comp =
        (i % 2 == 0) ? ContinuousComponent{Exponential{PositiveReal(std::exp(ulog(rng)))}}
                     : ContinuousComponent{Gamma{PositiveReal(ushape(rng)), PositiveReal(std::exp(ulog(rng)))}};
    const SemiContinuousDensity d(g, comp);
    // -int f log f over (0, inf) via y = t / (1 - t)
    auto integrand = [&](double t) {
      if (t <= 0.0 || t >= 1.0) return 0.0;
      const double y = t / (1.0 - t);
      const double f = density_at(d, y).continuous_density;
      if (!(f > 0.0) || !std::isfinite(f)) return 0.0;
      return -f * std::log(f) / ((1.0 - t) * (1.0 - t));
    };
    const double quad = -g * std::log(g) + integrator.integrate(integrand, 0.0, 1.0, 1e-13);
    worst = std::max(worst, std::abs(quad - mixture_entropy(g, entropy(comp))));
  }
  verdict(4, worst <= 1e-6, "max |quadrature - decomposition| over 200 densities = " + fmt(worst));
}

void criterion5(const ResidualScan& scan) {
  verdict(5, scan.runs > 0 && scan.worst <= 1e-5,
          "max stationarity residual " + fmt(scan.worst) + " over " + std::to_string(scan.runs) + " converged AEM runs");
}

void criterion6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ulogk(std::log(0.05), std::log(200.0));
  std::uniform_real_distribution<double> ulogt(std::log(0.01), std::log(100.0));
  std::uniform_real_distribution<double> ug(0.01, 0.99);
  double worst = 0.0;
  int failed = 0;
  for (int i = 0; i < 1000; ++i) {
    const double k = std::exp(ulogk(rng)), t = std::exp(ulogt(rng)), g = ug(rng);
    const double q = 1.0 - g;
    const auto c = ConstraintSet::mean_and_log_mean(q * k * t, q * (digamma(k) + std::log(t)));
    try {
      const auto s = inner_gamma(c, g);
      const auto& gm = std::get<Gamma>(s.g);
      worst = std::max({worst, std::abs(gm.shape / k - 1.0), std::abs(gm.scale / t - 1.0)});
    } catch (const Error&) {
      ++failed;
    }
  }
  verdict(6, failed == 0 && worst <= 1e-8,
          "max relative error " + fmt(worst) + " over 1000 triples, failures " + std::to_string(failed));
}

void criterion7(const std::vector<BenchmarkReport>& table2) {
  double worst = 0.0;
  std::size_t agreed = 0, nonconverged = 0;
  std::ostringstream per_row;
  for (const auto& r : table2) {
    std::size_t row_nc = 0;
    for (const auto& rep : r.details) {
      if (!rep.constraints) continue;
      for (const auto& o : rep.outcomes) {
        if (o.method != Method::AEM || !o.solution || !o.solution->diagnostics.converged) continue;
        const auto& c = rep.constraints->constraints;
        try {
          const auto d = gamma_direct(c, DirectSeed::from(*o.solution));
          const auto& ga = std::get<Gamma>(o.solution->density.g());
          const auto& gd = std::get<Gamma>(d.density.g());
          worst = std::max({worst, std::abs(d.density.gamma() - o.solution->density.gamma()),
                            std::abs(gd.shape - ga.shape) / std::max(1.0, ga.shape.value()),
                            std::abs(gd.scale - ga.scale) / std::max(1.0, ga.scale.value())});
          ++agreed;
        } catch (const Error&) {
          ++nonconverged;
          ++row_nc;
        }
      }
    }
    per_row << " " << r.dgp.label() << ":" << row_nc;
  }
  verdict(7, agreed > 0 && worst <= 1e-6,
          "max deviation " + fmt(worst) + " over " + std::to_string(agreed) + " runs; direct system did not converge in " +
              std::to_string(nonconverged) + " runs (per row" + per_row.str() + ")");
}

void criterion8(const std::vector<BenchmarkReport>& table1) {
  bool ok = true;
  std::ostringstream detail;
  for (const auto& r : table1) {
    // mean closed-form entropy over the replications' own constraints
    double truth = 0.0;
    std::size_t count = 0;
    for (const auto& rep : r.details) {
      if (!rep.constraints) continue;
      truth += exp_closed_form(rep.constraints->constraints.alpha1()).h_p;
      ++count;
    }
    truth /= static_cast<double>(count);
    const auto& at = r.row(Method::AEM)->trace;
    const auto& pt = r.row(Method::AEMPolitis)->trace;
    int reached = -1000;
    for (const auto& p : at) {
      if (std::abs(p.mean_entropy - truth) <= kEps) {
        reached = p.iteration;
        break;
      }
    }
    const double plateau = pt.back().mean_entropy;
    const bool row_ok = reached != -1000 && reached <= 25 && truth - plateau > 10.0 * kEps;
    ok = ok && row_ok;
    detail << " [" << r.dgp.label() << " aem within eps at k=" << (reached == -1000 ? std::string("never")
                                                                                    : std::to_string(reached))
           << ", politis gap " << fmt(truth - plateau) << "]";
  }
  verdict(8, ok, "eps " + fmt(kEps) + detail.str());
}

void criterion9(const fs::path& out) {
  std::vector<StationSeries> stations;
  std::mt19937_64 prng(9);
  std::uniform_real_distribution<double> ug(0.05, 0.55), ushape(0.4, 3.0), uscale(1.0, 15.0);
  for (int i = 0; i < 100; ++i) {
    const auto dgp = Dgp::two_part_gamma(ug(prng), ushape(prng), uscale(prng));
    Rng rng = replication_stream(kSeed, 10'000 + static_cast<std::uint64_t>(i));
    StationSeries s{"S" + std::to_string(i), sample(dgp, 730, rng), {}, 0, 0};
    s.recount();
    stations.push_back(std::move(s));
  }
  AnalysisConfig cfg;
  cfg.eps = kEps;
  const auto results = rainfall_pipeline(stations, 0.6, cfg);
  write_text_file(out / "station_results.csv", station_results_csv(results));
  std::size_t comparable = 0, negative = 0, above1 = 0;
  double worst = INFINITY;
  for (const auto& r : results) {
    if (!r.pct_gain) continue;
    ++comparable;
    worst = std::min(worst, *r.pct_gain);
    if (*r.pct_gain < 0.0) ++negative;
    if (*r.pct_gain > 1.0) ++above1;
  }
  verdict(9, comparable > 0 && negative == 0 && above1 > 0,
          std::to_string(comparable) + " of 100 stations comparable, " + std::to_string(negative) +
              " with negative gain (min " + fmt(worst) + "%), " + std::to_string(above1) + " above 1%");
}

void criterion10(const std::vector<BenchmarkReport>& table1, const std::vector<BenchmarkReport>& table2,
                 const fs::path& out) {
  auto all = table1;
  all.insert(all.end(), table2.begin(), table2.end());
  write_benchmark_outputs(all, out / "run1");
  auto again = run_table(table1_dgps());
  const auto again2 = run_table(table2_dgps());
  again.insert(again.end(), again2.begin(), again2.end());
  write_benchmark_outputs(again, out / "run2");
  bool ok = true;
  std::string detail;
  for (const char* f : {"report.csv", "report.json", "trace.csv"}) {
    const std::string a = slurp(out / "run1" / f), b = slurp(out / "run2" / f);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string(" ") + f + (same ? " identical" : " DIFFERS");
  }
  verdict(10, ok, "rerun with seed " + std::to_string(kSeed) + ":" + detail);
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--out") out = argv[i + 1];
  }
  try {
    fs::create_directories(out);
    ResidualScan scan;
    criterion1(scan);
    const auto table1 = criterion2(scan);
    const auto table2 = criterion3(scan);
    criterion4();
    criterion5(scan);
    criterion6();
    criterion7(table2);
    criterion8(table1);
    criterion9(out);
    criterion10(table1, table2, out);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
