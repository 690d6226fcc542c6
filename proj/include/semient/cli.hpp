#pragma once

// Command-line front end: estimate, simulate, benchmark and rainfall.
// run_cli returns the process exit status:
//   0 success, 1 usage error, 2 numerical failure,
//   3 fewer than 90% of benchmark runs succeeded.

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semient/data_io.hpp"
#include "semient/density.hpp"
#include "semient/error.hpp"
#include "semient/format.hpp"
#include "semient/simulate.hpp"
#include "semient/solvers.hpp"

namespace semient {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitTooManyFailures = 3;

/// Minimum share of successful benchmark runs for a zero exit status.
inline constexpr double kMinSuccessRate = 0.9;

namespace cli_detail {

struct EstimateFlags {
  std::string family;
  std::optional<double> alpha1;
  std::optional<double> alpha2;
  std::string data;
  std::string station;
  std::string method = "aem";
  std::optional<double> gamma0;
  double eps = 1e-8;
  int max_iter = 200;
  std::string format = "csv";
  std::string trace;
};

struct BenchmarkFlags {
  std::string dgp;
  std::optional<double> gamma;
  std::optional<double> rate;
  std::optional<double> shape;
  std::optional<double> scale;
  std::optional<int> table;
  std::size_t n = 1000;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  double eps = 1e-8;
  int max_iter = 200;
  std::string methods = "aem,politis,twopart";
  std::string out = "./out";
};

struct RainfallFlags {
  std::string data;
  double max_zero_prop = 0.6;
  std::string layout = "auto";
  double eps = 1e-8;
  int max_iter = 200;
  std::string out = "./out";
};

/// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline CsvLayout parse_layout(const std::string& s) {
  if (s == "long") return CsvLayout::Long;
  if (s == "wide") return CsvLayout::Wide;
  return CsvLayout::Auto;
}

// rate,shape,scale columns with the unused ones left empty.
inline std::string component_fields(const ContinuousComponent& g) {
  if (const auto* e = std::get_if<Exponential>(&g)) return format_double(e->rate) + ",,";
  const auto& gm = std::get<Gamma>(g);
  return "," + format_double(gm.shape) + "," + format_double(gm.scale);
}

inline void print_solution(std::ostream& out, const MaxEntSolution& s, ConstraintFamily family,
                           const std::string& format) {
  const auto mom = two_part_moments(s.density);
  const auto& d = s.diagnostics;
  if (format == "json") {
    nlohmann::ordered_json j;
    j["method"] = std::string(to_string(s.method));
    j["family"] = std::string(to_string(family));
    j["gamma"] = s.density.gamma();
    if (const auto* e = std::get_if<Exponential>(&s.density.g())) {
      j["rate"] = static_cast<double>(e->rate);
    } else {
      const auto& gm = std::get<Gamma>(s.density.g());
      j["shape"] = static_cast<double>(gm.shape);
      j["scale"] = static_cast<double>(gm.scale);
    }
    j["h_g"] = s.h_g;
    j["h_p"] = s.h_p;
    j["mean"] = mom.mean;
    j["variance"] = mom.variance;
    j["lambda0"] = s.multipliers.lambda0;
    j["lambda1"] = s.multipliers.lambda1;
    j["lambda2"] = s.multipliers.lambda2 ? nlohmann::ordered_json(*s.multipliers.lambda2) : nullptr;
    j["iterations"] = d.iterations;
    j["residual"] = d.residual && std::isfinite(*d.residual) ? nlohmann::ordered_json(*d.residual) : nullptr;
    j["converged"] = d.converged;
    j["feasibility_halvings"] = d.feasibility_halvings;
    j["averaged_fallback"] = d.averaged_fallback;
    out << j.dump(2) << '\n';
    return;
  }
  out << "method,family,gamma,rate,shape,scale,h_g,h_p,mean,variance,lambda0,lambda1,lambda2,iterations,residual,"
         "converged,feasibility_halvings,averaged_fallback\n";
  out << to_string(s.method) << ',' << to_string(family) << ',' << format_double(s.density.gamma()) << ','
      << component_fields(s.density.g()) << ',' << format_double(s.h_g) << ',' << format_double(s.h_p)
      << ',' << format_double(mom.mean) << ',' << format_double(mom.variance) << ','
      << format_double(s.multipliers.lambda0) << ',' << format_double(s.multipliers.lambda1) << ','
      << format_optional(s.multipliers.lambda2) << ',' << d.iterations << ',' << format_optional(d.residual) << ','
      << (d.converged ? "true" : "false") << ',' << d.feasibility_halvings << ','
      << (d.averaged_fallback ? "true" : "false") << '\n';
}

inline std::string trace_table(const ConvergenceTrace& t) {
  std::string s = "k,gamma,h_g,h_p\n";
  for (const auto& r : t) {
    s += std::to_string(r.k) + ',' + format_double(r.gamma) + ',' + format_double(r.h_g) + ',' +
         format_double(r.h_p) + '\n';
  }
  return s;
}

inline int cmd_estimate(const EstimateFlags& f, std::ostream& out, std::ostream& err) {
  const ConstraintFamily family = f.family == "exp" ? ConstraintFamily::MeanOnly : ConstraintFamily::MeanAndLogMean;
  const auto method = parse_method(f.method);
  if (!method) throw UsageError("unknown method " + f.method);

  std::optional<ConstraintSet> constraints;
  std::optional<double> zero_prop;
  if (!f.data.empty()) {
    auto stations = load_stations(f.data);
    const StationSeries* chosen = nullptr;
    if (!f.station.empty()) {
      for (const auto& s : stations) {
        if (s.station_id == f.station) chosen = &s;
      }
      if (!chosen) throw UsageError("station " + f.station + " not found in " + f.data);
    } else if (stations.size() == 1) {
      chosen = &stations.front();
    } else {
      throw UsageError("--data holds " + std::to_string(stations.size()) + " stations; choose one with --station");
    }
    const auto sc = sample_constraints(chosen->values, family);
    constraints = sc.constraints;
    zero_prop = sc.zero_proportion;
  } else {
    if (!f.alpha1) throw UsageError("either --alpha1 or --data is required");
    if (family == ConstraintFamily::MeanOnly) {
      if (f.alpha2) throw UsageError("--alpha2 applies to --family gamma only");
      constraints = ConstraintSet::mean_only(*f.alpha1);
    } else {
      if (!f.alpha2) throw UsageError("--family gamma requires --alpha2");
      constraints = ConstraintSet::mean_and_log_mean(*f.alpha1, *f.alpha2);
    }
  }
  if (*method == Method::TwoPartEM && !zero_prop) {
    if (!f.gamma0) throw UsageError("twopart needs --data or an explicit --gamma0 as the zero proportion");
    zero_prop = *f.gamma0;
  }

  const SolverConfig cfg = f.gamma0 ? SolverConfig::starting_at(*f.gamma0, f.eps, f.max_iter)
                                    : feasible_start(*constraints, zero_prop.value_or(0.5), f.eps, f.max_iter);
  const MaxEntSolution s = estimate(*constraints, *method, cfg, zero_prop);
  print_solution(out, s, family, f.format);
  if (!f.trace.empty()) write_text_file(f.trace, trace_table(s.trace));
  (void)err;
  return kExitOk;
}

inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> methods;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = parse_method(item);
    if (!m) throw UsageError("unknown method " + item);
    methods.push_back(*m);
  }
  if (methods.empty()) throw UsageError("--methods is empty");
  return methods;
}

inline std::vector<Dgp> benchmark_dgps(const BenchmarkFlags& f) {
  if (f.table) {
    if (!f.dgp.empty() || f.gamma || f.rate || f.shape || f.scale) {
      throw UsageError("--table excludes the single-DGP flags");
    }
    if (*f.table == 1) return table1_dgps();
    if (*f.table == 2) return table2_dgps();
    throw UsageError("--table must be 1 or 2");
  }
  if (f.dgp.empty()) throw UsageError("--dgp or --table is required");
  if (!f.gamma) throw UsageError("--gamma is required");
  if (f.dgp == "exp") {
    if (!f.rate || f.shape || f.scale) throw UsageError("--dgp exp takes --rate only");
    return {Dgp::two_part_exponential(*f.gamma, *f.rate)};
  }
  if (!f.shape || !f.scale || f.rate) throw UsageError("--dgp gamma takes --shape and --scale");
  return {Dgp::two_part_gamma(*f.gamma, *f.shape, *f.scale)};
}

inline int cmd_benchmark(const BenchmarkFlags& f, std::ostream& out, std::ostream& err) {
  const auto methods = parse_methods(f.methods);
  const auto dgps = benchmark_dgps(f);
  std::vector<BenchmarkReport> reports;
  std::size_t ok = 0, total = 0;
  for (const auto& d : dgps) {
    SimConfig cfg{d, f.n, f.reps, f.seed, f.eps, f.max_iter, 0};
    reports.push_back(run_benchmark(cfg, methods));
    for (const auto& row : reports.back().rows) {
      ok += row.succeeded;
      total += row.succeeded + row.failed;
    }
  }
  write_benchmark_outputs(reports, f.out);

  out << "dgp,method,succeeded,failed,mean_entropy,mean_pct_dev_h,mean_pct_dev_var\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out << csv_field(r.dgp.label()) << ',' << to_string(row.method) << ',' << row.succeeded << ',' << row.failed
          << ',' << format_double(row.mean_entropy) << ',' << format_optional(row.mean_pct_dev_h) << ','
          << format_optional(row.mean_pct_dev_var) << '\n';
    }
  }
  std::size_t failures = 0;
  for (const auto& r : reports) failures += r.failures.size();
  if (failures > 0) {
    err << failures << " failed runs recorded in " << (std::filesystem::path(f.out) / "report.json").string() << '\n';
  }
  const double rate = total == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(total);
  return rate >= kMinSuccessRate ? kExitOk : kExitTooManyFailures;
}

inline int cmd_rainfall(const RainfallFlags& f, std::ostream& out, std::ostream& err) {
  if (!(f.max_zero_prop > 0.0 && f.max_zero_prop <= 1.0)) throw UsageError("--max-zero-prop must lie in (0,1]");
  const auto stations = load_stations(f.data, parse_layout(f.layout));
  AnalysisConfig cfg;
  cfg.eps = f.eps;
  cfg.max_iter = f.max_iter;
  const auto results = rainfall_pipeline(stations, f.max_zero_prop, cfg);
  const std::filesystem::path dir(f.out);
  write_text_file(dir / "station_results.csv", station_results_csv(results));
  write_text_file(dir / "station_results.json", station_results_json(results));

  std::size_t dropped = 0, comparable = 0, above5 = 0, above1 = 0, negative = 0;
  for (const auto& r : results) {
    if (r.status.rfind("dropped:", 0) == 0) ++dropped;
    if (r.pct_gain) {
      ++comparable;
      if (*r.pct_gain > 5.0) ++above5;
      if (*r.pct_gain > 1.0) ++above1;
      if (*r.pct_gain < 0.0) ++negative;
    }
  }
  out << "stations: " << results.size() << '\n'
      << "dropped by filter: " << dropped << '\n'
      << "analysed: " << results.size() - dropped << '\n'
      << "comparable: " << comparable << '\n'
      << "pct_gain > 5: " << above5 << '\n'
      << "pct_gain > 1: " << above1 << '\n'
      << "pct_gain < 0: " << negative << '\n';
  (void)err;
  return kExitOk;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Maximum-entropy estimation for semi-continuous data", "semient"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "semient 0.1.0");

  EstimateFlags ef;
  auto* est = app.add_subcommand("estimate", "Fit the MaxEnt density for given constraints or data");
  est->add_option("--family", ef.family, "Constraint family")->required()->check(CLI::IsMember({"exp", "gamma"}));
  auto* a1 = est->add_option("--alpha1", ef.alpha1, "E[Y] including zeros");
  auto* a2 = est->add_option("--alpha2", ef.alpha2, "E[log Y] with zeros contributing 0");
  auto* data = est->add_option("--data", ef.data, "CSV with station series");
  est->add_option("--station", ef.station, "Station to use from --data")->needs(data);
  data->excludes(a1)->excludes(a2);
  est->add_option("--method", ef.method, "aem, politis, twopart, closed-form or direct")
      ->check(CLI::IsMember({"aem", "politis", "twopart", "closed-form", "direct"}));
  est->add_option("--gamma0", ef.gamma0, "Starting point mass")->check(CLI::Range(0.0, 1.0));
  est->add_option("--eps", ef.eps, "Entropy-change tolerance")->check(CLI::PositiveNumber);
  est->add_option("--max-iter", ef.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  est->add_option("--format", ef.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  est->add_option("--trace", ef.trace, "Write the iteration trace to this CSV file");

  BenchmarkFlags bf;
  auto add_bench_flags = [&bf](CLI::App* sub, bool allow_table) {
    sub->add_option("--dgp", bf.dgp, "exp or gamma")->check(CLI::IsMember({"exp", "gamma"}));
    sub->add_option("--gamma", bf.gamma, "Point mass of the DGP");
    sub->add_option("--rate", bf.rate, "Exponential rate");
    sub->add_option("--shape", bf.shape, "Gamma shape");
    sub->add_option("--scale", bf.scale, "Gamma scale");
    if (allow_table) sub->add_option("--table", bf.table, "Run every row of simulation table 1 or 2");
    sub->add_option("--n", bf.n, "Sample size")->check(CLI::PositiveNumber);
    sub->add_option("--reps", bf.reps, "Replications")->check(CLI::PositiveNumber);
    sub->add_option("--seed", bf.seed, "Random seed");
    sub->add_option("--eps", bf.eps, "Entropy-change tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", bf.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--methods", bf.methods, "Comma-separated methods");
    sub->add_option("--out", bf.out, "Output directory");
  };
  auto* sim = app.add_subcommand("simulate", "Benchmark one DGP");
  add_bench_flags(sim, false);
  auto* bench = app.add_subcommand("benchmark", "Benchmark one DGP or a whole simulation table");
  add_bench_flags(bench, true);

  RainfallFlags rf;
  auto* rain = app.add_subcommand("rainfall", "Per-station comparison on daily series");
  rain->add_option("--data", rf.data, "Station CSV (long or wide)")->required();
  rain->add_option("--max-zero-prop", rf.max_zero_prop, "Drop stations with at least this share of zeros");
  rain->add_option("--layout", rf.layout, "auto, long or wide")->check(CLI::IsMember({"auto", "long", "wide"}));
  rain->add_option("--eps", rf.eps, "Entropy-change tolerance")->check(CLI::PositiveNumber);
  rain->add_option("--max-iter", rf.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  rain->add_option("--out", rf.out, "Output directory");

  std::vector<std::string> argv_store{"semient"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run 'semient --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (est->parsed()) return cmd_estimate(ef, out, err);
    if (sim->parsed() || bench->parsed()) return cmd_benchmark(bf, out, err);
    if (rain->parsed()) return cmd_rainfall(rf, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.trace() && !e.trace()->empty()) {
      const auto& last = e.trace()->back();
      err << "trace: " << e.trace()->size() << " records, last k=" << last.k << " gamma=" << format_double(last.gamma)
          << " h_p=" << format_double(last.h_p) << '\n';
    }
    return e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Parse || e.kind() == ErrorKind::NegativeValue
               ? kExitUsage
               : kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace semient
