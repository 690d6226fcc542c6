#pragma once

// Monte-Carlo harness: seeded two-part samples, constraint statistics from a
// sample, and replicated benchmarks of the estimation methods.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "semient/density.hpp"
#include "semient/error.hpp"
#include "semient/format.hpp"
#include "semient/solvers.hpp"

namespace semient {

/// Name of the generator recorded in every report.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64 seeded by splitmix64(seed, replication)";

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Pseudo-random stream with portable transforms on top of mt19937_64, so
/// draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : engine_(state) {}

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

  /// Standard normal by the Marsaglia polar method.
  double normal() noexcept {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  /// Gamma(shape, 1) by Marsaglia and Tsang; shapes below one are boosted
  /// with the U^(1/shape) transformation.
  double standard_gamma(double shape) noexcept {
    if (shape < 1.0) {
      for (;;) {
        const double x = standard_gamma(shape + 1.0) * std::exp(std::log(uniform()) / shape);
        if (x > 0.0) return x;
      }
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      const double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Stream for replication `replication`; depends on nothing else.
inline Rng replication_stream(std::uint64_t seed, std::uint64_t replication) {
  return Rng(splitmix64(splitmix64(seed) ^ (replication * 0xD1B54A32D192ED03ULL + 1)));
}

struct TwoPartExponential {
  double gamma;
  double rate;
};

struct TwoPartGamma {
  double gamma;
  double shape;
  double scale;
};

/// Data-generating process: an atom at zero with mass gamma plus an
/// exponential or gamma law on the positive reals.
class Dgp {
 public:
  static Dgp two_part_exponential(double gamma, double rate) {
    Dgp d(TwoPartExponential{gamma, rate});
    d.validate();
    return d;
  }
  static Dgp two_part_gamma(double gamma, double shape, double scale) {
    Dgp d(TwoPartGamma{gamma, shape, scale});
    d.validate();
    return d;
  }

  [[nodiscard]] const std::variant<TwoPartExponential, TwoPartGamma>& params() const noexcept { return p_; }
  [[nodiscard]] bool is_exponential() const noexcept { return std::holds_alternative<TwoPartExponential>(p_); }
  [[nodiscard]] double gamma() const noexcept {
    return std::visit([](const auto& p) { return p.gamma; }, p_);
  }

  [[nodiscard]] SemiContinuousDensity density() const {
    if (const auto* e = std::get_if<TwoPartExponential>(&p_)) {
      return SemiContinuousDensity(e->gamma, Exponential{PositiveReal(e->rate)});
    }
    const auto& g = std::get<TwoPartGamma>(p_);
    return SemiContinuousDensity(g.gamma, Gamma{PositiveReal(g.shape), PositiveReal(g.scale)});
  }

  /// Constraint family studied for this DGP: mean only for the exponential
  /// study, mean and log-mean for the gamma study.
  [[nodiscard]] ConstraintFamily family() const noexcept {
    return is_exponential() ? ConstraintFamily::MeanOnly : ConstraintFamily::MeanAndLogMean;
  }

  [[nodiscard]] std::string label() const {
    if (const auto* e = std::get_if<TwoPartExponential>(&p_)) {
      return "exp(gamma=" + format_double(e->gamma) + ";rate=" + format_double(e->rate) + ")";
    }
    const auto& g = std::get<TwoPartGamma>(p_);
    return "gamma(gamma=" + format_double(g.gamma) + ";shape=" + format_double(g.shape) +
           ";scale=" + format_double(g.scale) + ")";
  }

 private:
  explicit Dgp(std::variant<TwoPartExponential, TwoPartGamma> p) : p_(p) {}
  void validate() const { (void)density(); }

  std::variant<TwoPartExponential, TwoPartGamma> p_;
};

inline std::vector<double> sample(const Dgp& dgp, std::size_t n, Rng& rng) {
  std::vector<double> out;
  out.reserve(n);
  const double g = dgp.gamma();
  if (const auto* e = std::get_if<TwoPartExponential>(&dgp.params())) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(rng.uniform() < g ? 0.0 : rng.exponential(e->rate));
  } else {
    const auto& p = std::get<TwoPartGamma>(dgp.params());
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(rng.uniform() < g ? 0.0 : p.scale * rng.standard_gamma(p.shape));
    }
  }
  return out;
}

struct SampleConstraints {
  ConstraintSet constraints;
  double zero_proportion;
};

/// Empirical constraints: alpha1 is the full-sample mean and alpha2 the
/// full-sample mean of log y over positive values, zeros counting in the
/// denominator.
inline SampleConstraints sample_constraints(const std::vector<double>& data, ConstraintFamily family) {
  if (data.empty()) throw Error(ErrorKind::AllZeros, "empty sample");
  double sum = 0.0, sum_log = 0.0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = data[i];
    if (!(y >= 0.0) || !std::isfinite(y)) {
      throw Error(ErrorKind::NonNegativityViolation, "value at index " + std::to_string(i) + " is not a finite y >= 0");
    }
    if (y == 0.0) {
      ++zeros;
    } else {
      sum += y;
      sum_log += std::log(y);
    }
  }
  if (zeros == data.size()) throw Error(ErrorKind::AllZeros, "sample has no positive values");
  const double n = static_cast<double>(data.size());
  const double zp = static_cast<double>(zeros) / n;
  if (family == ConstraintFamily::MeanOnly) return {ConstraintSet::mean_only(sum / n), zp};
  return {ConstraintSet::mean_and_log_mean(sum / n, sum_log / n), zp};
}

inline double percent_deviation(double estimate, double truth) {
  if (truth == 0.0) throw Error(ErrorKind::ZeroTruth, "percent deviation against a zero truth");
  return 100.0 * (estimate - truth) / truth;
}

struct SimConfig {
  Dgp dgp;
  std::size_t n = 1000;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  /// Outer solver tolerance and iteration cap.
  double eps = 1e-8;
  int max_iter = 200;
  /// Worker threads; 0 means SEMIENT_THREADS or the hardware count.
  unsigned threads = 0;

  void validate() const {
    if (n < 1) throw Error(ErrorKind::Domain, "n must be >= 1");
    if (replications < 1) throw Error(ErrorKind::Domain, "replications must be >= 1");
    if (!(eps > 0.0)) throw Error(ErrorKind::Domain, "eps must be > 0");
    if (max_iter < 1) throw Error(ErrorKind::Domain, "max_iter must be >= 1");
  }
};

/// True MaxEnt reference for the exponential study: the closed form at
/// alpha1 = (1 - gamma) / rate.
struct Truth {
  double h_p;
  double variance;
  double gamma;
};

inline std::optional<Truth> benchmark_truth(const Dgp& dgp) {
  const auto* e = std::get_if<TwoPartExponential>(&dgp.params());
  if (!e) return std::nullopt;
  const MaxEntSolution s = exp_closed_form((1.0 - e->gamma) / e->rate);
  return Truth{s.h_p, two_part_moments(s.density).variance, s.density.gamma()};
}

struct MethodOutcome {
  Method method;
  std::optional<MaxEntSolution> solution;
  std::optional<ErrorKind> error;
  std::string message;
};

struct Replication {
  std::size_t index = 0;
  std::optional<SampleConstraints> constraints;
  /// Set when the sample itself could not be turned into constraints.
  std::optional<ErrorKind> sample_error;
  std::vector<MethodOutcome> outcomes;
};

struct TracePoint {
  int iteration;
  double mean_gamma;
  double mean_entropy;
};

struct MethodSummary {
  Method method;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::optional<double> mean_pct_dev_h;
  std::optional<double> mean_pct_dev_var;
  double mean_entropy = std::nan("");
  double mean_gamma = std::nan("");
  double mean_variance = std::nan("");
  double mean_iterations = std::nan("");
  std::vector<TracePoint> trace;
};

struct Failure {
  std::size_t replication;
  std::optional<Method> method;
  ErrorKind kind;
  std::string message;
};

struct BenchmarkReport {
  std::string rng_algorithm{kRngAlgorithm};
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t replications = 0;
  Dgp dgp;
  std::optional<Truth> truth;
  std::vector<MethodSummary> rows;
  std::vector<Failure> failures;
  /// Per-replication detail, ordered by replication index.
  std::vector<Replication> details;

  [[nodiscard]] const MethodSummary* row(Method m) const {
    for (const auto& r : rows) {
      if (r.method == m) return &r;
    }
    return nullptr;
  }
};

inline unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned t = requested;
  if (t == 0) {
    if (const char* env = std::getenv("SEMIENT_THREADS")) {
      t = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
  }
  if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(jobs, 1)));
}

/// Calls body(i) for i in [0, jobs) on up to `threads` workers. Each index
/// runs exactly once; results must be written to per-index slots.
template <class Body>
void parallel_for(std::size_t jobs, unsigned threads, Body&& body) {
  if (threads <= 1 || jobs <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// One replication: sample, constraints, every method from the same start.
inline Replication run_replication(const SimConfig& cfg, const std::vector<Method>& methods, std::size_t index) {
  Replication rep;
  rep.index = index;
  Rng rng = replication_stream(cfg.seed, index);
  const std::vector<double> data = sample(cfg.dgp, cfg.n, rng);
  try {
    rep.constraints = sample_constraints(data, cfg.dgp.family());
  } catch (const Error& e) {
    rep.sample_error = e.kind();
    return rep;
  }
  const auto& sc = *rep.constraints;
  for (Method m : methods) {
    MethodOutcome out{m, std::nullopt, std::nullopt, {}};
    try {
      const SolverConfig start = feasible_start(sc.constraints, sc.zero_proportion, cfg.eps, cfg.max_iter);
      out.solution = estimate(sc.constraints, m, start, sc.zero_proportion);
    } catch (const Error& e) {
      out.error = e.kind();
      out.message = e.what();
    }
    rep.outcomes.push_back(std::move(out));
  }
  return rep;
}

namespace detail {

// Pads each trace with its final record to the longest length and averages
// position by position. Iteration labels follow the first trace's indices.
inline std::vector<TracePoint> average_traces(const std::vector<const ConvergenceTrace*>& traces) {
  std::vector<TracePoint> out;
  if (traces.empty()) return out;
  std::size_t longest = 0;
  for (const auto* t : traces) longest = std::max(longest, t->size());
  const int first_k = traces.front()->front().k;
  for (std::size_t i = 0; i < longest; ++i) {
    double sg = 0.0, sh = 0.0;
    for (const auto* t : traces) {
      const TraceRecord& r = i < t->size() ? (*t)[i] : t->back();
      sg += r.gamma;
      sh += r.h_p;
    }
    const double n = static_cast<double>(traces.size());
    out.push_back({first_k + static_cast<int>(i), sg / n, sh / n});
  }
  return out;
}

}  // namespace detail

inline BenchmarkReport run_benchmark(const SimConfig& cfg, const std::vector<Method>& methods) {
  cfg.validate();
  std::vector<Replication> slots(cfg.replications);
  parallel_for(cfg.replications, worker_count(cfg.threads, cfg.replications),
               [&](std::size_t i) { slots[i] = run_replication(cfg, methods, i); });

  BenchmarkReport report{std::string(kRngAlgorithm), cfg.seed, cfg.n, cfg.replications, cfg.dgp,
                         benchmark_truth(cfg.dgp), {}, {}, {}};
  for (const auto& rep : slots) {
    if (rep.sample_error) {
      report.failures.push_back({rep.index, std::nullopt, *rep.sample_error, "sample yields no constraints"});
    }
  }
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodSummary row;
    row.method = methods[mi];
    double s_h = 0.0, s_g = 0.0, s_v = 0.0, s_it = 0.0, s_dh = 0.0, s_dv = 0.0;
    std::vector<const ConvergenceTrace*> traces;
    for (const auto& rep : slots) {
      if (rep.sample_error) {
        ++row.failed;
        continue;
      }
      const MethodOutcome& out = rep.outcomes[mi];
      if (!out.solution) {
        ++row.failed;
        report.failures.push_back({rep.index, out.method, *out.error, out.message});
        continue;
      }
      const MaxEntSolution& s = *out.solution;
      const double var = two_part_moments(s.density).variance;
      ++row.succeeded;
      s_h += s.h_p;
      s_g += s.density.gamma();
      s_v += var;
      s_it += s.diagnostics.iterations;
      if (report.truth) {
        s_dh += percent_deviation(s.h_p, report.truth->h_p);
        s_dv += percent_deviation(var, report.truth->variance);
      }
      traces.push_back(&s.trace);
    }
    if (row.succeeded > 0) {
      const double k = static_cast<double>(row.succeeded);
      row.mean_entropy = s_h / k;
      row.mean_gamma = s_g / k;
      row.mean_variance = s_v / k;
      row.mean_iterations = s_it / k;
      if (report.truth) {
        row.mean_pct_dev_h = s_dh / k;
        row.mean_pct_dev_var = s_dv / k;
      }
    }
    row.trace = detail::average_traces(traces);
    report.rows.push_back(std::move(row));
  }
  report.details = std::move(slots);
  return report;
}

/// Fraction of (replication, method) runs that produced a solution.
inline double success_rate(const BenchmarkReport& r) {
  std::size_t ok = 0, total = 0;
  for (const auto& row : r.rows) {
    ok += row.succeeded;
    total += row.succeeded + row.failed;
  }
  return total == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(total);
}

/// The six exponential settings (gamma, rate) of the first simulation table.
inline std::vector<Dgp> table1_dgps() {
  std::vector<Dgp> v;
  for (double g : {0.1, 0.4, 0.8}) {
    for (double rate : {0.5, 1.5}) v.push_back(Dgp::two_part_exponential(g, rate));
  }
  return v;
}

/// The seven gamma settings (gamma, shape, scale) of the second table.
inline std::vector<Dgp> table2_dgps() {
  return {Dgp::two_part_gamma(0.1, 1.0, 0.5), Dgp::two_part_gamma(0.1, 3.0, 0.5),
          Dgp::two_part_gamma(0.1, 3.0, 1.0), Dgp::two_part_gamma(0.1, 5.0, 0.5),
          Dgp::two_part_gamma(0.4, 1.0, 1.5), Dgp::two_part_gamma(0.4, 5.0, 1.0),
          Dgp::two_part_gamma(0.4, 5.0, 1.5)};
}

inline const std::vector<Method>& study_methods() {
  static const std::vector<Method> m{Method::AEM, Method::AEMPolitis, Method::TwoPartEM};
  return m;
}

// ---------------------------------------------------------------- writers

namespace detail {

inline void dgp_columns(const Dgp& d, std::string& out) {
  if (const auto* e = std::get_if<TwoPartExponential>(&d.params())) {
    out += "exp," + format_double(e->gamma) + "," + format_double(e->rate) + ",,";
  } else {
    const auto& g = std::get<TwoPartGamma>(d.params());
    out += "gamma," + format_double(g.gamma) + ",," + format_double(g.shape) + "," + format_double(g.scale);
  }
}

inline nlohmann::ordered_json dgp_json(const Dgp& d) {
  nlohmann::ordered_json j;
  if (const auto* e = std::get_if<TwoPartExponential>(&d.params())) {
    j["family"] = "exp";
    j["gamma"] = e->gamma;
    j["rate"] = e->rate;
  } else {
    const auto& g = std::get<TwoPartGamma>(d.params());
    j["family"] = "gamma";
    j["gamma"] = g.gamma;
    j["shape"] = g.shape;
    j["scale"] = g.scale;
  }
  return j;
}

inline nlohmann::ordered_json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json number_or_null(const std::optional<double>& x) {
  return x ? number_or_null(*x) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline constexpr std::string_view kReportCsvHeader =
    "dgp,gamma,rate,shape,scale,method,n,replications,succeeded,failed,mean_pct_dev_h,mean_pct_dev_var,"
    "mean_entropy,mean_gamma,mean_variance,mean_iterations,truth_h,truth_variance,seed,rng";

/// Rows only; several reports can share one header.
inline std::string report_csv_rows(const BenchmarkReport& r) {
  std::string out;
  for (const auto& row : r.rows) {
    detail::dgp_columns(r.dgp, out);
    out += ',';
    out += to_string(row.method);
    out += ',' + std::to_string(r.n) + ',' + std::to_string(r.replications) + ',' + std::to_string(row.succeeded) +
           ',' + std::to_string(row.failed) + ',' + format_optional(row.mean_pct_dev_h) + ',' +
           format_optional(row.mean_pct_dev_var) + ',' + format_double(row.mean_entropy) + ',' +
           format_double(row.mean_gamma) + ',' + format_double(row.mean_variance) + ',' +
           format_double(row.mean_iterations) + ',' +
           (r.truth ? format_double(r.truth->h_p) : std::string()) + ',' +
           (r.truth ? format_double(r.truth->variance) : std::string()) + ',' + std::to_string(r.seed) + ',' +
           csv_field(r.rng_algorithm) + '\n';
  }
  return out;
}

inline std::string report_csv(const std::vector<BenchmarkReport>& reports) {
  std::string out(kReportCsvHeader);
  out += '\n';
  for (const auto& r : reports) out += report_csv_rows(r);
  return out;
}

inline nlohmann::ordered_json report_json_object(const BenchmarkReport& r) {
  nlohmann::ordered_json j;
  j["dgp"] = detail::dgp_json(r.dgp);
  j["n"] = r.n;
  j["replications"] = r.replications;
  if (r.truth) {
    j["truth"] = {{"h_p", r.truth->h_p}, {"variance", r.truth->variance}, {"gamma", r.truth->gamma}};
  } else {
    j["truth"] = nullptr;
  }
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["method"] = std::string(to_string(row.method));
    o["succeeded"] = row.succeeded;
    o["failed"] = row.failed;
    o["mean_pct_dev_h"] = detail::number_or_null(row.mean_pct_dev_h);
    o["mean_pct_dev_var"] = detail::number_or_null(row.mean_pct_dev_var);
    o["mean_entropy"] = detail::number_or_null(row.mean_entropy);
    o["mean_gamma"] = detail::number_or_null(row.mean_gamma);
    o["mean_variance"] = detail::number_or_null(row.mean_variance);
    o["mean_iterations"] = detail::number_or_null(row.mean_iterations);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  auto fails = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) {
    fails.push_back({{"replication", f.replication},
                     {"method", f.method ? nlohmann::ordered_json(std::string(to_string(*f.method)))
                                         : nlohmann::ordered_json(nullptr)},
                     {"kind", std::string(to_string(f.kind))},
                     {"message", f.message}});
  }
  j["failures"] = std::move(fails);
  return j;
}

inline std::string report_json(const std::vector<BenchmarkReport>& reports) {
  nlohmann::ordered_json j;
  j["rng"] = std::string(kRngAlgorithm);
  j["seed"] = reports.empty() ? 0 : reports.front().seed;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json_object(r));
  j["reports"] = std::move(arr);
  return j.dump(2) + "\n";
}

/// Long format: dgp, method, iteration, mean_gamma, mean_entropy.
inline std::string trace_csv(const std::vector<BenchmarkReport>& reports) {
  std::string out = "dgp,method,iteration,mean_gamma,mean_entropy\n";
  for (const auto& r : reports) {
    const std::string label = csv_field(r.dgp.label());
    for (const auto& row : r.rows) {
      for (const auto& p : row.trace) {
        out += label + ',' + std::string(to_string(row.method)) + ',' + std::to_string(p.iteration) + ',' +
               format_double(p.mean_gamma) + ',' + format_double(p.mean_entropy) + '\n';
      }
    }
  }
  return out;
}

/// Writes report.csv, report.json and trace.csv into `dir`.
inline void write_benchmark_outputs(const std::vector<BenchmarkReport>& reports, const std::filesystem::path& dir) {
  write_text_file(dir / "report.csv", report_csv(reports));
  write_text_file(dir / "report.json", report_json(reports));
  write_text_file(dir / "trace.csv", trace_csv(reports));
}

}  // namespace semient
