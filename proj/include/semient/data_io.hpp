#pragma once

// Daily non-negative series from CSV, station filtering and the per-station
// comparison of AEM against AEM-Politis and two-part EM.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "semient/density.hpp"
#include "semient/error.hpp"
#include "semient/format.hpp"
#include "semient/simulate.hpp"
#include "semient/solvers.hpp"

namespace semient {

/// Minimum number of positive observations a station needs to be analysed.
inline constexpr std::size_t kMinPositiveValues = 30;

/// Error carrying the 1-based file line (and column, when known).
class DataError : public Error {
 public:
  DataError(ErrorKind kind, std::size_t row, std::optional<std::size_t> column, const std::string& what)
      : Error(kind, "row " + std::to_string(row) + (column ? ", column " + std::to_string(*column) : std::string()) +
                        ": " + what),
        row_(row),
        column_(column) {}

  [[nodiscard]] std::size_t row() const noexcept { return row_; }
  [[nodiscard]] std::optional<std::size_t> column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::optional<std::size_t> column_;
};

struct StationSeries {
  std::string station_id;
  std::vector<double> values;
  /// ISO-8601 dates from long-format input; empty for wide input.
  std::vector<std::string> dates;
  std::size_t n_zero = 0;
  std::size_t n_total = 0;

  [[nodiscard]] double zero_proportion() const {
    return n_total == 0 ? 0.0 : static_cast<double>(n_zero) / static_cast<double>(n_total);
  }
  [[nodiscard]] std::size_t n_positive() const noexcept { return n_total - n_zero; }

  /// Recounts n_zero and n_total from the values.
  void recount() {
    n_total = values.size();
    n_zero = static_cast<std::size_t>(std::count(values.begin(), values.end(), 0.0));
  }
};

enum class CsvLayout { Auto, Long, Wide };

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

inline double parse_value(const std::string& field, std::size_t row, std::size_t col) {
  const auto v = parse_double(field);
  if (!v || !std::isfinite(*v)) throw DataError(ErrorKind::Parse, row, col, "not a number: '" + field + "'");
  if (*v < 0.0) throw DataError(ErrorKind::NegativeValue, row, col, "negative value " + field);
  return *v == 0.0 ? 0.0 : *v;  // folds -0.0
}

}  // namespace detail

/// Parses CSV text. Long layout: header `station_id,date,value`, one
/// observation per row. Wide layout: `station_id,v1,v2,...`, one station per
/// row with empty trailing cells allowed. Stations keep first-seen order.
inline std::vector<StationSeries> parse_stations(std::string_view text, CsvLayout layout = CsvLayout::Auto) {
  std::vector<StationSeries> out;
  std::map<std::string, std::size_t> index;
  std::size_t row = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  CsvLayout resolved = layout;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.empty() || fields[0] != "station_id") {
        throw DataError(ErrorKind::Parse, row, 1, "header must start with station_id");
      }
      const bool is_long = fields.size() == 3 && fields[1] == "date" && fields[2] == "value";
      if (resolved == CsvLayout::Auto) resolved = is_long ? CsvLayout::Long : CsvLayout::Wide;
      if (resolved == CsvLayout::Long && !is_long) {
        throw DataError(ErrorKind::Parse, row, std::nullopt, "long layout needs header station_id,date,value");
      }
      continue;
    }
    if (fields[0].empty()) throw DataError(ErrorKind::Parse, row, 1, "empty station_id");
    auto [it, inserted] = index.try_emplace(fields[0], out.size());
    if (inserted) out.push_back(StationSeries{fields[0], {}, {}, 0, 0});
    StationSeries& st = out[it->second];
    if (resolved == CsvLayout::Long) {
      if (fields.size() != 3) {
        throw DataError(ErrorKind::Parse, row, std::nullopt, "expected 3 fields, found " + std::to_string(fields.size()));
      }
      st.values.push_back(detail::parse_value(fields[2], row, 3));
      st.dates.push_back(fields[1]);
    } else {
      for (std::size_t c = 1; c < fields.size(); ++c) {
        if (fields[c].find_first_not_of(" \t") == std::string::npos) continue;
        st.values.push_back(detail::parse_value(fields[c], row, c + 1));
      }
    }
  }
  for (auto& s : out) s.recount();
  return out;
}

inline std::vector<StationSeries> load_stations(const std::filesystem::path& path, CsvLayout layout = CsvLayout::Auto) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "failed reading " + path.string());
  return parse_stations(text, layout);
}

/// Serialises stations in the given layout; wide rows are ragged.
inline std::string stations_csv(const std::vector<StationSeries>& stations, CsvLayout layout) {
  std::string out;
  if (layout == CsvLayout::Wide) {
    std::size_t widest = 0;
    for (const auto& s : stations) widest = std::max(widest, s.values.size());
    out = "station_id";
    for (std::size_t i = 1; i <= widest; ++i) out += ",v" + std::to_string(i);
    out += '\n';
    for (const auto& s : stations) {
      out += csv_field(s.station_id);
      for (double v : s.values) out += ',' + format_double(v);
      out += '\n';
    }
    return out;
  }
  out = "station_id,date,value\n";
  for (const auto& s : stations) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const std::string date = i < s.dates.size() ? s.dates[i] : std::to_string(i + 1);
      out += csv_field(s.station_id) + ',' + csv_field(date) + ',' + format_double(s.values[i]) + '\n';
    }
  }
  return out;
}

inline bool passes_filter(const StationSeries& s, double max_zero_prop) {
  return s.n_total > 0 && s.zero_proportion() < max_zero_prop && s.n_positive() >= kMinPositiveValues;
}

/// Keeps stations with zero proportion strictly below `max_zero_prop` and at
/// least kMinPositiveValues positive values.
inline std::vector<StationSeries> filter_stations(const std::vector<StationSeries>& stations, double max_zero_prop) {
  if (!(max_zero_prop > 0.0 && max_zero_prop <= 1.0)) {
    throw Error(ErrorKind::Domain, "max_zero_prop must lie in (0,1]");
  }
  std::vector<StationSeries> out;
  for (const auto& s : stations) {
    if (passes_filter(s, max_zero_prop)) out.push_back(s);
  }
  return out;
}

struct StationResult {
  std::string station_id;
  std::size_t n = 0;
  double zero_prop = 0.0;
  std::optional<double> h_aem;
  std::optional<double> h_politis;
  std::optional<double> h_twopart;
  /// 100 (H_aem - max(others)) / max(others), only when all three converged.
  std::optional<double> pct_gain;
  /// "ok", a station-level error kind, "dropped:<reason>", or
  /// semicolon-joined method:ErrorKind entries.
  std::string status;

  [[nodiscard]] bool comparable() const noexcept { return pct_gain.has_value(); }
};

struct AnalysisConfig {
  ConstraintFamily family = ConstraintFamily::MeanAndLogMean;
  double eps = 1e-8;
  int max_iter = 200;
  unsigned threads = 0;
};

inline StationResult analyze_station(const StationSeries& st, const AnalysisConfig& cfg) {
  StationResult r;
  r.station_id = st.station_id;
  r.n = st.values.size();
  r.zero_prop = st.zero_proportion();
  std::optional<SampleConstraints> sc;
  try {
    sc = sample_constraints(st.values, cfg.family);
  } catch (const Error& e) {
    r.status = std::string(to_string(e.kind()));
    return r;
  }
  if (cfg.family == ConstraintFamily::MeanAndLogMean) {
    // Without dispersion among the positive values the log-moment constraint
    // pins a degenerate law and no gamma density matches it.
    double sum = 0.0, sum_log = 0.0;
    for (double v : st.values) {
      if (v > 0.0) {
        sum += v;
        sum_log += std::log(v);
      }
    }
    const double k = static_cast<double>(st.n_positive());
    if (sum_log / k - std::log(sum / k) > kLogGapMargin) {
      r.status = std::string(to_string(ErrorKind::InfeasibleConstraints));
      return r;
    }
  }
  std::string failures;
  auto run = [&](Method m, std::optional<double>& slot) {
    try {
      const SolverConfig start = feasible_start(sc->constraints, sc->zero_proportion, cfg.eps, cfg.max_iter);
      slot = estimate(sc->constraints, m, start, sc->zero_proportion).h_p;
    } catch (const Error& e) {
      if (!failures.empty()) failures += ';';
      failures += std::string(to_string(m)) + ':' + std::string(to_string(e.kind()));
    }
  };
  run(Method::AEM, r.h_aem);
  run(Method::AEMPolitis, r.h_politis);
  run(Method::TwoPartEM, r.h_twopart);
  if (r.h_aem && r.h_politis && r.h_twopart) {
    const double best_other = std::max(*r.h_politis, *r.h_twopart);
    if (best_other != 0.0) r.pct_gain = 100.0 * (*r.h_aem - best_other) / std::abs(best_other);
  }
  r.status = failures.empty() ? "ok" : failures;
  return r;
}

/// One result per input station, in input order.
inline std::vector<StationResult> analyze_stations(const std::vector<StationSeries>& stations,
                                                   const AnalysisConfig& cfg = {}) {
  std::vector<StationResult> out(stations.size());
  parallel_for(stations.size(), worker_count(cfg.threads, stations.size()),
               [&](std::size_t i) { out[i] = analyze_station(stations[i], cfg); });
  return out;
}

/// Analyses every station that passes the filter. Stations that fail it are
/// reported as "dropped:zero_prop" or "dropped:support", except stations with
/// no positive values at all, which report AllZeros.
inline std::vector<StationResult> rainfall_pipeline(const std::vector<StationSeries>& stations,
                                                    double max_zero_prop, const AnalysisConfig& cfg = {}) {
  if (!(max_zero_prop > 0.0 && max_zero_prop <= 1.0)) {
    throw Error(ErrorKind::Domain, "max_zero_prop must lie in (0,1]");
  }
  std::vector<StationResult> out(stations.size());
  parallel_for(stations.size(), worker_count(cfg.threads, stations.size()), [&](std::size_t i) {
    const StationSeries& s = stations[i];
    if (s.n_positive() > 0 && !passes_filter(s, max_zero_prop)) {
      StationResult r;
      r.station_id = s.station_id;
      r.n = s.n_total;
      r.zero_prop = s.zero_proportion();
      r.status = s.zero_proportion() >= max_zero_prop ? "dropped:zero_prop" : "dropped:support";
      out[i] = std::move(r);
    } else {
      out[i] = analyze_station(s, cfg);
    }
  });
  return out;
}

inline constexpr std::string_view kStationResultsHeader =
    "station_id,n,zero_prop,H_aem,H_politis,H_twopart,pct_gain,status";

inline std::string station_results_csv(const std::vector<StationResult>& results) {
  std::string out(kStationResultsHeader);
  out += '\n';
  for (const auto& r : results) {
    out += csv_field(r.station_id) + ',' + std::to_string(r.n) + ',' + format_double(r.zero_prop) + ',' +
           format_optional(r.h_aem) + ',' + format_optional(r.h_politis) + ',' + format_optional(r.h_twopart) + ',' +
           format_optional(r.pct_gain) + ',' + csv_field(r.status) + '\n';
  }
  return out;
}

inline std::string station_results_json(const std::vector<StationResult>& results) {
  auto arr = nlohmann::ordered_json::array();
  auto opt = [](const std::optional<double>& x) {
    return x && std::isfinite(*x) ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
  };
  for (const auto& r : results) {
    nlohmann::ordered_json o;
    o["station_id"] = r.station_id;
    o["n"] = r.n;
    o["zero_prop"] = r.zero_prop;
    o["H_aem"] = opt(r.h_aem);
    o["H_politis"] = opt(r.h_politis);
    o["H_twopart"] = opt(r.h_twopart);
    o["pct_gain"] = opt(r.pct_gain);
    o["status"] = r.status;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

}  // namespace semient
