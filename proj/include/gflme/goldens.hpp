#pragma once

#include <string>
#include <vector>

#include "gflme/csv.hpp"
#include "gflme/montecarlo.hpp"

namespace gflme {

/// One line of the golden-number registry: either an interval check for one
/// (estimator, metric) cell of a table, or an ordering check when the
/// estimator field is a chain like "oracle<=simex<rc<average<naive".
struct GoldenRow {
  std::string table_id;
  std::string preset;
  std::string estimator;
  std::string metric;
  double paper_value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool is_ordering = false;
};

inline std::vector<GoldenRow> load_goldens(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw DataError("empty goldens file: " + path);
  const std::vector<std::string> header = {"table",       "preset", "estimator", "metric",
                                           "paper_value", "lo",     "hi"};
  if (rows[0] != header)
    throw DataError("goldens file must have header table,preset,estimator,metric,"
                    "paper_value,lo,hi: " + path);
  std::vector<GoldenRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 7) throw DataError("bad goldens row in " + path);
    GoldenRow g;
    g.table_id = rows[r][0];
    g.preset = rows[r][1];
    g.estimator = rows[r][2];
    g.metric = rows[r][3];
    g.is_ordering = g.estimator.find('<') != std::string::npos;
    if (!g.is_ordering) {
      g.paper_value = parse_double(rows[r][4], path);
      g.lo = parse_double(rows[r][5], path);
      g.hi = parse_double(rows[r][6], path);
      if (!(g.lo < g.paper_value && g.paper_value < g.hi))
        throw DataError("golden row for " + g.preset + "/" + g.estimator + "/" + g.metric +
                        " has its paper value outside its own interval");
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct GoldenCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

// Parses "a<=b<c<d" into elements plus per-link strictness flags.
struct OrderingChain {
  std::vector<std::string> names;
  std::vector<bool> strict;  // strict[i] applies between names[i] and names[i+1]
};

inline OrderingChain parse_ordering(const std::string& chain) {
  OrderingChain out;
  std::size_t pos = 0;
  while (pos < chain.size()) {
    std::size_t lt = chain.find('<', pos);
    if (lt == std::string::npos) {
      out.names.push_back(trim(chain.substr(pos)));
      break;
    }
    out.names.push_back(trim(chain.substr(pos, lt - pos)));
    if (lt + 1 < chain.size() && chain[lt + 1] == '=') {
      out.strict.push_back(false);
      pos = lt + 2;
    } else {
      out.strict.push_back(true);
      pos = lt + 1;
    }
  }
  if (out.names.size() < 2) throw DataError("ordering chain needs at least two estimators");
  return out;
}

}  // namespace detail

/// Checks a metrics report against golden rows for its preset: interval
/// containment for value rows, ordinal ranking for chain rows. Failures are
/// reported, never thrown.
inline std::vector<GoldenCheck> check_goldens(const MetricsReport& report,
                                              const std::vector<GoldenRow>& goldens) {
  std::vector<GoldenCheck> out;
  for (const GoldenRow& g : goldens) {
    GoldenCheck check;
    if (g.is_ordering) {
      check.name = g.preset + ": " + g.metric + " ordering " + g.estimator;
      const auto chain = detail::parse_ordering(g.estimator);
      check.pass = true;
      std::string values;
      for (std::size_t i = 0; i < chain.names.size(); ++i) {
        const double v = metric_value(
            report.for_estimator(estimator_from_string(chain.names[i])), g.metric);
        values += (i ? ", " : "") + chain.names[i] + "=" + fmt_double(v);
        if (i > 0) {
          const double prev = metric_value(
              report.for_estimator(estimator_from_string(chain.names[i - 1])), g.metric);
          const bool ok = chain.strict[i - 1] ? prev < v : prev <= v;
          if (!ok) check.pass = false;
        }
      }
      check.detail = values;
    } else {
      const double v = metric_value(report.for_estimator(estimator_from_string(g.estimator)),
                                    g.metric);
      check.name = g.preset + ": " + g.estimator + " " + g.metric;
      check.pass = g.lo < v && v < g.hi;
      check.detail = fmt_double(v) + " vs (" + fmt_double(g.lo) + ", " + fmt_double(g.hi) +
                     "), paper " + fmt_double(g.paper_value);
    }
    out.push_back(std::move(check));
  }
  return out;
}

}  // namespace gflme
