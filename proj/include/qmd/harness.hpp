#pragma once

// File input, report formatting, the permutation test and the simulation
// harness behind the command-line tool.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qmd/copulas.hpp"
#include "qmd/core.hpp"
#include "qmd/empirical.hpp"
#include "qmd/measure.hpp"
#include "qmd/parallel.hpp"
#include "qmd/random.hpp"

namespace qmd {

/// Problems with input files or column references.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (names[a] == name) return a;
    }
    throw InputError("unknown column '" + name + "'");
  }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Comma-separated input with a header row and a purely numeric body.
/// Missing, non-numeric and non-finite cells are rejected naming the row.
inline Table read_csv(std::istream& in) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      for (auto& f : detail::split_fields(line)) table.names.push_back(detail::trim(f));
      if (table.names.empty()) throw InputError("missing header row");
      for (const auto& name : table.names) {
        if (name.empty()) throw InputError("empty column name in header");
      }
      table.columns.resize(table.names.size());
      have_header = true;
      continue;
    }
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    const std::size_t row = table.rows() + 1;
    const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(line_no) + ")";
    if (fields.size() != table.names.size()) {
      throw InputError(where + ": expected " + std::to_string(table.names.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t a = 0; a < fields.size(); ++a) {
      const std::string cell = detail::trim(fields[a]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last) {
        throw InputError(where + ": column '" + table.names[a] + "' value '" + cell + "' is not numeric");
      }
      if (!std::isfinite(v)) {
        throw InputError(where + ": column '" + table.names[a] + "' value '" + cell + "' is not a finite number");
      }
      table.columns[a].push_back(v);
    }
  }
  if (!have_header) throw InputError("empty input: missing header row");
  return table;
}

inline Table read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return read_csv(in);
}

/// Builds a sample holding the predictors (in the given order) followed by
/// the response. An empty predictor list means every other column.
inline Sample sample_from_table(const Table& table, const std::string& response,
                                const std::vector<std::string>& predictors) {
  const std::size_t r = table.index_of(response);
  std::vector<std::size_t> cols;
  if (predictors.empty()) {
    for (std::size_t a = 0; a < table.names.size(); ++a) {
      if (a != r) cols.push_back(a);
    }
  } else {
    for (const auto& p : predictors) {
      const std::size_t a = table.index_of(p);
      if (a == r) throw InputError("column '" + p + "' is the response and cannot be a predictor");
      if (std::find(cols.begin(), cols.end(), a) != cols.end()) throw InputError("predictor '" + p + "' listed twice");
      cols.push_back(a);
    }
  }
  if (cols.empty()) throw InputError("no predictor columns");
  if (table.rows() < 2) throw InputError("need at least two data rows, found " + std::to_string(table.rows()));
  std::vector<std::vector<double>> data;
  std::vector<std::string> names;
  for (std::size_t a : cols) {
    data.push_back(table.columns[a]);
    names.push_back(table.names[a]);
  }
  data.push_back(table.columns[r]);
  names.push_back(table.names[r]);
  return Sample(std::move(data), std::move(names), cols.size());
}

// ---------------------------------------------------------------------------
// formatting

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string json_estimate(const DependenceEstimate& est, const std::vector<std::string>& names) {
  std::string out = "{\"value\":" + format_number(est.value);
  out += ",\"n\":" + std::to_string(est.n);
  out += ",\"N\":" + std::to_string(est.resolution);
  out += ",\"s\":" + (est.s ? format_number(*est.s) : std::string("null"));
  out += ",\"predictors\":[";
  for (std::size_t i = 0; i < est.predictor_indices.size(); ++i) {
    if (i > 0) out += ',';
    out += json_string(names.at(est.predictor_indices[i]));
  }
  out += "],\"response\":" + json_string(names.at(est.response_index));
  out += ",\"seed\":" + (est.seed ? std::to_string(*est.seed) : std::string("null"));
  out += ",\"tie_policy\":" + json_string(to_string(est.tie_policy)) + "}";
  return out;
}

inline const char* csv_estimate_header() { return "value,n,N,s,predictors,response,seed,tie_policy"; }

inline std::string csv_estimate_row(const DependenceEstimate& est, const std::vector<std::string>& names) {
  std::string preds;
  for (std::size_t i = 0; i < est.predictor_indices.size(); ++i) {
    if (i > 0) preds += ';';
    preds += names.at(est.predictor_indices[i]);
  }
  return format_number(est.value) + "," + std::to_string(est.n) + "," + std::to_string(est.resolution) + "," +
         (est.s ? format_number(*est.s) : std::string()) + "," + preds + "," + names.at(est.response_index) + "," +
         (est.seed ? std::to_string(*est.seed) : std::string()) + "," + to_string(est.tie_policy);
}

// ---------------------------------------------------------------------------
// permutation test

struct PermutationTestResult {
  DependenceEstimate observed;
  std::size_t permutations = 0;
  std::size_t exceedances = 0;
  double p_value = 1.0;
};

/// Permutes the response against the predictors. Permutation b shuffles the
/// response ranks with the stream (seed, b + 1); p = (1 + #{perm >= obs}) / (B + 1).
inline PermutationTestResult permutation_test(const Sample& sample, std::span<const std::size_t> predictors,
                                              std::size_t permutations, const EstimatorConfig& config,
                                              unsigned threads = 1) {
  if (permutations < 1) throw ArgumentError("the permutation count must be at least 1");
  const PseudoSample pseudo = ranks(sample, config.ties, config.seed);
  PermutationTestResult result;
  result.observed = zeta1_estimate(pseudo, predictors, config);
  result.permutations = permutations;

  const std::size_t r = pseudo.response_index();
  std::vector<double> values(permutations);
  parallel_for(permutations, threads, [&](std::size_t b) {
    std::vector<PseudoSample::Column> cols;
    for (std::size_t a = 0; a < pseudo.rho(); ++a) cols.push_back(pseudo.column(a));
    std::vector<std::size_t> perm(pseudo.n());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    RandomStream rng(config.seed.value_or(0), b + 1);
    rng.shuffle(std::span<std::size_t>(perm));
    const auto& src = pseudo.column(r);
    auto& dst = cols[r];
    for (std::size_t i = 0; i < perm.size(); ++i) {
      dst.ranks[i] = src.ranks[perm[i]];
      dst.lower[i] = src.lower[perm[i]];
      dst.upper[i] = src.upper[perm[i]];
    }
    const PseudoSample permuted(std::move(cols), r, pseudo.tie_policy(), pseudo.seed());
    values[b] = zeta1_estimate(permuted, predictors, config).value;
  });
  for (double v : values) {
    if (v >= result.observed.value) ++result.exceedances;
  }
  result.p_value = static_cast<double>(1 + result.exceedances) / static_cast<double>(permutations + 1);
  return result;
}

// ---------------------------------------------------------------------------
// simulation harness

struct SimulationRow {
  std::string scenario;
  std::size_t n = 0;
  double s = 0.0;
  std::uint32_t resolution = 0;
  std::size_t replicate = 0;
  double value = 0.0;
};

struct SimulationSummary {
  std::string scenario;
  std::size_t n = 0;
  double s = 0.0;
  std::uint32_t resolution = 0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct SimulationResult {
  std::vector<SimulationRow> rows;
  std::vector<SimulationSummary> summaries;
};

/// Linear-interpolation quantile of already sorted values.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ArgumentError("quantile of an empty set");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) { return seed + replicate; }

/// Replicate r of sample size n draws sample_scenario(name, n, seed + r) and
/// estimates with the same seed for every exponent in `s_list`. An empty
/// `s_list` means s = 1/rho.
inline SimulationResult simulate(const std::string& scenario, const std::vector<std::size_t>& n_list,
                                 std::size_t reps, std::vector<double> s_list, std::uint64_t seed,
                                 unsigned threads = 1, TiePolicy ties = TiePolicy::midrank) {
  const ScenarioInfo& info = scenario_info(scenario);
  if (n_list.empty()) throw ArgumentError("at least one sample size is required");
  if (reps < 1) throw ArgumentError("at least one replicate is required");
  if (s_list.empty()) s_list.push_back(1.0 / static_cast<double>(info.predictors + 1));
  for (double s : s_list) {
    if (!(s > 0.0 && s < 1.0)) throw ArgumentError("exponent s must lie in (0,1)");
  }
  for (std::size_t n : n_list) {
    if (n < 2) throw ArgumentError("sample sizes must be at least 2");
  }

  const std::size_t per_n = reps * s_list.size();
  SimulationResult result;
  result.rows.resize(n_list.size() * per_n);
  parallel_for(n_list.size() * reps, threads, [&](std::size_t task) {
    const std::size_t ni = task / reps, r = task % reps;
    const std::uint64_t rs = replicate_seed(seed, r);
    const Sample sample = sample_scenario(scenario, n_list[ni], rs);
    const PseudoSample pseudo = ranks(sample, ties, rs);
    const auto predictors = sample.predictor_indices();
    for (std::size_t si = 0; si < s_list.size(); ++si) {
      EstimatorConfig cfg;
      cfg.s = s_list[si];
      cfg.ties = ties;
      cfg.seed = rs;
      const auto est = zeta1_estimate(pseudo, predictors, cfg);
      result.rows[ni * per_n + si * reps + r] = {scenario, n_list[ni], s_list[si], est.resolution, r, est.value};
    }
  });
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    for (std::size_t si = 0; si < s_list.size(); ++si) {
      std::vector<double> v;
      for (std::size_t r = 0; r < reps; ++r) v.push_back(result.rows[ni * per_n + si * reps + r].value);
      std::sort(v.begin(), v.end());
      result.summaries.push_back({scenario, n_list[ni], s_list[si], result.rows[ni * per_n + si * reps].resolution,
                                  quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75)});
    }
  }
  return result;
}

inline void write_simulation_csv(std::ostream& out, const SimulationResult& result) {
  out << "kind,scenario,n,s,N,replicate,value,q1,median,q3\n";
  for (const auto& row : result.rows) {
    out << "replicate," << row.scenario << ',' << row.n << ',' << format_number(row.s) << ',' << row.resolution << ','
        << row.replicate << ',' << format_number(row.value) << ",,,\n";
  }
  for (const auto& s : result.summaries) {
    out << "summary," << s.scenario << ',' << s.n << ',' << format_number(s.s) << ',' << s.resolution << ",,,"
        << format_number(s.q1) << ',' << format_number(s.median) << ',' << format_number(s.q3) << '\n';
  }
}

}  // namespace qmd
