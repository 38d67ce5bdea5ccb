#pragma once

// Subcommand bodies of the `qmd` tool. Each writes its report to `out`,
// diagnostics to `err`, and returns the process exit code:
// 0 success, 1 failed verification, 2 input or argument error.

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qmd/copulas.hpp"
#include "qmd/harness.hpp"
#include "qmd/measure.hpp"
#include "qmd/oracle.hpp"
#include "qmd/parallel.hpp"

namespace qmd::cli {

enum class OutputFormat { json, csv };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw ArgumentError("unknown output format '" + s + "'");
}

struct RunConfig {
  std::optional<double> s;
  std::optional<std::uint32_t> resolution;  // overrides s
  TiePolicy ties = TiePolicy::midrank;
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::json;
  std::optional<unsigned> threads;

  EstimatorConfig estimator() const { return {s, resolution, ties, seed}; }
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitInput = 2;

namespace detail {

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << '\n';
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
  }
  return kExitInput;
}

}  // namespace detail

inline int cmd_estimate(const std::string& input, const std::string& response,
                        const std::vector<std::string>& predictors, const RunConfig& cfg, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, [&] {
    const Sample sample = sample_from_table(read_csv_file(input), response, predictors);
    const auto est = zeta1_estimate(sample, cfg.estimator());
    if (cfg.format == OutputFormat::json) {
      out << json_estimate(est, sample.column_names()) << '\n';
    } else {
      out << csv_estimate_header() << '\n' << csv_estimate_row(est, sample.column_names()) << '\n';
    }
    return kExitOk;
  });
}

inline int cmd_matrix(const std::string& input, const std::string& response, const RunConfig& cfg,
                      std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Sample sample = sample_from_table(read_csv_file(input), response, {});
    const auto rows = pairwise_profile(sample, cfg.estimator());
    if (cfg.format == OutputFormat::json) {
      out << '[';
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out << (i ? "," : "") << json_estimate(rows[i], sample.column_names());
      }
      out << "]\n";
    } else {
      out << csv_estimate_header() << '\n';
      for (const auto& r : rows) out << csv_estimate_row(r, sample.column_names()) << '\n';
    }
    return kExitOk;
  });
}

/// zeta of a named reference copula; with `verify`, also the Riemann oracle
/// on a grid of that size, checking |3 * riemann - exact| <= 6 / M.
inline int cmd_exact(const std::string& copula, std::uint32_t resolution, std::size_t dimension,
                     std::optional<std::uint32_t> verify, OutputFormat format, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const CheckerboardCopula cb = reference_copula(copula, resolution, dimension);
    const double exact = zeta1_exact(cb);
    std::optional<oracle::RiemannResult> riemann;
    bool verified = true;
    if (verify) {
      riemann = oracle::riemann_d1_to_product(cb, *verify);
      verified = std::abs(3.0 * riemann->value - exact) <= 6.0 / *verify;
    }
    if (format == OutputFormat::json) {
      out << "{\"copula\":" << json_string(copula) << ",\"dimension\":" << cb.dimension()
          << ",\"resolution\":" << resolution << ",\"zeta1\":" << format_number(exact);
      if (riemann) {
        out << ",\"verify_grid\":" << *verify << ",\"riemann_d1\":" << format_number(riemann->value)
            << ",\"bound\":" << format_number(6.0 / *verify) << ",\"verified\":" << (verified ? "true" : "false");
      }
      out << "}\n";
    } else {
      out << "copula,dimension,resolution,zeta1" << (riemann ? ",verify_grid,riemann_d1,bound,verified" : "") << '\n';
      out << copula << ',' << cb.dimension() << ',' << resolution << ',' << format_number(exact);
      if (riemann) {
        out << ',' << *verify << ',' << format_number(riemann->value) << ',' << format_number(6.0 / *verify) << ','
            << (verified ? "true" : "false");
      }
      out << '\n';
    }
    if (!verified) {
      err << "verification failed: |3*riemann - exact| exceeds 6/M\n";
      return kExitVerifyFailed;
    }
    return kExitOk;
  });
}

inline int cmd_simulate(const std::string& scenario, const std::vector<std::size_t>& n_list, std::size_t reps,
                        const std::vector<double>& s_list, std::uint64_t seed, const std::string& out_path,
                        const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto result = simulate(scenario, n_list, reps, s_list, seed, resolve_threads(cfg.threads), cfg.ties);
    if (out_path.empty()) {
      write_simulation_csv(out, result);
    } else {
      std::ofstream file(out_path, std::ios::binary);
      if (!file) throw InputError("cannot write output file '" + out_path + "'");
      write_simulation_csv(file, result);
    }
    return kExitOk;
  });
}

inline int cmd_test(const std::string& input, const std::string& response, const std::vector<std::string>& predictors,
                    std::size_t permutations, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (permutations < 1) throw ArgumentError("--permutations must be at least 1");
    const Sample sample = sample_from_table(read_csv_file(input), response, predictors);
    const auto preds = sample.predictor_indices();
    const auto res = permutation_test(sample, preds, permutations, cfg.estimator(), resolve_threads(cfg.threads));
    const auto& names = sample.column_names();
    if (cfg.format == OutputFormat::json) {
      out << "{\"test\":\"permutation\",\"statistic\":" << format_number(res.observed.value)
          << ",\"p_value\":" << format_number(res.p_value) << ",\"permutations\":" << res.permutations
          << ",\"exceedances\":" << res.exceedances << ",\"estimate\":" << json_estimate(res.observed, names) << "}\n";
    } else {
      out << "statistic,p_value,permutations,exceedances,n,N\n"
          << format_number(res.observed.value) << ',' << format_number(res.p_value) << ',' << res.permutations << ','
          << res.exceedances << ',' << res.observed.n << ',' << res.observed.resolution << '\n';
    }
    return kExitOk;
  });
}

}  // namespace qmd::cli
