#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qmd/cli.hpp"

namespace {

struct Flags {
  std::string input, response, out, format = "json", ties = "midrank";
  std::vector<std::string> predictors;
  std::optional<double> s;
  std::optional<std::uint32_t> resolution;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--s", f.s, "grid exponent, N = floor(n^s)")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--resolution", f.resolution, "explicit checkerboard resolution N (overrides --s)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--ties", f.ties, "tie handling")->check(CLI::IsMember({"midrank", "random"}));
  cmd->add_option("--seed", f.seed, "seed for random tie breaking and permutations");
  cmd->add_option("--format", f.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--threads", f.threads, "worker threads (default: QMD_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
}

qmd::cli::RunConfig run_config(const Flags& f) {
  qmd::cli::RunConfig cfg;
  cfg.s = f.s;
  cfg.resolution = f.resolution;
  cfg.ties = qmd::parse_tie_policy(f.ties);
  cfg.seed = f.seed;
  cfg.format = qmd::cli::parse_format(f.format);
  cfg.threads = f.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmd: checkerboard estimates of the multivariate dependence measure zeta"};
  app.require_subcommand(1);
  Flags f;

  auto* estimate = app.add_subcommand("estimate", "estimate zeta(Y | predictors) from a CSV file");
  estimate->add_option("--input", f.input, "CSV file with header row")->required();
  estimate->add_option("--response", f.response, "response column")->required();
  estimate->add_option("--predictors", f.predictors, "predictor columns (default: all others)")->delimiter(',');
  add_common(estimate, f);

  auto* matrix = app.add_subcommand("matrix", "zeta for each single predictor and for the full set");
  matrix->add_option("--input", f.input, "CSV file with header row")->required();
  matrix->add_option("--response", f.response, "response column")->required();
  add_common(matrix, f);

  std::string copula;
  std::uint32_t exact_resolution = 2;
  std::size_t dimension = 3;
  std::optional<std::uint32_t> verify;
  auto* exact = app.add_subcommand("exact", "exact zeta of a reference checkerboard copula");
  exact->add_option("--copula", copula, "reference copula")
      ->required()
      ->check(CLI::IsMember(qmd::reference_copula_names()));
  exact->add_option("--resolution", exact_resolution, "checkerboard resolution N")->check(CLI::PositiveNumber);
  exact->add_option("--dimension", dimension, "dimension of the product copula")->check(CLI::Range(2, 64));
  exact->add_option("--verify", verify, "also run the Riemann check on M grid points")->check(CLI::PositiveNumber);
  exact->add_option("--format", f.format, "output format")->check(CLI::IsMember({"json", "csv"}));

  std::string scenario;
  std::vector<std::size_t> n_list = {100, 500, 1000, 5000, 10000};
  std::vector<double> s_list;
  std::size_t reps = 100;
  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "replicated estimates on a synthetic scenario, as CSV");
  std::vector<std::string> scenario_names;
  for (const auto& s : qmd::scenarios()) scenario_names.push_back(s.name);
  simulate->add_option("--scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names));
  simulate->add_option("--n", n_list, "sample sizes")->delimiter(',');
  simulate->add_option("--s", s_list, "grid exponents (default: 1/rho)")->delimiter(',');
  simulate->add_option("--reps", reps, "replicates per sample size")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "base seed; replicate r uses seed + r");
  simulate->add_option("--out", f.out, "output CSV path (default: stdout)");
  simulate->add_option("--ties", f.ties, "tie handling")->check(CLI::IsMember({"midrank", "random"}));
  simulate->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);

  std::size_t permutations = 999;
  auto* test = app.add_subcommand("test", "permutation test of independence between response and predictors");
  test->add_option("--input", f.input, "CSV file with header row")->required();
  test->add_option("--response", f.response, "response column")->required();
  test->add_option("--predictors", f.predictors, "predictor columns (default: all others)")->delimiter(',');
  test->add_option("--permutations", permutations, "number of response permutations B");
  add_common(test, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qmd::cli::kExitInput;
  }

  try {
    const auto cfg = run_config(f);
    if (*estimate) return qmd::cli::cmd_estimate(f.input, f.response, f.predictors, cfg, std::cout, std::cerr);
    if (*matrix) return qmd::cli::cmd_matrix(f.input, f.response, cfg, std::cout, std::cerr);
    if (*exact)
      return qmd::cli::cmd_exact(copula, exact_resolution, dimension, verify, cfg.format, std::cout, std::cerr);
    if (*simulate)
      return qmd::cli::cmd_simulate(scenario, n_list, reps, s_list, sim_seed, f.out, cfg, std::cout, std::cerr);
    if (*test) return qmd::cli::cmd_test(f.input, f.response, f.predictors, permutations, cfg, std::cout, std::cerr);
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return qmd::cli::kExitInput;
  }
  return qmd::cli::kExitInput;
}
