#pragma once

// Reference checkerboard copulas with known dependence values and the
// scenario samplers used by the simulation harness.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qmd/core.hpp"
#include "qmd/linkage.hpp"
#include "qmd/random.hpp"

namespace qmd {

/// N-checkerboard of the product copula: every cell carries N^-rho.
inline CheckerboardCopula product(std::size_t rho, std::uint32_t resolution) {
  if (rho < 1 || resolution < 1) throw ArgumentError("product copula needs rho >= 1 and N >= 1");
  const auto cells = detail::checked_pow(resolution, rho);
  if (!cells || *cells > kDenseCellLimit) throw ResourceError("dense product grid above 1e8 cells");
  const double m = 1.0 / static_cast<double>(*cells);
  std::vector<CheckerboardCopula::Entry> entries;
  entries.reserve(*cells);
  for (std::uint64_t k = 0; k < *cells; ++k) entries.emplace_back(k, m);
  return CheckerboardCopula(rho, resolution, std::move(entries));
}

/// N-checkerboard of the upper Frechet bound M: mass 1/N on the diagonal.
inline CheckerboardCopula minimum(std::uint32_t resolution) {
  if (resolution < 1) throw ArgumentError("resolution must be at least 1");
  std::vector<std::pair<CellIndex, double>> cells;
  for (std::uint32_t i = 1; i <= resolution; ++i) cells.push_back({{i, i}, 1.0 / resolution});
  return CheckerboardCopula::from_cells(2, resolution, cells);
}

/// N-checkerboard of the lower Frechet bound W: mass 1/N on the antidiagonal.
inline CheckerboardCopula w_copula(std::uint32_t resolution) {
  if (resolution < 1) throw ArgumentError("resolution must be at least 1");
  std::vector<std::pair<CellIndex, double>> cells;
  for (std::uint32_t i = 1; i <= resolution; ++i) cells.push_back({{i, resolution + 1 - i}, 1.0 / resolution});
  return CheckerboardCopula::from_cells(2, resolution, cells);
}

/// Uniform distribution on the N^2 cubes (i, j, k) with k = i + j - 1 (mod N).
/// All bivariate margins are the product copula.
inline CheckerboardCopula c_cube(std::uint32_t resolution) {
  if (resolution < 2) throw ArgumentError("c_cube needs N >= 2");
  const std::uint32_t n = resolution;
  const double m = 1.0 / (static_cast<double>(n) * n);
  std::vector<std::pair<CellIndex, double>> cells;
  for (std::uint32_t i = 1; i <= n; ++i) {
    for (std::uint32_t j = 1; j <= n; ++j) cells.push_back({{i, j, (i + j - 2) % n + 1}, m});
  }
  return CheckerboardCopula::from_cells(3, n, cells);
}

/// Uniform distribution on the cubes (i, j, i).
inline CheckerboardCopula c_cube_tilde(std::uint32_t resolution) {
  if (resolution < 2) throw ArgumentError("c_cube_tilde needs N >= 2");
  const std::uint32_t n = resolution;
  const double m = 1.0 / (static_cast<double>(n) * n);
  std::vector<std::pair<CellIndex, double>> cells;
  for (std::uint32_t i = 1; i <= n; ++i) {
    for (std::uint32_t j = 1; j <= n; ++j) cells.push_back({{i, j, i}, m});
  }
  return CheckerboardCopula::from_cells(3, n, cells);
}

/// Named reference copula, as used by the `exact` command.
inline CheckerboardCopula reference_copula(std::string_view name, std::uint32_t resolution, std::size_t dimension = 3) {
  if (name == "product") return product(dimension, resolution);
  if (name == "minimum") return minimum(resolution);
  if (name == "w") return w_copula(resolution);
  if (name == "c_cube") return c_cube(resolution);
  if (name == "c_cube_tilde") return c_cube_tilde(resolution);
  throw ArgumentError("unknown reference copula '" + std::string(name) + "'");
}

inline const std::vector<std::string>& reference_copula_names() {
  static const std::vector<std::string> names = {"product", "minimum", "w", "c_cube", "c_cube_tilde"};
  return names;
}

/// Marshall-Olkin copula sample via the max-of-powers construction
/// U = max(V1^(1/(1-alpha)), V3^(1/alpha)), V = max(V2^(1/(1-beta)), V3^(1/beta)).
inline Sample sample_marshall_olkin(double alpha, double beta, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0))
    throw ArgumentError("Marshall-Olkin parameters must lie in (0,1]");
  if (n < 2) throw ArgumentError("n must be at least 2");
  const auto branch = [](double v, double param) { return param >= 1.0 ? 0.0 : std::pow(v, 1.0 / (1.0 - param)); };
  std::vector<std::vector<double>> cols(2, std::vector<double>(n));
  RandomStream rng(seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v1 = rng.uniform(), v2 = rng.uniform(), v3 = rng.uniform();
    cols[0][i] = std::max(branch(v1, alpha), std::pow(v3, 1.0 / alpha));
    cols[1][i] = std::max(branch(v2, beta), std::pow(v3, 1.0 / beta));
  }
  return Sample(std::move(cols), {"U", "V"}, 1);
}

struct ScenarioInfo {
  std::string name;
  std::size_t predictors;
  const char* description;
};

inline const std::vector<ScenarioInfo>& scenarios() {
  static const std::vector<ScenarioInfo> list = {
      {"indep_normal_exp", 2, "X1, X2 ~ N(0,1), Y ~ Exp(1), all independent"},
      {"noisy_chain", 3, "X1 ~ U(0,1), X2 = X1 + N(0, 0.1^2), X3 ~ Exp(1), Y ~ U(0,1) independent"},
      {"double_mod", 4, "X1, X3 ~ U(0,1), X2 = 2X1 mod 1 + e1, X4 = 2X3 mod 1 + e2, e ~ N(0, 0.1^2), Y ~ U(0,1) independent"},
      {"cube", 2, "(X1, X2, Y) ~ C_Cube"},
      {"circle_sq", 2, "X1, X2 ~ U(-1,1), Y = X1^2 + X2^2"},
      {"ratio_normal", 2, "X1, X2 ~ N(0,1), Y = X1 / X2"},
      {"mod_sum3", 3, "X1, X3 ~ U(0,1), X2 = 2X1 mod 1, Y = X1 + X2 + X3 mod 1"},
      {"sum4", 4, "X1..X4 ~ U(0,1), Y = X1 + X2 + X3 + X4"},
      {"marshall_olkin_sum", 2, "(X1, X2) ~ MO(0.5, 1), Y = X1 + X2"},
      {"mod2_exact", 2, "X1 ~ U(0,1), X2 = 2X1 mod 1, Y = X1"},
  };
  return list;
}

inline const ScenarioInfo& scenario_info(std::string_view name) {
  for (const auto& s : scenarios()) {
    if (s.name == name) return s;
  }
  throw ArgumentError("unknown scenario '" + std::string(name) + "'");
}

/// Draws n rows of a named scenario; the response is the last column.
/// Deterministic in (name, n, seed).
inline Sample sample_scenario(std::string_view name, std::size_t n, std::uint64_t seed) {
  const ScenarioInfo& info = scenario_info(name);
  if (n < 2) throw ArgumentError("n must be at least 2");
  const std::size_t d = info.predictors;
  std::vector<std::vector<double>> cols(d + 1, std::vector<double>(n));
  std::vector<std::string> names;
  for (std::size_t a = 0; a < d; ++a) names.push_back("X" + std::to_string(a + 1));
  names.push_back("Y");

  RandomStream rng(seed, 0);
  const auto mod1 = [](double v) { return v - std::floor(v); };

  if (name == "marshall_olkin_sum") {
    const Sample mo = sample_marshall_olkin(0.5, 1.0, n, seed);
    for (std::size_t i = 0; i < n; ++i) {
      cols[0][i] = mo.column(0)[i];
      cols[1][i] = mo.column(1)[i];
      cols[2][i] = cols[0][i] + cols[1][i];
    }
    return Sample(std::move(cols), std::move(names), d);
  }
  if (name == "cube") {
    const RosenblattTransform sampler(c_cube(2));
    for (std::size_t i = 0; i < n; ++i) {
      const double u[] = {rng.uniform(), rng.uniform(), rng.uniform()};
      const auto z = sampler.inverse(u);
      for (std::size_t a = 0; a < 3; ++a) cols[a][i] = z[a];
    }
    return Sample(std::move(cols), std::move(names), d);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (name == "indep_normal_exp") {
      cols[0][i] = rng.normal();
      cols[1][i] = rng.normal();
      cols[2][i] = rng.exponential(1.0);
    } else if (name == "noisy_chain") {
      cols[0][i] = rng.uniform();
      cols[1][i] = cols[0][i] + rng.normal(0.0, 0.1);
      cols[2][i] = rng.exponential(1.0);
      cols[3][i] = rng.uniform();
    } else if (name == "double_mod") {
      cols[0][i] = rng.uniform();
      cols[1][i] = mod1(2.0 * cols[0][i]) + rng.normal(0.0, 0.1);
      cols[2][i] = rng.uniform();
      cols[3][i] = mod1(2.0 * cols[2][i]) + rng.normal(0.0, 0.1);
      cols[4][i] = rng.uniform();
    } else if (name == "circle_sq") {
      cols[0][i] = 2.0 * rng.uniform() - 1.0;
      cols[1][i] = 2.0 * rng.uniform() - 1.0;
      cols[2][i] = cols[0][i] * cols[0][i] + cols[1][i] * cols[1][i];
    } else if (name == "ratio_normal") {
      cols[0][i] = rng.normal();
      cols[1][i] = rng.normal();
      cols[2][i] = cols[0][i] / cols[1][i];
    } else if (name == "mod_sum3") {
      cols[0][i] = rng.uniform();
      cols[1][i] = mod1(2.0 * cols[0][i]);
      cols[2][i] = rng.uniform();
      cols[3][i] = mod1(cols[0][i] + cols[1][i] + cols[2][i]);
    } else if (name == "sum4") {
      double sum = 0.0;
      for (std::size_t a = 0; a < 4; ++a) {
        cols[a][i] = rng.uniform();
        sum += cols[a][i];
      }
      cols[4][i] = sum;
    } else if (name == "mod2_exact") {
      cols[0][i] = rng.uniform();
      cols[1][i] = mod1(2.0 * cols[0][i]);
      cols[2][i] = cols[0][i];
    }
  }
  return Sample(std::move(cols), std::move(names), d);
}

}  // namespace qmd
