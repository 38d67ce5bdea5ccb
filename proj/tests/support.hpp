#pragma once

// Random checkerboard generators shared by the test binaries.

#include <cstdint>
#include <numeric>
#include <vector>

#include "qmd/core.hpp"
#include "qmd/random.hpp"

namespace qmd::testkit {

/// Mixture of `parts` permutation copulas: each part puts 1/N on the cells
/// (i, s_2(i), ..., s_rho(i)) for random permutations s_a.
inline CheckerboardCopula random_copula(std::size_t rho, std::uint32_t n, std::size_t parts, RandomStream& rng) {
  std::vector<double> w(parts);
  double total = 0.0;
  for (double& v : w) total += (v = rng.exponential(1.0));
  std::vector<std::pair<CellIndex, double>> cells;
  for (std::size_t p = 0; p < parts; ++p) {
    std::vector<std::vector<std::uint32_t>> perm(rho, std::vector<std::uint32_t>(n));
    for (auto& s : perm) {
      std::iota(s.begin(), s.end(), 1u);
      rng.shuffle(std::span<std::uint32_t>(s));
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      CellIndex idx(rho);
      for (std::size_t a = 0; a < rho; ++a) idx[a] = perm[a][i];
      cells.push_back({idx, w[p] / total / n});
    }
  }
  return CheckerboardCopula::from_cells(rho, n, cells);
}

/// Random linkage with d predictor axes: a mixture of balanced assignments,
/// each mapping every predictor cell to one response cell so that every
/// response cell receives exactly N^(d-1) predictor cells.
inline CheckerboardCopula random_linkage(std::size_t d, std::uint32_t n, std::size_t parts, RandomStream& rng) {
  std::uint64_t dcells = 1;
  for (std::size_t a = 0; a < d; ++a) dcells *= n;
  std::vector<double> w(parts);
  double total = 0.0;
  for (double& v : w) total += (v = rng.exponential(1.0));
  std::vector<CheckerboardCopula::Entry> entries;
  for (std::size_t p = 0; p < parts; ++p) {
    std::vector<std::uint32_t> target(dcells);
    for (std::uint64_t c = 0; c < dcells; ++c) target[c] = static_cast<std::uint32_t>(c % n);
    rng.shuffle(std::span<std::uint32_t>(target));
    for (std::uint64_t c = 0; c < dcells; ++c) {
      entries.emplace_back(c * n + target[c], w[p] / total / static_cast<double>(dcells));
    }
  }
  return CheckerboardCopula(d + 1, n, std::move(entries));
}

}  // namespace qmd::testkit
