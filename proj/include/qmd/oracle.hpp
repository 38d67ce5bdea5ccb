#pragma once

// Brute-force evaluators that check the closed-form paths independently.
// They share only the data types with measure.hpp, never its integration code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "qmd/core.hpp"
#include "qmd/random.hpp"

namespace qmd::oracle {

namespace detail {

// Unnormalized cumulative masses per predictor cell, response last.
inline std::unordered_map<std::uint64_t, std::vector<double>> cumulative_rows(const CheckerboardCopula& cb) {
  if (cb.dimension() < 2) throw ArgumentError("need at least one predictor axis and a response axis");
  const std::uint32_t n = cb.resolution();
  std::unordered_map<std::uint64_t, std::vector<double>> rows;
  for (const auto& [key, mass] : cb.entries()) {
    auto& row = rows[key / n];
    if (row.empty()) row.assign(n + 1, 0.0);
    row[key % n + 1] += mass;
  }
  for (auto& [prefix, row] : rows) {
    for (std::uint32_t k = 1; k <= n; ++k) row[k] += row[k - 1];
  }
  return rows;
}

inline double linear_at(const std::vector<double>& row, double y) {
  const auto n = static_cast<std::uint32_t>(row.size() - 1);
  if (y <= 0.0) return row.front();
  if (y >= 1.0) return row.back();
  const double t = y * n;
  auto j = static_cast<std::uint32_t>(t);
  if (j >= n) j = n - 1;
  return row[j] + (t - j) * (row[j + 1] - row[j]);
}

}  // namespace detail

struct RiemannResult {
  double value;
  double error_bound;
};

/// Right-endpoint Riemann sum in y of the mu-weighted L1 distance between the
/// conditional cdfs and the identity; within 2/M of zeta/3.
inline RiemannResult riemann_d1_to_product(const CheckerboardCopula& cb, std::uint32_t grid) {
  if (grid < 1) throw ArgumentError("grid count must be at least 1");
  const auto rows = detail::cumulative_rows(cb);
  double total = 0.0;
  for (std::uint32_t j = 1; j <= grid; ++j) {
    const double y = static_cast<double>(j) / grid;
    double s = 0.0;
    for (const auto& [prefix, row] : rows) s += std::abs(detail::linear_at(row, y) - row.back() * y);
    total += s;
  }
  return {total / grid, 2.0 / grid};
}

/// Midpoint-rule quadrature of zeta at the given step, evaluating every
/// conditional cdf pointwise.
inline double zeta1_quadrature(const CheckerboardCopula& cb, double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ArgumentError("quadrature step must lie in (0,1]");
  const auto rows = detail::cumulative_rows(cb);
  const std::uint32_t n = cb.resolution();
  const auto steps = static_cast<std::uint64_t>(std::llround(1.0 / step));
  const double h = 1.0 / static_cast<double>(steps);
  // first midpoint index of every y-cell
  std::vector<std::uint64_t> first(n + 1, steps);
  first[0] = 0;
  const auto cell_of_step = [&](std::uint64_t s) {
    return std::min<std::uint64_t>(static_cast<std::uint64_t>((static_cast<double>(s) + 0.5) * h * n), n - 1);
  };
  for (std::uint32_t j = 1; j < n; ++j) {
    auto s = static_cast<std::uint64_t>(std::max(0.0, static_cast<double>(j) * static_cast<double>(steps) / n - 0.5));
    while (s > 0 && cell_of_step(s - 1) >= j) --s;
    while (s < steps && cell_of_step(s) < j) ++s;
    first[j] = s;
  }
  constexpr std::size_t kLanes = 32;
  double total = 0.0;
  for (const auto& [prefix, row] : rows) {
    const double w = row.back();
    double acc[kLanes] = {};
    for (std::uint32_t j = 0; j < n; ++j) {
      // F(y) - w y on this cell is lo + (y n - j)(hi - lo) - w y
      const double slope = n * (row[j + 1] - row[j]) - w;
      const double offset = row[j] - j * (row[j + 1] - row[j]);
      std::uint64_t s = first[j];
      const std::uint64_t end = first[j + 1];
      double y[kLanes];
      for (std::size_t l = 0; l < kLanes; ++l) y[l] = (static_cast<double>(s + l) + 0.5) * h;
      for (; s + kLanes <= end; s += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
          acc[l] += std::abs(offset + slope * y[l]);
          y[l] += kLanes * h;
        }
      }
      for (; s < end; ++s) acc[0] += std::abs(offset + slope * ((static_cast<double>(s) + 0.5) * h));
    }
    for (double a : acc) total += a;
  }
  return 3.0 * total * h;
}

struct McResult {
  double estimate;
  double stderr_;
};

/// Monte Carlo estimate of D1 between two linkages: average of
/// |K_A(x,[0,y]) - K_B(x,[0,y])| over uniform (x, y). Draw k uses its own
/// random stream keyed by (seed, k).
inline McResult mc_d1(const CheckerboardCopula& a, const CheckerboardCopula& b, std::uint64_t draws,
                      std::uint64_t seed) {
  if (a.dimension() != b.dimension()) throw ArgumentError("dimension mismatch");
  if (draws < 2) throw ArgumentError("need at least two draws");
  const auto rows_a = detail::cumulative_rows(a);
  const auto rows_b = detail::cumulative_rows(b);
  const std::size_t d = a.dimension() - 1;
  const auto kernel = [d](const auto& rows, std::uint32_t n, std::span<const double> x, double y) {
    std::uint64_t prefix = 0;
    for (std::size_t t = 0; t < d; ++t) prefix = prefix * n + (cell_of(x[t], n) - 1);
    auto it = rows.find(prefix);
    if (it == rows.end() || it->second.back() <= 0.0) return y;
    return detail::linear_at(it->second, y) / it->second.back();
  };
  double sum = 0.0, sum_sq = 0.0;
  std::vector<double> x(d);
  for (std::uint64_t k = 0; k < draws; ++k) {
    RandomStream rng(seed, k);
    for (double& v : x) v = rng.uniform();
    const double y = rng.uniform();
    const double v = std::abs(kernel(rows_a, a.resolution(), x, y) - kernel(rows_b, b.resolution(), x, y));
    sum += v;
    sum_sq += v * v;
  }
  const double m = sum / static_cast<double>(draws);
  const double var = std::max(0.0, (sum_sq - static_cast<double>(draws) * m * m) / static_cast<double>(draws - 1));
  return {m, std::sqrt(var / static_cast<double>(draws))};
}

/// Distribution function of the multilinear empirical copula at `point`.
inline double empirical_copula_cdf(const PseudoSample& pseudo, std::span<const double> point) {
  if (point.size() != pseudo.rho()) throw ArgumentError("point has wrong dimension");
  const double n = static_cast<double>(pseudo.n());
  double total = 0.0;
  for (std::size_t i = 0; i < pseudo.n(); ++i) {
    double w = 1.0;
    for (std::size_t a = 0; a < pseudo.rho() && w > 0.0; ++a) {
      const auto& col = pseudo.column(a);
      const double lo = col.lower[i] / n, hi = col.upper[i] / n;
      w *= std::clamp((point[a] - lo) / (hi - lo), 0.0, 1.0);
    }
    total += w;
  }
  return total / n;
}

/// Distribution function of a checkerboard copula at `point`.
inline double checkerboard_cdf(const CheckerboardCopula& cb, std::span<const double> point) {
  if (point.size() != cb.dimension()) throw ArgumentError("point has wrong dimension");
  const double n = cb.resolution();
  double total = 0.0;
  for (const auto& [key, mass] : cb.entries()) {
    const CellIndex idx = cb.index_of(key);
    double w = mass;
    for (std::size_t a = 0; a < idx.size() && w > 0.0; ++a) w *= std::clamp(point[a] * n - (idx[a] - 1), 0.0, 1.0);
    total += w;
  }
  return total;
}

}  // namespace qmd::oracle
