#pragma once

// From raw samples to pseudo-observations and empirical checkerboard copulas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "qmd/core.hpp"
#include "qmd/random.hpp"

namespace qmd {

/// Componentwise normalized ranks rank/n. Ties get the average rank of their
/// block (midrank) or are ordered by a seeded shuffle (random).
inline PseudoSample ranks(const Sample& sample, TiePolicy ties = TiePolicy::midrank,
                          std::optional<std::uint64_t> seed = std::nullopt) {
  if (ties == TiePolicy::random && !seed) seed = 0;
  const std::size_t n = sample.n();
  std::vector<PseudoSample::Column> cols(sample.rho());
  std::vector<std::size_t> order(n);
  for (std::size_t a = 0; a < sample.rho(); ++a) {
    const auto x = sample.column(a);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    auto& col = cols[a];
    col.ranks.resize(n);
    col.lower.resize(n);
    col.upper.resize(n);
    RandomStream rng(seed.value_or(0), a);
    for (std::size_t begin = 0; begin < n;) {
      std::size_t end = begin + 1;
      while (end < n && x[order[end]] == x[order[begin]]) ++end;
      const std::span<std::size_t> block(order.data() + begin, end - begin);
      if (block.size() > 1 && ties == TiePolicy::random) rng.shuffle(block);
      for (std::size_t t = 0; t < block.size(); ++t) {
        const std::size_t i = block[t];
        if (ties == TiePolicy::midrank) {
          col.lower[i] = static_cast<std::uint32_t>(begin);
          col.upper[i] = static_cast<std::uint32_t>(end);
          col.ranks[i] = (static_cast<double>(begin + end) + 1.0) / 2.0 / static_cast<double>(n);
        } else {
          col.lower[i] = static_cast<std::uint32_t>(begin + t);
          col.upper[i] = static_cast<std::uint32_t>(begin + t + 1);
          col.ranks[i] = static_cast<double>(begin + t + 1) / static_cast<double>(n);
        }
      }
      begin = end;
    }
  }
  return PseudoSample(std::move(cols), sample.response_index(), ties, seed);
}

/// N = max(2, floor(n^s)) with s = 1/rho unless given.
inline std::uint32_t resolution_for(std::size_t n, std::size_t rho, std::optional<double> s = std::nullopt) {
  if (n < 2) throw ArgumentError("resolution_for needs n >= 2");
  if (rho < 2) throw ArgumentError("resolution_for needs rho >= 2");
  const double exponent = s.value_or(1.0 / static_cast<double>(rho));
  if (!(exponent > 0.0 && exponent < 1.0)) throw ArgumentError("exponent s must lie in (0,1)");
  double root = std::pow(static_cast<double>(n), exponent);
  // pow(1000, 1/3) lands just below 10; snap values within rounding noise.
  const double nearest = std::round(root);
  if (std::abs(root - nearest) <= 1e-9 * std::max(1.0, nearest)) root = nearest;
  const auto floored = static_cast<std::uint64_t>(std::floor(root));
  return static_cast<std::uint32_t>(std::max<std::uint64_t>(2, floored));
}

namespace detail {

struct AxisPiece {
  std::uint64_t offset;   // 0-based cell index times the axis stride
  std::uint64_t overlap;  // overlap length in units of 1/(n*N)
};

// Cells of an N-grid overlapped by the rank box (lower/n, upper/n].
inline void box_pieces(std::uint64_t lower, std::uint64_t upper, std::uint64_t n, std::uint64_t res,
                       std::uint64_t stride, std::vector<AxisPiece>& out) {
  out.clear();
  const std::uint64_t lo = lower * res;
  const std::uint64_t hi = upper * res;
  for (std::uint64_t j = lo / n; j * n < hi; ++j) {
    const std::uint64_t ov = std::min(hi, (j + 1) * n) - std::max(lo, j * n);
    if (ov > 0) out.push_back({j * stride, ov});
  }
}

}  // namespace detail

/// N-checkerboard approximation of the multilinear empirical copula: every
/// observation spreads mass 1/n uniformly over its rank box, and each cell
/// receives the overlap share. Counting is exact integer arithmetic whenever
/// every box has unit width and n*N^rho fits a double mantissa.
inline CheckerboardCopula empirical_checkerboard(const PseudoSample& pseudo, std::uint32_t resolution) {
  if (resolution < 1) throw ArgumentError("resolution must be at least 1");
  const std::size_t rho = pseudo.rho();
  const std::uint64_t n = pseudo.n();
  const std::uint64_t res = resolution;
  if (!detail::checked_pow(res, rho)) throw ResourceError("N^rho grid does not fit a 64-bit cell key");
  if (!detail::checked_mul(n, res) || n * res > (1ULL << 62)) throw ResourceError("n*N too large");

  std::vector<std::uint64_t> stride(rho, 1);
  for (std::size_t a = rho - 1; a-- > 0;) stride[a] = stride[a + 1] * res;

  const auto denominator = [&]() -> std::optional<std::uint64_t> {
    if (pseudo.has_wide_spans()) return std::nullopt;
    auto p = detail::checked_pow(res, rho);
    auto d = p ? detail::checked_mul(*p, n) : std::nullopt;
    if (!d || *d > (1ULL << 53)) return std::nullopt;
    return d;
  }();

  std::vector<std::vector<detail::AxisPiece>> pieces(rho);
  std::vector<std::size_t> pos(rho);
  std::vector<double> factors(rho);
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  std::unordered_map<std::uint64_t, double> weights;
  std::uint64_t visited = 0;

  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t combos = 1;
    for (std::size_t a = 0; a < rho; ++a) {
      const auto& col = pseudo.column(a);
      detail::box_pieces(col.lower[i], col.upper[i], n, res, stride[a], pieces[a]);
      combos *= pieces[a].size();
    }
    visited += combos;
    if (visited > kDenseCellLimit) throw ResourceError("checkerboard aggregation exceeds the cell budget");

    std::fill(pos.begin(), pos.end(), 0);
    for (;;) {
      std::uint64_t key = 0;
      for (std::size_t a = 0; a < rho; ++a) key += pieces[a][pos[a]].offset;
      if (denominator) {
        std::uint64_t c = 1;
        for (std::size_t a = 0; a < rho; ++a) c *= pieces[a][pos[a]].overlap;
        counts[key] += c;
      } else {
        for (std::size_t a = 0; a < rho; ++a) {
          const auto& col = pseudo.column(a);
          const double width = static_cast<double>(col.upper[i] - col.lower[i]) * static_cast<double>(res);
          factors[a] = static_cast<double>(pieces[a][pos[a]].overlap) / width;
        }
        // canonical factor order keeps the product independent of axis order
        std::sort(factors.begin(), factors.end());
        double w = 1.0;
        for (double f : factors) w *= f;
        weights[key] += w;
      }
      bool done = true;
      for (std::size_t a = rho; a-- > 0;) {
        if (++pos[a] < pieces[a].size()) {
          done = false;
          break;
        }
        pos[a] = 0;
      }
      if (done) break;
    }
  }

  std::vector<CheckerboardCopula::Entry> entries;
  if (denominator) {
    const double den = static_cast<double>(*denominator);
    entries.reserve(counts.size());
    for (const auto& [key, c] : counts) entries.emplace_back(key, static_cast<double>(c) / den);
  } else {
    const double nn = static_cast<double>(n);
    entries.reserve(weights.size());
    for (const auto& [key, w] : weights) entries.emplace_back(key, w / nn);
  }
  return CheckerboardCopula(rho, resolution, std::move(entries));
}

}  // namespace qmd
