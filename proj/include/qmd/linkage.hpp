#pragma once

// Linkage operator for the conditionally independent class and the
// Rosenblatt transform pair on checkerboard copulas.

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "qmd/core.hpp"
#include "qmd/empirical.hpp"

namespace qmd {

/// Lifts a bivariate checkerboard of (X_j, Y) to the rho-dimensional linkage
/// in which the remaining d-1 predictors are independent uniforms:
/// mass(i_1..i_d, k) = biv(i_j, k) / N^(d-1). `j` is 0-based.
inline CheckerboardCopula linkage_conditionally_independent(const CheckerboardCopula& biv, std::size_t d,
                                                            std::size_t j) {
  if (biv.dimension() != 2) throw ArgumentError("expected a bivariate checkerboard");
  if (d < 1) throw ArgumentError("need at least one predictor");
  if (j >= d) throw ArgumentError("distinguished axis out of range");
  const std::uint64_t n = biv.resolution();
  const auto others = detail::checked_pow(n, d - 1);
  if (!others || *others * biv.nonzero_cells() > kDenseCellLimit) throw ResourceError("linkage lift too large");
  if (!detail::checked_pow(n, d + 1)) throw ResourceError("N^rho grid does not fit a 64-bit cell key");
  const double share = 1.0 / static_cast<double>(*others);

  std::vector<CheckerboardCopula::Entry> out;
  out.reserve(*others * biv.nonzero_cells());
  std::vector<std::uint64_t> rest(d - 1, 0);
  for (const auto& [key, mass] : biv.entries()) {
    const std::uint64_t ij = key / n, k = key % n;
    std::fill(rest.begin(), rest.end(), 0);
    for (std::uint64_t c = 0; c < *others; ++c) {
      std::uint64_t cell = 0;
      for (std::size_t a = 0, r = 0; a < d; ++a) cell = cell * n + (a == j ? ij : rest[r++]);
      out.emplace_back(cell * n + k, mass * share);
      for (std::size_t t = rest.size(); t-- > 0;) {
        if (++rest[t] < n) break;
        rest[t] = 0;
      }
    }
  }
  return CheckerboardCopula(d + 1, biv.resolution(), std::move(out));
}

/// Checkerboard of the linkage of the empirical copula: the (first
/// predictor, response) empirical checkerboard lifted with independent
/// remaining predictors.
inline CheckerboardCopula linkage_of_empirical(const PseudoSample& pseudo, std::uint32_t resolution) {
  std::vector<std::size_t> predictors;
  for (std::size_t a = 0; a < pseudo.rho(); ++a) {
    if (a != pseudo.response_index()) predictors.push_back(a);
  }
  const std::size_t pair[] = {predictors.front(), pseudo.response_index()};
  const CheckerboardCopula biv = empirical_checkerboard(pseudo.select(pair, 1), resolution);
  return linkage_conditionally_independent(biv, predictors.size(), 0);
}

/// Rosenblatt transform Phi and its inverse Psi for one checkerboard copula.
/// Conditional distributions are tabulated once per prefix cell, so repeated
/// transforms are cheap.
///
/// Conditioning on a prefix cell without mass falls back to the uniform
/// conditional distribution. Checkerboard conditionals are continuous, so the
/// randomizers of the modified distribution functions never have an atom to
/// spread; they are accepted for interface parity and range-checked only.
class RosenblattTransform {
 public:
  explicit RosenblattTransform(const CheckerboardCopula& cb) : dim_(cb.dimension()), n_(cb.resolution()) {
    levels_.resize(dim_);
    std::vector<std::uint64_t> stride(dim_ + 1, 1);
    for (std::size_t a = dim_; a-- > 0;) stride[a] = stride[a + 1] * n_;
    for (const auto& [key, mass] : cb.entries()) {
      for (std::size_t k = 0; k < dim_; ++k) {
        const std::uint64_t prefix = key / stride[k];
        const std::uint64_t next = (key / stride[k + 1]) % n_;
        auto& row = levels_[k][prefix];
        if (row.mass.empty()) row.mass.assign(n_, 0.0);
        row.mass[next] += mass;
      }
    }
    for (auto& level : levels_) {
      for (auto& [prefix, row] : level) {
        row.cum.assign(n_ + 1, 0.0);
        for (std::uint32_t c = 0; c < n_; ++c) row.cum[c + 1] = row.cum[c] + row.mass[c];
      }
    }
  }

  std::size_t dimension() const { return dim_; }

  std::vector<double> forward(std::span<const double> x, std::span<const double> r) const {
    if (x.size() != dim_ || r.size() != dim_) throw ArgumentError("rosenblatt_forward: wrong vector length");
    for (double v : r) {
      if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("randomizer outside [0,1]");
    }
    std::vector<double> u(dim_);
    std::uint64_t prefix = 0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const std::uint32_t c = cell_of(x[k], n_);
      const Row* row = find(k, prefix);
      if (row == nullptr || row->cum[n_] <= 0.0) {
        u[k] = x[k];
      } else {
        const double within = x[k] * n_ - (c - 1);
        u[k] = std::clamp((row->cum[c - 1] + row->mass[c - 1] * within) / row->cum[n_], 0.0, 1.0);
      }
      prefix = prefix * n_ + (c - 1);
    }
    return u;
  }

  std::vector<double> inverse(std::span<const double> u) const {
    if (u.size() != dim_) throw ArgumentError("rosenblatt_inverse: wrong vector length");
    std::vector<double> z(dim_);
    std::uint64_t prefix = 0;
    for (std::size_t k = 0; k < dim_; ++k) {
      if (!(u[k] >= 0.0 && u[k] <= 1.0)) throw ArgumentError("rosenblatt_inverse: coordinate outside [0,1]");
      const Row* row = find(k, prefix);
      std::uint32_t c;
      if (row == nullptr || row->cum[n_] <= 0.0) {
        z[k] = u[k];
        c = cell_of(z[k], n_);
      } else {
        const double target = u[k] * row->cum[n_];
        // smallest cell with positive mass whose cumulative reaches the target
        c = n_;
        for (std::uint32_t t = 1; t <= n_; ++t) {
          if (row->mass[t - 1] > 0.0 && row->cum[t] >= target) {
            c = t;
            break;
          }
        }
        while (row->mass[c - 1] <= 0.0) --c;
        const double within = std::clamp((target - row->cum[c - 1]) / row->mass[c - 1], 0.0, 1.0);
        z[k] = (c - 1 + within) / n_;
        // keep z inside cell c so later conditioning uses the same cell
        if (within == 0.0 && c > 1) z[k] = std::nextafter(z[k], 1.0);
      }
      prefix = prefix * n_ + (c - 1);
    }
    return z;
  }

 private:
  struct Row {
    std::vector<double> mass;
    std::vector<double> cum;
  };

  const Row* find(std::size_t level, std::uint64_t prefix) const {
    auto it = levels_[level].find(prefix);
    return it == levels_[level].end() ? nullptr : &it->second;
  }

  std::size_t dim_;
  std::uint32_t n_;
  std::vector<std::unordered_map<std::uint64_t, Row>> levels_;
};

inline std::vector<double> rosenblatt_forward(const CheckerboardCopula& cb, std::span<const double> x,
                                              std::span<const double> r) {
  return RosenblattTransform(cb).forward(x, r);
}

inline std::vector<double> rosenblatt_inverse(const CheckerboardCopula& cb, std::span<const double> u) {
  return RosenblattTransform(cb).inverse(u);
}

}  // namespace qmd
