#pragma once

// Domain types shared by every part of the library: samples, pseudo-samples,
// sparse checkerboard copulas, conditional distribution functions and
// dependence estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qmd {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kInvariantTolerance = 1e-12;
inline constexpr double kCompareTolerance = 1e-9;
inline constexpr std::uint64_t kDenseCellLimit = 100'000'000;

enum class TiePolicy { midrank, random };

inline const char* to_string(TiePolicy p) {
  return p == TiePolicy::midrank ? "midrank" : "random";
}

inline TiePolicy parse_tie_policy(const std::string& s) {
  if (s == "midrank") return TiePolicy::midrank;
  if (s == "random") return TiePolicy::random;
  throw ArgumentError("unknown tie policy '" + s + "'");
}

namespace detail {

// a * b, or nullopt on 64-bit overflow.
inline std::optional<std::uint64_t> checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::nullopt;
  return a * b;
}

inline std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    auto next = checked_mul(r, base);
    if (!next) return std::nullopt;
    r = *next;
  }
  return r;
}

}  // namespace detail

/// Raw n x rho observation table with one designated response column.
class Sample {
 public:
  Sample(std::vector<std::vector<double>> columns, std::vector<std::string> column_names,
         std::size_t response_index)
      : columns_(std::move(columns)), names_(std::move(column_names)), response_(response_index) {
    if (columns_.size() < 2) throw ArgumentError("a sample needs at least two columns");
    if (names_.empty()) {
      for (std::size_t a = 0; a < columns_.size(); ++a) names_.push_back("V" + std::to_string(a + 1));
    }
    if (names_.size() != columns_.size()) throw ArgumentError("column name count does not match column count");
    if (response_ >= columns_.size()) throw ArgumentError("response index out of range");
    const std::size_t n = columns_.front().size();
    if (n < 2) throw ArgumentError("a sample needs at least two observations");
    for (const auto& col : columns_) {
      if (col.size() != n) throw ArgumentError("columns have different lengths");
      for (double v : col) {
        if (!std::isfinite(v)) throw ArgumentError("sample contains a non-finite value");
      }
    }
  }

  std::size_t n() const { return columns_.front().size(); }
  std::size_t rho() const { return columns_.size(); }
  std::size_t d() const { return columns_.size() - 1; }
  std::size_t response_index() const { return response_; }
  std::span<const double> column(std::size_t a) const { return columns_.at(a); }
  const std::vector<std::string>& column_names() const { return names_; }

  std::vector<std::size_t> predictor_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < rho(); ++a) {
      if (a != response_) out.push_back(a);
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<std::string> names_;
  std::size_t response_;
};

/// Componentwise normalized ranks. Besides the rank value in (0,1] each entry
/// keeps the integer span (lower, upper] of rank positions it occupies: width
/// one for untied observations, the whole tie block under midranks.
class PseudoSample {
 public:
  struct Column {
    std::vector<double> ranks;
    std::vector<std::uint32_t> lower;
    std::vector<std::uint32_t> upper;
  };

  PseudoSample(std::vector<Column> columns, std::size_t response_index, TiePolicy ties,
               std::optional<std::uint64_t> seed)
      : columns_(std::move(columns)), response_(response_index), ties_(ties), seed_(seed) {
    if (columns_.size() < 2) throw ArgumentError("a pseudo-sample needs at least two columns");
    if (response_ >= columns_.size()) throw ArgumentError("response index out of range");
    const std::size_t n = columns_.front().ranks.size();
    if (n < 2) throw ArgumentError("a pseudo-sample needs at least two observations");
    for (const auto& c : columns_) {
      if (c.ranks.size() != n || c.lower.size() != n || c.upper.size() != n)
        throw ArgumentError("pseudo-sample columns have different lengths");
      for (std::size_t i = 0; i < n; ++i) {
        if (!(c.ranks[i] > 0.0 && c.ranks[i] <= 1.0)) throw DomainError("rank outside (0,1]");
        if (c.lower[i] >= c.upper[i] || c.upper[i] > n) throw DomainError("invalid rank span");
      }
    }
  }

  std::size_t n() const { return columns_.front().ranks.size(); }
  std::size_t rho() const { return columns_.size(); }
  std::size_t response_index() const { return response_; }
  TiePolicy tie_policy() const { return ties_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  const Column& column(std::size_t a) const { return columns_.at(a); }
  std::span<const double> ranks(std::size_t a) const { return columns_.at(a).ranks; }

  bool has_wide_spans() const {
    for (const auto& c : columns_) {
      for (std::size_t i = 0; i < c.lower.size(); ++i) {
        if (c.upper[i] - c.lower[i] != 1) return true;
      }
    }
    return false;
  }

  /// Keeps the listed columns in the given order; `response_position` is the
  /// position of the response inside `columns`.
  PseudoSample select(std::span<const std::size_t> columns, std::size_t response_position) const {
    std::vector<Column> picked;
    picked.reserve(columns.size());
    for (std::size_t a : columns) picked.push_back(columns_.at(a));
    return PseudoSample(std::move(picked), response_position, ties_, seed_);
  }

 private:
  std::vector<Column> columns_;
  std::size_t response_;
  TiePolicy ties_;
  std::optional<std::uint64_t> seed_;
};

using CellIndex = std::vector<std::uint32_t>;  // 1-based per axis

/// Maps a point of (0,1]^rho to the cell containing it. Cells are
/// ((i-1)/N, i/N] with 0 adjoined to the first cell.
inline CellIndex cell_of(std::span<const double> point, std::uint32_t resolution) {
  if (resolution == 0) throw ArgumentError("resolution must be positive");
  CellIndex out(point.size());
  for (std::size_t a = 0; a < point.size(); ++a) {
    const double x = point[a];
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("coordinate outside [0,1]");
    auto c = static_cast<std::uint32_t>(std::ceil(x * resolution));
    out[a] = std::clamp<std::uint32_t>(c, 1, resolution);
  }
  return out;
}

inline std::uint32_t cell_of(double x, std::uint32_t resolution) {
  return cell_of(std::span<const double>(&x, 1), resolution).front();
}

/// Checkerboard copula of resolution N on [0,1]^rho stored as a sorted sparse
/// list of (row-major cell key, mass). Immutable after construction.
class CheckerboardCopula {
 public:
  using Entry = std::pair<std::uint64_t, double>;

  CheckerboardCopula(std::size_t dimension, std::uint32_t resolution, std::vector<Entry> entries)
      : dim_(dimension), n_(resolution) {
    if (dim_ < 1) throw ArgumentError("dimension must be at least 1");
    if (n_ < 1) throw ArgumentError("resolution must be at least 1");
    auto cells = detail::checked_pow(n_, dim_);
    if (!cells) throw ResourceError("N^rho grid does not fit a 64-bit cell key");
    cells_ = *cells;
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    entries_.reserve(entries.size());
    for (const auto& [key, mass] : entries) {
      if (key >= cells_) throw DomainError("cell key outside the grid");
      if (!(mass >= 0.0) || !std::isfinite(mass)) throw DomainError("negative or non-finite cell mass");
      if (mass == 0.0) continue;
      if (!entries_.empty() && entries_.back().first == key) {
        entries_.back().second += mass;
      } else {
        entries_.emplace_back(key, mass);
      }
    }
    validate(kCompareTolerance);
  }

  static CheckerboardCopula from_cells(std::size_t dimension, std::uint32_t resolution,
                                       const std::vector<std::pair<CellIndex, double>>& cells) {
    std::vector<Entry> entries;
    entries.reserve(cells.size());
    for (const auto& [idx, mass] : cells) {
      if (idx.size() != dimension) throw ArgumentError("cell index has wrong dimension");
      entries.emplace_back(encode(idx, resolution), mass);
    }
    return CheckerboardCopula(dimension, resolution, std::move(entries));
  }

  std::size_t dimension() const { return dim_; }
  std::uint32_t resolution() const { return n_; }
  std::uint64_t grid_cells() const { return cells_; }
  std::size_t nonzero_cells() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }

  static std::uint64_t encode(const CellIndex& idx, std::uint32_t resolution) {
    std::uint64_t key = 0;
    for (std::uint32_t i : idx) {
      if (i < 1 || i > resolution) throw DomainError("cell index out of range");
      key = key * resolution + (i - 1);
    }
    return key;
  }

  std::uint64_t key_of(const CellIndex& idx) const {
    if (idx.size() != dim_) throw ArgumentError("cell index has wrong dimension");
    return encode(idx, n_);
  }

  CellIndex index_of(std::uint64_t key) const {
    CellIndex idx(dim_);
    for (std::size_t a = dim_; a-- > 0;) {
      idx[a] = static_cast<std::uint32_t>(key % n_) + 1;
      key /= n_;
    }
    return idx;
  }

  double mass_at(std::uint64_t key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, std::uint64_t k) { return e.first < k; });
    return (it != entries_.end() && it->first == key) ? it->second : 0.0;
  }

  double mass(const CellIndex& idx) const { return mass_at(key_of(idx)); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.second;
    return s;
  }

  /// Largest deviation of any axis slab mass from 1/N (including total mass).
  double margin_defect() const {
    std::vector<double> slabs(dim_ * n_, 0.0);
    for (const auto& [key, mass] : entries_) {
      std::uint64_t k = key;
      for (std::size_t a = dim_; a-- > 0;) {
        slabs[a * n_ + k % n_] += mass;
        k /= n_;
      }
    }
    double worst = std::abs(total_mass() - 1.0);
    for (double s : slabs) worst = std::max(worst, std::abs(s - 1.0 / n_));
    return worst;
  }

  void validate(double tol) const {
    if (margin_defect() > tol) throw DomainError("checkerboard masses do not form a copula");
  }

 private:
  std::size_t dim_;
  std::uint32_t n_;
  std::uint64_t cells_ = 0;
  std::vector<Entry> entries_;
};

/// Sums out every axis not listed in `keep_axes` (0-based, strictly increasing).
inline CheckerboardCopula marginalize(const CheckerboardCopula& cb, std::span<const std::size_t> keep_axes) {
  if (keep_axes.empty()) throw ArgumentError("marginalize needs at least one axis");
  for (std::size_t i = 0; i < keep_axes.size(); ++i) {
    if (keep_axes[i] >= cb.dimension()) throw ArgumentError("axis out of range");
    if (i > 0 && keep_axes[i] <= keep_axes[i - 1]) throw ArgumentError("axes must be strictly increasing");
  }
  const std::uint32_t n = cb.resolution();
  std::map<std::uint64_t, double> acc;
  for (const auto& [key, mass] : cb.entries()) {
    const CellIndex full = cb.index_of(key);
    std::uint64_t k = 0;
    for (std::size_t a : keep_axes) k = k * n + (full[a] - 1);
    acc[k] += mass;
  }
  return CheckerboardCopula(keep_axes.size(), n, {acc.begin(), acc.end()});
}

inline CheckerboardCopula marginalize(const CheckerboardCopula& cb, std::initializer_list<std::size_t> keep_axes) {
  std::vector<std::size_t> v(keep_axes);
  return marginalize(cb, std::span<const std::size_t>(v));
}

/// Reorders axes: output axis a is input axis order[a].
inline CheckerboardCopula permute_axes(const CheckerboardCopula& cb, std::span<const std::size_t> order) {
  if (order.size() != cb.dimension()) throw ArgumentError("axis permutation has wrong length");
  std::vector<bool> seen(order.size(), false);
  for (std::size_t a : order) {
    if (a >= order.size() || seen[a]) throw ArgumentError("not an axis permutation");
    seen[a] = true;
  }
  const std::uint32_t n = cb.resolution();
  std::vector<CheckerboardCopula::Entry> out;
  out.reserve(cb.nonzero_cells());
  for (const auto& [key, mass] : cb.entries()) {
    const CellIndex full = cb.index_of(key);
    std::uint64_t k = 0;
    for (std::size_t a : order) k = k * n + (full[a] - 1);
    out.emplace_back(k, mass);
  }
  return CheckerboardCopula(cb.dimension(), n, std::move(out));
}

/// Piecewise-linear conditional distribution function of the response given
/// one predictor cell; breakpoints at j/N.
class ConditionalCdf {
 public:
  ConditionalCdf(std::vector<double> cumulative, bool empty_cell = false)
      : cum_(std::move(cumulative)), empty_(empty_cell) {
    if (cum_.size() < 2) throw ArgumentError("conditional cdf needs at least one cell");
    if (cum_.front() != 0.0 || cum_.back() != 1.0) throw DomainError("conditional cdf must run from 0 to 1");
    for (std::size_t j = 1; j < cum_.size(); ++j) {
      if (cum_[j] < cum_[j - 1]) throw DomainError("conditional cdf must be nondecreasing");
    }
  }

  static ConditionalCdf uniform(std::uint32_t resolution) {
    std::vector<double> c(resolution + 1);
    for (std::uint32_t j = 0; j <= resolution; ++j) c[j] = static_cast<double>(j) / resolution;
    c.back() = 1.0;
    return ConditionalCdf(std::move(c), true);
  }

  std::uint32_t resolution() const { return static_cast<std::uint32_t>(cum_.size() - 1); }
  std::span<const double> cumulative() const { return cum_; }
  bool empty_cell() const { return empty_; }

  double operator()(double y) const {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    const std::uint32_t n = resolution();
    const double t = y * n;
    auto j = static_cast<std::uint32_t>(t);
    if (j >= n) j = n - 1;
    return cum_[j] + (t - j) * (cum_[j + 1] - cum_[j]);
  }

 private:
  std::vector<double> cum_;
  bool empty_;
};

/// A dependence estimate together with everything needed to reproduce it.
struct DependenceEstimate {
  double value = 0.0;
  std::size_t n = 0;
  std::uint32_t resolution = 0;
  std::optional<double> s;  // empty when the resolution was set explicitly
  std::vector<std::size_t> predictor_indices;
  std::size_t response_index = 0;
  std::optional<std::uint64_t> seed;
  TiePolicy tie_policy = TiePolicy::midrank;
};

}  // namespace qmd
