#pragma once

// Exact dependence measure and D-metrics on checkerboard copulas, and the
// empirical checkerboard estimator built on top of them.
//
// Unless stated otherwise the response is the last axis of a checkerboard and
// the first d = rho - 1 axes are the predictors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "qmd/core.hpp"
#include "qmd/empirical.hpp"

namespace qmd {

namespace detail {

inline CheckerboardCopula response_last(const CheckerboardCopula& cb, std::size_t response_axis) {
  if (cb.dimension() < 2) throw ArgumentError("need at least one predictor axis and a response axis");
  if (response_axis >= cb.dimension()) throw ArgumentError("response axis out of range");
  if (response_axis == cb.dimension() - 1) return cb;
  std::vector<std::size_t> order;
  for (std::size_t a = 0; a < cb.dimension(); ++a) {
    if (a != response_axis) order.push_back(a);
  }
  order.push_back(response_axis);
  return permute_axes(cb, order);
}

// Calls fn(prefix_key, masses) for every predictor cell carrying mass, where
// masses[k] is the mass of the cell (prefix, k+1). Response must be last.
template <typename Fn>
void for_each_predictor_cell(const CheckerboardCopula& cb, Fn&& fn) {
  const std::uint32_t n = cb.resolution();
  std::vector<double> masses(n, 0.0);
  const auto entries = cb.entries();
  for (std::size_t i = 0; i < entries.size();) {
    const std::uint64_t prefix = entries[i].first / n;
    std::fill(masses.begin(), masses.end(), 0.0);
    for (; i < entries.size() && entries[i].first / n == prefix; ++i) {
      masses[entries[i].first % n] = entries[i].second;
    }
    fn(prefix, std::as_const(masses));
  }
}

// Integral over a segment of width h of |g| where g is linear with end values a, b.
inline double segment_abs_integral(double a, double b, double h) {
  if ((a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0)) return h * (std::abs(a) + std::abs(b)) / 2.0;
  return h * (a * a + b * b) / (2.0 * (std::abs(a) + std::abs(b)));
}

// Integral over a segment of width h of |g|^p, g linear with end values a, b.
inline double segment_pow_integral(double a, double b, double h, double p) {
  if (p == 2.0) return h * (a * a + a * b + b * b) / 3.0;
  const auto same_sign = [&](double u, double v) {
    // u, v >= 0
    if (v < u) std::swap(u, v);
    if (v - u <= 1e-6 * v) {
      // nearly constant: Simpson's rule is exact to far below double precision here
      const double m = (u + v) / 2.0;
      return h * (std::pow(u, p) + 4.0 * std::pow(m, p) + std::pow(v, p)) / 6.0;
    }
    return h * (std::pow(v, p + 1.0) - std::pow(u, p + 1.0)) / ((p + 1.0) * (v - u));
  };
  if ((a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0)) return same_sign(std::abs(a), std::abs(b));
  const double ua = std::abs(a), ub = std::abs(b);
  return h * (std::pow(ua, p + 1.0) + std::pow(ub, p + 1.0)) / ((p + 1.0) * (ua + ub));
}

inline double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

inline double eval_cumulative(std::span<const double> cum, double y) {
  const auto n = static_cast<std::uint32_t>(cum.size() - 1);
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const double t = y * n;
  auto j = static_cast<std::uint32_t>(t);
  if (j >= n) j = n - 1;
  return cum[j] + (t - j) * (cum[j + 1] - cum[j]);
}

}  // namespace detail

/// Conditional distribution function of the response given the predictor
/// cell `d_cell`. Cells without mass get the uniform cdf and are flagged.
inline ConditionalCdf conditional_cdf(const CheckerboardCopula& cb, const CellIndex& d_cell) {
  if (cb.dimension() < 2) throw ArgumentError("need at least one predictor axis and a response axis");
  if (d_cell.size() != cb.dimension() - 1) throw ArgumentError("predictor cell has wrong dimension");
  const std::uint32_t n = cb.resolution();
  CellIndex idx = d_cell;
  idx.push_back(1);
  const std::uint64_t base = cb.key_of(idx);
  std::vector<double> cum(n + 1, 0.0);
  for (std::uint32_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + cb.mass_at(base + k);
  const double total = cum[n];
  if (total <= 0.0) return ConditionalCdf::uniform(n);
  for (double& c : cum) c = std::min(1.0, c / total);
  cum[n] = 1.0;
  return ConditionalCdf(std::move(cum));
}

/// zeta^1 of a checkerboard copula: 3 times the mu-weighted L1 distance
/// between the conditional cdfs of the response and the identity, integrated
/// segment by segment in closed form.
inline double zeta1_exact(const CheckerboardCopula& copula, std::optional<std::size_t> response_axis = std::nullopt) {
  const CheckerboardCopula cb = detail::response_last(copula, response_axis.value_or(copula.dimension() - 1));
  const std::uint32_t n = cb.resolution();
  const double h = 1.0 / n;
  std::vector<double> terms;
  std::vector<double> g(n + 1);
  detail::for_each_predictor_cell(cb, [&](std::uint64_t, const std::vector<double>& masses) {
    // work with m*F(y) - m*y to avoid dividing by the cell mass
    double cum = 0.0;
    for (std::uint32_t k = 0; k < n; ++k) cum += masses[k];
    const double m = cum;
    const double snap = 64.0 * std::numeric_limits<double>::epsilon() * m;
    cum = 0.0;
    g[0] = 0.0;
    for (std::uint32_t k = 1; k <= n; ++k) {
      cum += masses[k - 1];
      double v = (k == n ? m : cum) - m * (static_cast<double>(k) / n);
      if (std::abs(v) <= snap) v = 0.0;
      g[k] = v;
    }
    double t = 0.0;
    for (std::uint32_t k = 1; k <= n; ++k) t += detail::segment_abs_integral(g[k - 1], g[k], h);
    terms.push_back(t);
  });
  const double value = 3.0 * detail::sorted_sum(terms);
  return std::clamp(value, 0.0, 1.0);
}

struct EstimatorConfig {
  std::optional<double> s;
  std::optional<std::uint32_t> resolution;  // overrides s
  TiePolicy ties = TiePolicy::midrank;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline void check_predictors(std::span<const std::size_t> predictors, std::size_t rho, std::size_t response) {
  if (predictors.empty()) throw ArgumentError("at least one predictor is required");
  std::vector<bool> seen(rho, false);
  for (std::size_t a : predictors) {
    if (a >= rho) throw ArgumentError("predictor index out of range");
    if (a == response) throw ArgumentError("the response cannot also be a predictor");
    if (seen[a]) throw ArgumentError("duplicate predictor index");
    seen[a] = true;
  }
}

}  // namespace detail

/// Empirical checkerboard estimate from precomputed pseudo-observations.
inline DependenceEstimate zeta1_estimate(const PseudoSample& pseudo, std::span<const std::size_t> predictors,
                                         const EstimatorConfig& config) {
  const std::size_t response = pseudo.response_index();
  detail::check_predictors(predictors, pseudo.rho(), response);
  std::vector<std::size_t> columns(predictors.begin(), predictors.end());
  columns.push_back(response);
  const PseudoSample projected = pseudo.select(columns, columns.size() - 1);

  DependenceEstimate est;
  est.n = pseudo.n();
  if (config.resolution) {
    if (*config.resolution < 1) throw ArgumentError("resolution must be at least 1");
    est.resolution = *config.resolution;
  } else {
    est.s = config.s.value_or(1.0 / static_cast<double>(columns.size()));
    est.resolution = resolution_for(est.n, columns.size(), est.s);
  }
  est.value = zeta1_exact(empirical_checkerboard(projected, est.resolution));
  est.predictor_indices.assign(predictors.begin(), predictors.end());
  est.response_index = response;
  est.seed = pseudo.seed();
  est.tie_policy = pseudo.tie_policy();
  return est;
}

inline DependenceEstimate zeta1_estimate(const Sample& sample, std::span<const std::size_t> predictors,
                                         const EstimatorConfig& config = {}) {
  detail::check_predictors(predictors, sample.rho(), sample.response_index());
  return zeta1_estimate(ranks(sample, config.ties, config.seed), predictors, config);
}

inline DependenceEstimate zeta1_estimate(const Sample& sample, const EstimatorConfig& config = {}) {
  const auto predictors = sample.predictor_indices();
  return zeta1_estimate(sample, predictors, config);
}

/// One estimate per single predictor, followed by the full predictor set
/// (omitted when there is only one predictor).
inline std::vector<DependenceEstimate> pairwise_profile(const Sample& sample, const EstimatorConfig& config = {}) {
  const PseudoSample pseudo = ranks(sample, config.ties, config.seed);
  const auto all = sample.predictor_indices();
  std::vector<DependenceEstimate> out;
  for (std::size_t a : all) {
    const std::size_t single[] = {a};
    out.push_back(zeta1_estimate(pseudo, single, config));
  }
  if (all.size() > 1) out.push_back(zeta1_estimate(pseudo, all, config));
  return out;
}

// ---------------------------------------------------------------------------
// D-metrics between linkages

enum class MetricKind { d1, d_infty, d_p };

struct MetricResult {
  MetricKind kind = MetricKind::d1;
  double p = 1.0;
  double value = 0.0;
  std::uint64_t grid = 0;  // lcm of the two resolutions
};

/// True if the first d axes carry the product margin: every predictor cell
/// holds mass 1/N^d.
inline bool is_linkage(const CheckerboardCopula& cb, double tol = kCompareTolerance) {
  if (cb.dimension() < 2) return false;
  const auto cells = detail::checked_pow(cb.resolution(), cb.dimension() - 1);
  if (!cells) return false;
  const double expected = 1.0 / static_cast<double>(*cells);
  std::uint64_t count = 0;
  bool ok = true;
  detail::for_each_predictor_cell(cb, [&](std::uint64_t, const std::vector<double>& masses) {
    ++count;
    double m = 0.0;
    for (double v : masses) m += v;
    if (std::abs(m - expected) > tol) ok = false;
  });
  return ok && count == *cells;
}

namespace detail {

// Pairs up the predictor cells of two linkages on their common refinement.
// Each combination carries the lambda^d volume shared by cell a of A and
// cell b of B; within it both conditional cdfs are constant in x.
class LinkagePair {
 public:
  LinkagePair(const CheckerboardCopula& a, const CheckerboardCopula& b)
      : na_(a.resolution()), nb_(b.resolution()) {
    if (a.dimension() != b.dimension()) throw ArgumentError("linkages have different dimensions");
    if (!is_linkage(a) || !is_linkage(b)) throw DomainError("D-metrics need linkage inputs (product predictor margin)");
    const std::size_t d = a.dimension() - 1;
    rows_a_ = rows(a);
    rows_b_ = rows(b);

    // per-axis overlaps of the two partitions, in units of 1/(na*nb)
    struct Piece {
      std::uint64_t ia, ib;
      double length;
    };
    std::vector<Piece> axis;
    const std::uint64_t unit = static_cast<std::uint64_t>(na_) * nb_;
    for (std::uint64_t ia = 0, ib = 0; ia < na_ && ib < nb_;) {
      const std::uint64_t lo = std::max(ia * nb_, ib * na_);
      const std::uint64_t hi = std::min((ia + 1) * nb_, (ib + 1) * na_);
      if (hi > lo) axis.push_back({ia, ib, static_cast<double>(hi - lo) / static_cast<double>(unit)});
      if ((ia + 1) * nb_ < (ib + 1) * na_) {
        ++ia;
      } else if ((ia + 1) * nb_ > (ib + 1) * na_) {
        ++ib;
      } else {
        ++ia;
        ++ib;
      }
    }
    const auto total = checked_pow(axis.size(), d);
    if (!total || *total > kDenseCellLimit) throw ResourceError("common refinement too large");
    combos_.reserve(*total);
    std::vector<std::size_t> pos(d, 0);
    for (;;) {
      Combo c{0, 0, 1.0};
      for (std::size_t t = 0; t < d; ++t) {
        c.prefix_a = c.prefix_a * na_ + axis[pos[t]].ia;
        c.prefix_b = c.prefix_b * nb_ + axis[pos[t]].ib;
        c.weight *= axis[pos[t]].length;
      }
      combos_.push_back(c);
      bool done = true;
      for (std::size_t t = d; t-- > 0;) {
        if (++pos[t] < axis.size()) {
          done = false;
          break;
        }
        pos[t] = 0;
      }
      if (done) break;
    }

    // y breakpoints: union of both grids
    std::vector<std::uint64_t> ticks;
    for (std::uint64_t j = 0; j <= na_; ++j) ticks.push_back(j * nb_);
    for (std::uint64_t k = 0; k <= nb_; ++k) ticks.push_back(k * na_);
    std::sort(ticks.begin(), ticks.end());
    ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
    for (auto t : ticks) breaks_.push_back(static_cast<double>(t) / static_cast<double>(unit));
    grid_ = std::lcm(static_cast<std::uint64_t>(na_), static_cast<std::uint64_t>(nb_));
  }

  std::uint64_t grid() const { return grid_; }
  std::span<const double> breakpoints() const { return breaks_; }

  double phi(double y) const {
    std::vector<double> terms;
    terms.reserve(combos_.size());
    for (const auto& c : combos_) {
      const double diff = eval_cumulative(rows_a_.at(c.prefix_a), y) - eval_cumulative(rows_b_.at(c.prefix_b), y);
      terms.push_back(c.weight * std::abs(diff));
    }
    return sorted_sum(terms);
  }

  // Sum over combinations of weight * integral of seg(FA - FB) over [0,1].
  template <typename Seg>
  double integrate(Seg&& seg) const {
    std::vector<double> terms;
    terms.reserve(combos_.size());
    std::vector<double> diff(breaks_.size());
    for (const auto& c : combos_) {
      const auto& ra = rows_a_.at(c.prefix_a);
      const auto& rb = rows_b_.at(c.prefix_b);
      for (std::size_t t = 0; t < breaks_.size(); ++t) {
        diff[t] = eval_cumulative(ra, breaks_[t]) - eval_cumulative(rb, breaks_[t]);
      }
      double s = 0.0;
      for (std::size_t t = 1; t < breaks_.size(); ++t) s += seg(diff[t - 1], diff[t], breaks_[t] - breaks_[t - 1]);
      terms.push_back(c.weight * s);
    }
    return sorted_sum(terms);
  }

 private:
  struct Combo {
    std::uint64_t prefix_a, prefix_b;
    double weight;
  };

  static std::unordered_map<std::uint64_t, std::vector<double>> rows(const CheckerboardCopula& cb) {
    std::unordered_map<std::uint64_t, std::vector<double>> out;
    const std::uint32_t n = cb.resolution();
    for_each_predictor_cell(cb, [&](std::uint64_t prefix, const std::vector<double>& masses) {
      std::vector<double> cum(n + 1, 0.0);
      for (std::uint32_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + masses[k];
      const double total = cum[n];
      for (double& c : cum) c = std::min(1.0, c / total);
      cum[n] = 1.0;
      out.emplace(prefix, std::move(cum));
    });
    return out;
  }

  std::uint32_t na_, nb_;
  std::uint64_t grid_ = 0;
  std::unordered_map<std::uint64_t, std::vector<double>> rows_a_, rows_b_;
  std::vector<Combo> combos_;
  std::vector<double> breaks_;
};

}  // namespace detail

inline MetricResult d1(const CheckerboardCopula& a, const CheckerboardCopula& b) {
  const detail::LinkagePair pair(a, b);
  const double v = pair.integrate(detail::segment_abs_integral);
  return {MetricKind::d1, 1.0, std::clamp(v, 0.0, 1.0), pair.grid()};
}

/// sup_y phi(y). phi is a sum of absolute values of functions that are linear
/// between consecutive breakpoints, hence convex there, so the supremum is
/// attained at a breakpoint.
inline MetricResult d_infty(const CheckerboardCopula& a, const CheckerboardCopula& b) {
  const detail::LinkagePair pair(a, b);
  double best = 0.0;
  for (double y : pair.breakpoints()) best = std::max(best, pair.phi(y));
  return {MetricKind::d_infty, std::numeric_limits<double>::infinity(), std::clamp(best, 0.0, 1.0), pair.grid()};
}

/// D_p (not its p-th power) for p in (1, inf).
inline MetricResult d_p(const CheckerboardCopula& a, const CheckerboardCopula& b, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ArgumentError("d_p needs 1 < p < inf; use d1 or d_infty");
  const detail::LinkagePair pair(a, b);
  const double pp = pair.integrate([p](double u, double v, double h) { return detail::segment_pow_integral(u, v, h, p); });
  return {MetricKind::d_p, p, std::clamp(std::pow(std::max(pp, 0.0), 1.0 / p), 0.0, 1.0), pair.grid()};
}

inline double phi(const CheckerboardCopula& a, const CheckerboardCopula& b, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw ArgumentError("y must lie in [0,1]");
  return detail::LinkagePair(a, b).phi(y);
}

}  // namespace qmd
