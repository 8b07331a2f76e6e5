#pragma once

// Shared domain types: point sequences, metrics, the grid cost model that
// unifies DTW and GED, and the two alignment objects (couplings and monotone
// matchings) with their costs. Everything here is immutable after
// construction and safe to share across threads.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "warpbox/scalar.hpp"

namespace warpbox {

enum class MetricKind : std::uint8_t { Abs1D, L1, Linf };

inline const char* metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::Abs1D: return "abs1d";
    case MetricKind::L1: return "l1";
    case MetricKind::Linf: return "linf";
  }
  return "?";
}

struct Metric {
  MetricKind kind = MetricKind::Abs1D;
  int dim = 1;

  void validate() const {
    if (dim < 1) throw InputError("metric dimension must be >= 1");
    if (kind == MetricKind::Abs1D && dim != 1)
      throw InputError("abs1d metric requires dimension 1");
  }
};

// A sequence of points in R^d, stored flat. Indexing is 1-based to match the
// usual DP conventions; point(i) addresses the i-th element, i in [1, size()].
template <class S>
struct PointSeq {
  int dim = 1;
  std::vector<S> flat;
  std::string label;

  PointSeq() = default;
  PointSeq(int d, std::vector<S> values, std::string name = {})
      : dim(d), flat(std::move(values)), label(std::move(name)) {
    if (dim < 1) throw InputError("point dimension must be >= 1");
    if (flat.empty() || flat.size() % static_cast<std::size_t>(dim) != 0)
      throw InputError("sequence '" + label + "' is empty or ragged");
  }

  // Convenience for 1-D sequences.
  static PointSeq of(std::initializer_list<S> values, std::string name = {}) {
    return PointSeq(1, std::vector<S>(values), std::move(name));
  }

  int size() const { return static_cast<int>(flat.size()) / dim; }

  std::span<const S> point(int i) const {
    return {flat.data() + static_cast<std::size_t>(i - 1) * dim,
            static_cast<std::size_t>(dim)};
  }
};

template <class S>
S dist(const Metric& metric, std::span<const S> p, std::span<const S> q) {
  if (static_cast<int>(p.size()) != metric.dim || static_cast<int>(q.size()) != metric.dim)
    throw InputError("point dimension does not match metric dimension");
  switch (metric.kind) {
    case MetricKind::Abs1D:
      return abs_diff(p[0], q[0]);
    case MetricKind::L1: {
      S sum = abs_diff(p[0], q[0]);
      for (int k = 1; k < metric.dim; ++k) sum = S(sum + abs_diff(p[k], q[k]));
      return sum;
    }
    case MetricKind::Linf: {
      S best = abs_diff(p[0], q[0]);
      for (int k = 1; k < metric.dim; ++k) {
        S d = abs_diff(p[k], q[k]);
        if (best < d) best = d;
      }
      return best;
    }
  }
  throw InternalError("unknown metric kind");
}

template <class S>
S dist(const Metric& metric, const PointSeq<S>& a, int i, const PointSeq<S>& b, int j) {
  return dist(metric, a.point(i), b.point(j));
}

// Edge-weight rule of the alignment grid graph. Every edge enters some cell
// (l, m); DTW charges dist(p_l, q_m) on all three edge kinds, GED charges the
// gap penalty rho on horizontal/vertical edges and dist(p_l, q_m) on the
// diagonal edge.
template <class S>
struct GridCostModel {
  bool ged = false;
  S rho{};
  Metric metric;

  static GridCostModel dtw(Metric m) { return {false, S{}, m}; }
  static GridCostModel ged_model(Metric m, S gap) {
    if (gap < S{}) throw InputError("gap penalty rho must be >= 0");
    return {true, std::move(gap), m};
  }
};

using IndexPair = std::pair<int, int>;

// Warping path between two sequences: starts at (1,1), ends at (n,m), each
// step advances by (0,1), (1,0) or (1,1).
struct Coupling {
  std::vector<IndexPair> pairs;
};

// Order-preserving partial one-to-one matching; unmatched points pay rho.
struct MonotoneMatching {
  std::vector<IndexPair> pairs;
};

inline void validate_coupling(const Coupling& c, int n, int m) {
  const auto& ps = c.pairs;
  auto fail = [&](std::size_t idx) {
    throw InputError("invalid coupling at pair #" + std::to_string(idx + 1) + " (" +
                     std::to_string(ps[idx].first) + "," + std::to_string(ps[idx].second) + ")");
  };
  if (ps.empty() || ps.front() != IndexPair{1, 1}) fail(0);
  if (ps.back() != IndexPair{n, m}) fail(ps.size() - 1);
  for (std::size_t r = 1; r < ps.size(); ++r) {
    int di = ps[r].first - ps[r - 1].first;
    int dj = ps[r].second - ps[r - 1].second;
    bool step_ok = (di == 0 && dj == 1) || (di == 1 && dj == 0) || (di == 1 && dj == 1);
    if (!step_ok) fail(r);
  }
}

inline void validate_matching(const MonotoneMatching& m, int n, int len_b) {
  auto ps = m.pairs;
  std::sort(ps.begin(), ps.end());
  for (std::size_t r = 0; r < ps.size(); ++r) {
    auto [i, j] = ps[r];
    if (i < 1 || i > n || j < 1 || j > len_b)
      throw InputError("matching pair (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range");
    if (r > 0) {
      // Sorted by i: duplicates or non-increasing j break monotonicity.
      if (i == ps[r - 1].first || ps[r - 1].second >= j)
        throw InputError("matching is not strictly monotone at pair (" + std::to_string(i) +
                         "," + std::to_string(j) + ")");
    }
  }
}

template <class S>
S coupling_cost(const PointSeq<S>& a, const PointSeq<S>& b, const Coupling& c,
                const Metric& metric) {
  validate_coupling(c, a.size(), b.size());
  S total{};
  for (auto [i, j] : c.pairs) total = S(total + dist(metric, a, i, b, j));
  return total;
}

template <class S>
S matching_cost(const PointSeq<S>& a, const PointSeq<S>& b, const MonotoneMatching& m,
                const S& rho, const Metric& metric) {
  validate_matching(m, a.size(), b.size());
  S total{};
  for (auto [i, j] : m.pairs) total = S(total + dist(metric, a, i, b, j));
  long long gaps = a.size() + b.size() - 2 * static_cast<long long>(m.pairs.size());
  total = S(total + S(rho * scalar_from_int<S>(gaps)));
  return total;
}

// Work accounting reported by the CLI. One cell update per quadratic DP cell,
// one candidate evaluation per (u, w) cumulative-cost evaluation in the
// compact DP, one dominance pair per reported red-on-blue pair.
struct WorkCounters {
  std::uint64_t cell_updates = 0;
  std::uint64_t candidate_evaluations = 0;
  std::uint64_t dominance_pairs_reported = 0;

  WorkCounters& operator+=(const WorkCounters& o) {
    cell_updates += o.cell_updates;
    candidate_evaluations += o.candidate_evaluations;
    dominance_pairs_reported += o.dominance_pairs_reported;
    return *this;
  }
};

}  // namespace warpbox
