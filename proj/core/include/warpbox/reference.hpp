#pragma once

// Brute-force reference computations for tests and the self-test harness.
// Everything here enumerates exhaustively and stays independent of the DP
// implementations it is used to check. Only viable for tiny inputs.

#include <vector>

#include "warpbox/staircase.hpp"

namespace warpbox {

// Minimum over all couplings, by enumerating every monotone grid path from
// (1,1) to (n,m).
template <class S>
S brute_force_dtw(const PointSeq<S>& a, const PointSeq<S>& b, const Metric& metric) {
  const int n = a.size(), m = b.size();
  bool found = false;
  S best{};
  std::vector<IndexPair> stack;
  auto walk = [&](auto&& self, int i, int j, S cost) -> void {
    cost = S(cost + dist(metric, a, i, b, j));
    if (i == n && j == m) {
      if (!found || cost < best) {
        best = cost;
        found = true;
      }
      return;
    }
    if (i < n) self(self, i + 1, j, cost);
    if (j < m) self(self, i, j + 1, cost);
    if (i < n && j < m) self(self, i + 1, j + 1, cost);
  };
  walk(walk, 1, 1, S{});
  return best;
}

// Minimum over all monotone matchings, enumerated pair by pair.
template <class S>
S brute_force_ged(const PointSeq<S>& a, const PointSeq<S>& b, const S& rho,
                  const Metric& metric) {
  const int n = a.size(), m = b.size();
  bool found = false;
  S best{};
  // At state (i, j) everything before a_i and b_j is decided; `cost` holds
  // matched distances, `gaps` the number of skipped points so far.
  auto walk = [&](auto&& self, int i, int j, S cost, int gaps) -> void {
    if (i > n || j > m) {
      int total_gaps = gaps + (n - i + 1) + (m - j + 1);
      S full = S(cost + S(rho * scalar_from_int<S>(total_gaps)));
      if (!found || full < best) {
        best = full;
        found = true;
      }
      return;
    }
    self(self, i + 1, j, cost, gaps + 1);        // a_i unmatched
    for (int t = j; t <= m; ++t)                 // a_i matched with b_t
      self(self, i + 1, t + 1, S(cost + dist(metric, a, i, b, t)), gaps + (t - j));
  };
  walk(walk, 1, 1, S{}, 0);
  return best;
}

// All monotone grid paths from (1,1) to (n,m); callers cost them directly.
inline void enumerate_couplings(int n, int m, const std::function<void(const Coupling&)>& fn) {
  Coupling c;
  auto walk = [&](auto&& self, int i, int j) -> void {
    c.pairs.emplace_back(i, j);
    if (i == n && j == m) {
      fn(c);
    } else {
      if (i < n) self(self, i + 1, j);
      if (j < m) self(self, i, j + 1);
      if (i < n && j < m) self(self, i + 1, j + 1);
    }
    c.pairs.pop_back();
  };
  walk(walk, 1, 1);
}

// Exhaustive per-box shortest path for one admissible pair, scanning every
// enumerated staircase path with the refined (pad count, finite value)
// order and smallest-word tie-breaking.
template <class S>
PackedPath brute_force_box_shortest(const BoxGrid<S>& grid, const GridCostModel<S>& model,
                                    int i, int j, int l_idx, int r_idx) {
  bool found = false;
  PackedPath best;
  PathCost<S> best_cost;
  visit_paths(grid.g, [&](PackedPath p) {
    if (p.start_index() != l_idx) return;
    if (r_index_of(grid.g, p.end(grid.g)) != r_idx) return;
    PathCost<S> c = path_cost_refined(grid, model, i, j, p);
    if (!found || c < best_cost) {
      best = p;
      best_cost = c;
      found = true;
    }
  });
  if (!found) throw InputError("no staircase path between the given boundary positions");
  return best;
}

// Brute-force minimal pairs: scan every admissible (u, w) in range.
template <class S, class CostFn>
std::vector<std::pair<int, Extended<S>>> brute_force_minimal_pairs(
    const BoxGeometry& geom, int a_lo, int a_hi, int b_lo, int b_hi, const CostFn& cost_of,
    std::span<const Extended<S>> l_values) {
  std::vector<std::pair<int, Extended<S>>> out;  // (u, ccost) per w
  for (int w = b_lo; w <= b_hi; ++w) {
    int arg = 0;
    Extended<S> best = Extended<S>::infinity();
    for (int u = std::max(a_lo, geom.band_lo[w]); u <= std::min(a_hi, geom.band_hi[w]); ++u) {
      if (!geom.admissible(u, w)) continue;
      Extended<S> cc = !l_values[u - 1].is_finite()
                           ? Extended<S>::infinity()
                           : cost_of(u, w).extended() + l_values[u - 1];
      if (arg == 0 || cc < best) {
        arg = u;
        best = cc;
      }
    }
    out.emplace_back(arg, best);
  }
  return out;
}

}  // namespace warpbox
