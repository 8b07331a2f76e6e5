#pragma once

// Bichromatic dominating-pairs reporting: all (red, blue) pairs where the
// red point is coordinatewise >= the blue point (non-strict). Two engines
// with the same contract: a naive scan and the classical divide-and-conquer
// on the last coordinate. A strongly subquadratic engine could be slotted in
// behind the same interface.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "warpbox/core.hpp"

namespace warpbox {

template <class S>
struct ColoredPointSet {
  int dim = 0;
  std::vector<S> red_coords;   // flattened, one row per red point
  std::vector<S> blue_coords;  // flattened, one row per blue point
  std::vector<std::uint32_t> red_ids;
  std::vector<std::uint32_t> blue_ids;

  explicit ColoredPointSet(int d) : dim(d) {
    if (d < 1) throw InputError("dominance dimension must be >= 1");
  }

  void add_red(std::uint32_t id, std::span<const S> v) {
    if (static_cast<int>(v.size()) != dim) throw InputError("red point has wrong dimension");
    red_ids.push_back(id);
    red_coords.insert(red_coords.end(), v.begin(), v.end());
  }
  void add_blue(std::uint32_t id, std::span<const S> v) {
    if (static_cast<int>(v.size()) != dim) throw InputError("blue point has wrong dimension");
    blue_ids.push_back(id);
    blue_coords.insert(blue_coords.end(), v.begin(), v.end());
  }

  std::size_t reds() const { return red_ids.size(); }
  std::size_t blues() const { return blue_ids.size(); }
  std::span<const S> red(std::size_t idx) const {
    return {red_coords.data() + idx * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const S> blue(std::size_t idx) const {
    return {blue_coords.data() + idx * dim, static_cast<std::size_t>(dim)};
  }
};

using DominancePair = std::pair<std::uint32_t, std::uint32_t>;  // (red_id, blue_id)

template <class S>
std::vector<DominancePair> dominating_pairs_naive(const ColoredPointSet<S>& set,
                                                  WorkCounters* counters = nullptr) {
  std::vector<DominancePair> out;
  for (std::size_t r = 0; r < set.reds(); ++r) {
    auto rp = set.red(r);
    for (std::size_t b = 0; b < set.blues(); ++b) {
      auto bp = set.blue(b);
      bool dom = true;
      for (int k = 0; k < set.dim && dom; ++k) dom = !(rp[k] < bp[k]);
      if (dom) out.emplace_back(set.red_ids[r], set.blue_ids[b]);
    }
  }
  std::sort(out.begin(), out.end());
  if (counters) counters->dominance_pairs_reported += out.size();
  return out;
}

namespace detail {

template <class S>
struct DncPoint {
  const S* coords;
  std::uint32_t id;
};

// Recursion over the highest still-active coordinate. The median split puts
// equal values on the low side; a block where every active value is equal
// drops a dimension instead, so the same-dimension recursions always shrink.
template <class S>
void dnc_report(std::vector<DncPoint<S>> reds, std::vector<DncPoint<S>> blues, int dim,
                std::vector<DominancePair>& out) {
  if (reds.empty() || blues.empty()) return;
  if (dim == 1) {
    std::sort(reds.begin(), reds.end(),
              [](const DncPoint<S>& x, const DncPoint<S>& y) { return x.coords[0] < y.coords[0]; });
    std::sort(blues.begin(), blues.end(),
              [](const DncPoint<S>& x, const DncPoint<S>& y) { return x.coords[0] < y.coords[0]; });
    // Sweep reds in increasing order; every blue not above the red qualifies.
    std::size_t nb = 0;
    for (const auto& r : reds) {
      while (nb < blues.size() && !(r.coords[0] < blues[nb].coords[0])) ++nb;
      for (std::size_t t = 0; t < nb; ++t) out.emplace_back(r.id, blues[t].id);
    }
    return;
  }
  if (reds.size() + blues.size() <= 4) {
    for (const auto& r : reds)
      for (const auto& b : blues) {
        bool dom = true;
        for (int k = 0; k < dim && dom; ++k) dom = !(r.coords[k] < b.coords[k]);
        if (dom) out.emplace_back(r.id, b.id);
      }
    return;
  }
  const int c = dim - 1;
  std::vector<S> vals;
  vals.reserve(reds.size() + blues.size());
  for (const auto& p : reds) vals.push_back(p.coords[c]);
  for (const auto& p : blues) vals.push_back(p.coords[c]);
  auto mid = vals.begin() + vals.size() / 2;
  std::nth_element(vals.begin(), mid, vals.end());
  S split = *mid;
  auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  if (!(*mn < *mx)) {
    // All last coordinates equal: dominance on this coordinate is settled.
    dnc_report(std::move(reds), std::move(blues), dim - 1, out);
    return;
  }
  if (!(split < *mx)) {
    // Make sure the high side is nonempty even when the median is the max.
    split = *mn;
  }
  auto partition = [&](const std::vector<DncPoint<S>>& pts, std::vector<DncPoint<S>>& lo,
                       std::vector<DncPoint<S>>& hi) {
    for (const auto& p : pts) (p.coords[c] < split || p.coords[c] == split ? lo : hi).push_back(p);
  };
  std::vector<DncPoint<S>> r_lo, r_hi, b_lo, b_hi;
  partition(reds, r_lo, r_hi);
  partition(blues, b_lo, b_hi);
  dnc_report(r_lo, b_lo, dim, out);
  dnc_report(r_hi, b_hi, dim, out);
  // Red high vs blue low: the last coordinate already dominates.
  dnc_report(std::move(r_hi), std::move(b_lo), dim - 1, out);
}

}  // namespace detail

template <class S>
std::vector<DominancePair> dominating_pairs_dnc(const ColoredPointSet<S>& set,
                                                WorkCounters* counters = nullptr) {
  std::vector<detail::DncPoint<S>> reds(set.reds()), blues(set.blues());
  for (std::size_t r = 0; r < set.reds(); ++r) reds[r] = {set.red(r).data(), set.red_ids[r]};
  for (std::size_t b = 0; b < set.blues(); ++b) blues[b] = {set.blue(b).data(), set.blue_ids[b]};
  std::vector<DominancePair> out;
  detail::dnc_report(std::move(reds), std::move(blues), set.dim, out);
  std::sort(out.begin(), out.end());
  if (counters) counters->dominance_pairs_reported += out.size();
  return out;
}

}  // namespace warpbox
