#pragma once

// Box decomposition of the DP grid and the staircase-path machinery:
// single-word path encoding, path enumeration, admissible boundary pairs,
// path costs under a grid cost model, per-box sign assignments and the
// direct per-box shortest-path computation.
//
// Geometry conventions (all 1-based, rows grow bottom-to-top):
//   - a box is a g x g window; L is its left+bottom boundary, R its
//     right+top boundary; |L| = |R| = 2g-1 and they share (1,g) and (g,1).
//   - L(1) = (1,g) and indices run clockwise to L(2g-1) = (g,1);
//     R(1) = (1,g) runs counterclockwise to R(2g-1) = (g,1).
//   - box (i,j) covers global DP rows (i-1)(g-1) .. via local row l ->
//     global row (i-1)(g-1)+l-1, and likewise for columns. Global row 0 and
//     column 0 are the DP initialization lines; local cells beyond the real
//     sequence lengths are padding and price as infinity.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "warpbox/core.hpp"

namespace warpbox {

inline constexpr int kMinBoxSide = 2;
inline constexpr int kMaxBoxSide = 13;  // 2(g-1) moves + start index fit one 64-bit word

enum class Move : std::uint8_t { Up = 1, Right = 2, UpRight = 3 };

struct BoundaryPos {
  int row = 0;
  int col = 0;
  friend bool operator==(const BoundaryPos&, const BoundaryPos&) = default;
};

inline BoundaryPos l_position(int g, int k) {
  return k <= g ? BoundaryPos{1, g - k + 1} : BoundaryPos{k - g + 1, 1};
}
inline BoundaryPos r_position(int g, int k) {
  return k <= g ? BoundaryPos{k, g} : BoundaryPos{g, 2 * g - k};
}
inline int l_index_of(int g, BoundaryPos p) { return p.row == 1 ? g - p.col + 1 : p.row + g - 1; }
inline int r_index_of(int g, BoundaryPos p) { return p.col == g ? p.row : 2 * g - p.col; }
inline bool on_l_boundary(int g, BoundaryPos p) { return p.row == 1 || p.col == 1; }
inline bool on_r_boundary(int g, BoundaryPos p) { return p.row == g || p.col == g; }

// One staircase path packed into a 64-bit word. Layout, high to low:
//   bits 58..53  start index k on L (1..2g-1)
//   bits 52..5   24 two-bit move slots, earliest move in the highest slot
//                (0 = unused, 1 = Up, 2 = Right, 3 = UpRight)
//   bits  4..0   move count t* (1..2g-2)
// Numeric order on words equals the enumeration order: by start index, then
// lexicographically by moves with Up < Right < UpRight.
struct PackedPath {
  std::uint64_t word = 0;

  static constexpr int kMaxMoves = 24;

  static PackedPath make(int start_index, const std::vector<Move>& moves) {
    PackedPath p;
    p.word = static_cast<std::uint64_t>(start_index) << 53;
    for (std::size_t t = 0; t < moves.size(); ++t)
      p.word |= static_cast<std::uint64_t>(moves[t]) << (51 - 2 * t);
    p.word |= moves.size();
    return p;
  }

  int start_index() const { return static_cast<int>(word >> 53); }
  int move_count() const { return static_cast<int>(word & 0x1f); }
  Move move(int t) const { return static_cast<Move>((word >> (51 - 2 * t)) & 0x3); }

  std::vector<Move> moves() const {
    std::vector<Move> out(move_count());
    for (int t = 0; t < move_count(); ++t) out[t] = move(t);
    return out;
  }

  BoundaryPos start(int g) const { return l_position(g, start_index()); }
  BoundaryPos end(int g) const {
    BoundaryPos p = start(g);
    for (int t = 0; t < move_count(); ++t) p = advance(p, move(t));
    return p;
  }

  static BoundaryPos advance(BoundaryPos p, Move m) {
    switch (m) {
      case Move::Up: return {p.row + 1, p.col};
      case Move::Right: return {p.row, p.col + 1};
      case Move::UpRight: return {p.row + 1, p.col + 1};
    }
    return p;
  }

  friend bool operator==(const PackedPath&, const PackedPath&) = default;
  friend bool operator<(const PackedPath& a, const PackedPath& b) { return a.word < b.word; }
};

inline void check_box_side(int g) {
  if (g < kMinBoxSide || g > kMaxBoxSide)
    throw InputError("box side g must be in [" + std::to_string(kMinBoxSide) + ", " +
                     std::to_string(kMaxBoxSide) + "], got " + std::to_string(g));
}

// Visits every staircase path of a g x g box in enumeration order (strictly
// increasing packed words). Streaming: the full set is exponential in g, so
// callers that only need to scan must not materialize it.
template <class Fn>
void visit_paths(int g, Fn&& fn) {
  check_box_side(g);
  std::vector<Move> moves;
  moves.reserve(2 * g - 2);
  std::uint64_t word = 0;

  auto dfs = [&](auto&& self, BoundaryPos pos) -> void {
    for (int code = 1; code <= 3; ++code) {
      Move m = static_cast<Move>(code);
      BoundaryPos next = PackedPath::advance(pos, m);
      if (next.row > g || next.col > g) continue;
      moves.push_back(m);
      std::uint64_t w = word | (static_cast<std::uint64_t>(code) << (51 - 2 * (moves.size() - 1)));
      std::uint64_t saved = word;
      word = w;
      if (on_r_boundary(g, next)) {
        PackedPath p;
        p.word = w | moves.size();
        fn(p);
      }
      self(self, next);
      word = saved;
      moves.pop_back();
    }
  };

  for (int k = 1; k <= 2 * g - 1; ++k) {
    word = static_cast<std::uint64_t>(k) << 53;
    dfs(dfs, l_position(g, k));
  }
}

// Materialized enumeration; practical for small g only (the count grows
// roughly like the Delannoy numbers).
inline std::vector<PackedPath> enumerate_paths(int g) {
  std::vector<PackedPath> out;
  visit_paths(g, [&](PackedPath p) { out.push_back(p); });
  return out;
}

// Admissible (L,R) pairs and per-R admissible L bands for one box side.
// Pair order is the order in which each pair's first path occurs in the path
// enumeration: for a fixed start, the earliest path to any endpoint is all
// Up moves then all Right moves, so the induced order is computable without
// enumerating paths.
struct BoxGeometry {
  int g = 0;
  std::vector<std::pair<int, int>> pairs;  // (L index, R index), enumeration order
  std::vector<int> pair_index;             // (l-1)*(2g-1)+(r-1) -> index or -1
  std::vector<int> band_lo, band_hi;       // admissible L range per R index

  explicit BoxGeometry(int side) : g(side) {
    check_box_side(g);
    const int b = 2 * g - 1;
    pair_index.assign(static_cast<std::size_t>(b) * b, -1);
    band_lo.assign(b + 1, 0);
    band_hi.assign(b + 1, -1);
    for (int k = 1; k <= b; ++k) {
      BoundaryPos v = l_position(g, k);
      std::vector<std::pair<std::uint64_t, int>> firsts;
      for (int w = 1; w <= b; ++w) {
        BoundaryPos e = r_position(g, w);
        if (e.row < v.row || e.col < v.col || e == v) continue;
        std::vector<Move> mv(static_cast<std::size_t>(e.row - v.row), Move::Up);
        mv.insert(mv.end(), static_cast<std::size_t>(e.col - v.col), Move::Right);
        firsts.emplace_back(PackedPath::make(k, mv).word, w);
      }
      std::sort(firsts.begin(), firsts.end());
      for (auto& [word, w] : firsts) {
        pair_index[static_cast<std::size_t>(k - 1) * b + (w - 1)] =
            static_cast<int>(pairs.size());
        pairs.emplace_back(k, w);
        if (band_hi[w] < band_lo[w]) {
          band_lo[w] = k;
          band_hi[w] = k;
        } else {
          band_lo[w] = std::min(band_lo[w], k);
          band_hi[w] = std::max(band_hi[w], k);
        }
      }
    }
  }

  int count() const { return static_cast<int>(pairs.size()); }

  int index_of(int l, int r) const {
    return pair_index[static_cast<std::size_t>(l - 1) * (2 * g - 1) + (r - 1)];
  }
  bool admissible(int l, int r) const { return index_of(l, r) >= 0; }
};

// How a box row/column block maps onto the real sequence: `low` marks the
// initialization line (global index 0) at local index 1, `cut` is the first
// local index beyond the real elements (g+1 when the block is full).
struct PadProfile {
  bool low = false;
  int cut = 0;

  friend bool operator==(const PadProfile&, const PadProfile&) = default;
};

enum class CellKind : std::uint8_t { Real, InitLine, OutOfRange };

// The decomposition of a pair of sequences into overlapping g x g boxes.
template <class S>
struct BoxGrid {
  const PointSeq<S>* a = nullptr;
  const PointSeq<S>* b = nullptr;
  Metric metric;
  int g = 0;
  int rows = 0;  // box rows (groups of A)
  int cols = 0;  // box columns (groups of B)

  int global_row(int i, int l) const { return (i - 1) * (g - 1) + l - 1; }
  int global_col(int j, int m) const { return (j - 1) * (g - 1) + m - 1; }

  CellKind row_kind(int i, int l) const {
    int r = global_row(i, l);
    if (r == 0) return CellKind::InitLine;
    return r <= a->size() ? CellKind::Real : CellKind::OutOfRange;
  }
  CellKind col_kind(int j, int m) const {
    int c = global_col(j, m);
    if (c == 0) return CellKind::InitLine;
    return c <= b->size() ? CellKind::Real : CellKind::OutOfRange;
  }

  // Number of real elements covered by a block (including the shared one).
  int row_count(int i) const {
    int last = std::min(i * (g - 1), a->size());
    int first = i == 1 ? 1 : (i - 1) * (g - 1);
    return last - first + 1;
  }
  int col_count(int j) const {
    int last = std::min(j * (g - 1), b->size());
    int first = j == 1 ? 1 : (j - 1) * (g - 1);
    return last - first + 1;
  }

  PadProfile row_profile(int i) const {
    return {i == 1, std::min(g + 1, a->size() - (i - 1) * (g - 1) + 2)};
  }
  PadProfile col_profile(int j) const {
    return {j == 1, std::min(g + 1, b->size() - (j - 1) * (g - 1) + 2)};
  }

  std::span<const S> a_point(int i, int l) const { return a->point(global_row(i, l)); }
  std::span<const S> b_point(int j, int m) const { return b->point(global_col(j, m)); }

  // All-pairs distance value of box (i,j) at local (l,m); infinity on any
  // padded row or column.
  Extended<S> d_value(int i, int j, int l, int m) const {
    if (row_kind(i, l) != CellKind::Real || col_kind(j, m) != CellKind::Real)
      return Extended<S>::infinity();
    return Extended<S>(dist(metric, a_point(i, l), b_point(j, m)));
  }
};

template <class S>
BoxGrid<S> decompose(const PointSeq<S>& a, const PointSeq<S>& b, int g, Metric metric) {
  check_box_side(g);
  metric.validate();
  if (a.size() < 1 || b.size() < 1) throw InputError("sequences must be nonempty");
  if (a.dim != b.dim || a.dim != metric.dim)
    throw InputError("sequence dimensions do not match the metric");
  BoxGrid<S> grid;
  grid.a = &a;
  grid.b = &b;
  grid.metric = metric;
  grid.g = g;
  grid.rows = (a.size() + g - 2) / (g - 1);
  grid.cols = (b.size() + g - 2) / (g - 1);
  return grid;
}

// Path cost refined by padding: `pad` counts moves priced as infinity, `fin`
// sums the finite part. Ordered lexicographically, so any pad makes a path
// worse than every pad-free one; the refinement only breaks ties between
// infinite costs and never changes a finite DP value.
template <class S>
struct PathCost {
  int pad = 0;
  S fin{};

  bool infinite() const { return pad > 0; }

  PathCost operator+(const PathCost& o) const { return {pad + o.pad, S(fin + o.fin)}; }

  friend bool operator==(const PathCost& x, const PathCost& y) {
    return x.pad == y.pad && x.fin == y.fin;
  }
  friend bool operator<(const PathCost& x, const PathCost& y) {
    if (x.pad != y.pad) return x.pad < y.pad;
    return x.fin < y.fin;
  }

  Extended<S> extended() const {
    return infinite() ? Extended<S>::infinity() : Extended<S>(fin);
  }
};

namespace detail {

// Price of one move entering `dest`. DTW charges the all-pairs distance on
// every edge and forbids the initialization lines; GED charges rho on
// horizontal/vertical edges (the initialization lines are walkable) and the
// distance on diagonal edges. Cells beyond the real lengths are infinite in
// both models.
template <class S>
PathCost<S> move_price(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i, int j,
                       Move mv, BoundaryPos dest) {
  CellKind rk = grid.row_kind(i, dest.row);
  CellKind ck = grid.col_kind(j, dest.col);
  if (rk == CellKind::OutOfRange || ck == CellKind::OutOfRange) return {1, S{}};
  if (model.ged) {
    if (mv != Move::UpRight) return {0, model.rho};
    if (rk != CellKind::Real || ck != CellKind::Real)
      throw InternalError("diagonal move entering an initialization line");
    return {0, dist(grid.metric, grid.a_point(i, dest.row), grid.b_point(j, dest.col))};
  }
  if (rk != CellKind::Real || ck != CellKind::Real) return {1, S{}};
  return {0, dist(grid.metric, grid.a_point(i, dest.row), grid.b_point(j, dest.col))};
}

}  // namespace detail

template <class S>
PathCost<S> path_cost_refined(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i,
                              int j, PackedPath path) {
  PathCost<S> total;
  BoundaryPos pos = path.start(grid.g);
  for (int t = 0; t < path.move_count(); ++t) {
    Move mv = path.move(t);
    pos = PackedPath::advance(pos, mv);
    total = total + detail::move_price(grid, model, i, j, mv, pos);
  }
  return total;
}

// Cost of a staircase path, start position excluded. Infinity whenever the
// path crosses padding.
template <class S>
Extended<S> path_cost(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i, int j,
                      PackedPath path) {
  return path_cost_refined(grid, model, i, j, path).extended();
}

// Bitmask over move slots of `path` whose destination cell is priced as
// infinity in box (i,j); these positions are excluded from the value-table
// sums of that box.
template <class S>
std::uint32_t pad_mask(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i, int j,
                       PackedPath path) {
  std::uint32_t mask = 0;
  BoundaryPos pos = path.start(grid.g);
  for (int t = 0; t < path.move_count(); ++t) {
    Move mv = path.move(t);
    pos = PackedPath::advance(pos, mv);
    if (detail::move_price(grid, model, i, j, mv, pos).infinite())
      mask |= (1u << t);
  }
  return mask;
}

// Sign assignment of one box: per cell, the sign data that turns the metric
// distance into a linear expression in the coordinates.
//   Abs1D:  code 0 -> +1, code 1 -> -1
//   L1:     bit k set -> coordinate k takes sign -1
//   Linf:   code = 2*k + (1 if sign is -1), k the maximizing coordinate
// Ties resolve to +1 (and to the smallest maximizing coordinate), matching
// the lexicographically smallest assignment a validating guess can use.
struct SignAssignment {
  MetricKind kind = MetricKind::Abs1D;
  int dim = 1;
  int g = 0;
  std::vector<std::uint8_t> codes;

  std::uint8_t code(int l, int m) const {
    return codes[static_cast<std::size_t>(l - 1) * g + (m - 1)];
  }
  std::uint8_t& code(int l, int m) {
    return codes[static_cast<std::size_t>(l - 1) * g + (m - 1)];
  }

  std::uint64_t canonical_hash() const {
    std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(kind) ^
                      (static_cast<std::uint64_t>(dim) << 8);
    for (std::uint8_t c : codes) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  friend bool operator==(const SignAssignment&, const SignAssignment&) = default;
};

namespace detail {

// Signed one-sided contribution of a cell under a sign code: the A-side gets
// +term(a), the B-side +term(b), and term(a) - term(b) equals the signed
// distance when the code is correct for the cell.
template <class S>
S signed_side_term(MetricKind kind, std::uint8_t code, std::span<const S> p) {
  switch (kind) {
    case MetricKind::Abs1D:
      return code ? S(S{} - p[0]) : p[0];
    case MetricKind::L1: {
      S sum{};
      for (std::size_t k = 0; k < p.size(); ++k)
        sum = S(sum + ((code >> k) & 1 ? S(S{} - p[k]) : p[k]));
      return sum;
    }
    case MetricKind::Linf: {
      std::size_t k = code >> 1;
      return (code & 1) ? S(S{} - p[k]) : p[k];
    }
  }
  throw InternalError("unknown metric kind");
}

template <class S>
std::uint8_t canonical_cell_code(const Metric& metric, std::span<const S> pa,
                                 std::span<const S> pb) {
  switch (metric.kind) {
    case MetricKind::Abs1D:
      return pa[0] < pb[0] ? 1 : 0;
    case MetricKind::L1: {
      std::uint8_t code = 0;
      for (int k = 0; k < metric.dim; ++k)
        if (pa[k] < pb[k]) code |= static_cast<std::uint8_t>(1u << k);
      return code;
    }
    case MetricKind::Linf: {
      int best = 0;
      S mag = abs_diff(pa[0], pb[0]);
      for (int k = 1; k < metric.dim; ++k) {
        S d = abs_diff(pa[k], pb[k]);
        if (mag < d) {
          mag = d;
          best = k;
        }
      }
      return static_cast<std::uint8_t>(2 * best + (pa[best] < pb[best] ? 1 : 0));
    }
  }
  throw InternalError("unknown metric kind");
}

}  // namespace detail

// The correct sign assignment of box (i,j); padded cells get code 0.
template <class S>
SignAssignment sign_assignment(const BoxGrid<S>& grid, int i, int j) {
  SignAssignment sa;
  sa.kind = grid.metric.kind;
  sa.dim = grid.metric.dim;
  sa.g = grid.g;
  sa.codes.assign(static_cast<std::size_t>(grid.g) * grid.g, 0);
  for (int l = 1; l <= grid.g; ++l) {
    if (grid.row_kind(i, l) != CellKind::Real) continue;
    for (int m = 1; m <= grid.g; ++m) {
      if (grid.col_kind(j, m) != CellKind::Real) continue;
      sa.code(l, m) =
          detail::canonical_cell_code(grid.metric, grid.a_point(i, l), grid.b_point(j, m));
    }
  }
  return sa;
}

// A box's preprocessing record: one shortest path per admissible (L,R) pair,
// stored as packed words in pair-enumeration order, plus the box's sign
// assignment. For g <= 13 the whole record is O(g^3) bits.
struct BoxSignature {
  SignAssignment sigma;
  std::vector<std::uint64_t> paths;

  friend bool operator==(const BoxSignature&, const BoxSignature&) = default;
};

// Direct per-box shortest paths: a backward DP from every R position gives
// the best remaining cost at each cell, and a greedy forward walk in move
// order reconstructs the smallest-encoding optimum. Cost ties thus resolve
// to the smallest packed word.
template <class S>
BoxSignature shortest_paths_direct(const BoxGrid<S>& grid, const BoxGeometry& geom, int i,
                                   int j, const GridCostModel<S>& model) {
  const int g = grid.g;
  BoxSignature sig;
  sig.sigma = sign_assignment(grid, i, j);
  sig.paths.assign(geom.pairs.size(), 0);

  std::vector<PathCost<S>> to_w(static_cast<std::size_t>(g) * g);
  auto best = [&](int l, int m) -> PathCost<S>& {
    return to_w[static_cast<std::size_t>(l - 1) * g + (m - 1)];
  };

  for (int w = 1; w <= 2 * g - 1; ++w) {
    BoundaryPos e = r_position(g, w);
    // Remaining cost from each cell <= e to e (current cell excluded).
    for (int l = e.row; l >= 1; --l) {
      for (int m = e.col; m >= 1; --m) {
        if (l == e.row && m == e.col) {
          best(l, m) = {};
          continue;
        }
        bool found = false;
        PathCost<S> bv;
        for (int code = 1; code <= 3; ++code) {
          Move mv = static_cast<Move>(code);
          BoundaryPos dest = PackedPath::advance({l, m}, mv);
          if (dest.row > e.row || dest.col > e.col) continue;
          PathCost<S> cand =
              detail::move_price(grid, model, i, j, mv, dest) + best(dest.row, dest.col);
          if (!found || cand < bv) {
            bv = cand;
            found = true;
          }
        }
        if (!found) throw InternalError("unreachable cell in box shortest-path DP");
        best(l, m) = bv;
      }
    }
    for (int u = geom.band_lo[w]; u <= geom.band_hi[w]; ++u) {
      int idx = geom.index_of(u, w);
      if (idx < 0) continue;
      BoundaryPos pos = l_position(g, u);
      PathCost<S> remaining = best(pos.row, pos.col);
      std::vector<Move> moves;
      while (!(pos == e)) {
        bool stepped = false;
        for (int code = 1; code <= 3 && !stepped; ++code) {
          Move mv = static_cast<Move>(code);
          BoundaryPos dest = PackedPath::advance(pos, mv);
          if (dest.row > e.row || dest.col > e.col) continue;
          PathCost<S> via =
              detail::move_price(grid, model, i, j, mv, dest) + best(dest.row, dest.col);
          if (via == remaining) {
            moves.push_back(mv);
            remaining = best(dest.row, dest.col);
            pos = dest;
            stepped = true;
          }
        }
        if (!stepped) throw InternalError("box shortest-path reconstruction got stuck");
      }
      sig.paths[idx] = PackedPath::make(u, moves).word;
    }
  }
  return sig;
}

}  // namespace warpbox
