#pragma once

// Second stage of the boxed algorithm: propagate DP values from each box's
// L-boundary to its R-boundary using the preprocessed shortest paths, with
// the minimal pair per R position found by divide and conquer over the
// non-crossing (Monge) structure. Gives DTW/GED end to end with optional
// traceback.

#include <atomic>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "warpbox/oracle.hpp"
#include "warpbox/preprocess.hpp"

namespace warpbox {

// DP values along one box boundary in L/R index order (2g-1 entries), plus
// the chosen source and path per computed R entry when traceback is on.
template <class S>
struct BoundaryValues {
  std::vector<Extended<S>> values;
  std::vector<std::uint16_t> src;       // L index per computed R position, 0 = none
  std::vector<std::uint64_t> src_path;  // packed path per computed R position

  explicit BoundaryValues(int boundary_len = 0, bool with_provenance = false)
      : values(boundary_len, Extended<S>::infinity()) {
    if (with_provenance) {
      src.assign(boundary_len, 0);
      src_path.assign(boundary_len, 0);
    }
  }
};

// Cumulative-cost minimum for one R position: value M[u] + cost of the
// stored shortest path from u to w.
template <class S>
struct MinimalPair {
  int w = 0;
  int u = 0;  // 0 when no admissible candidate existed in range
  Extended<S> ccost = Extended<S>::infinity();
};

namespace detail {

// Divide and conquer over a contiguous R range: solve the median R position
// by a naive scan of its admissible L band, split the L range at the chosen
// source, recurse on both sides (the split point stays in both ranges).
// Ties go to the smallest L index, so the chosen source is the leftmost
// minimizer and source indices are nondecreasing along R.
template <class S, class CostFn>
void minimal_pairs_rec(const BoxGeometry& geom, int alo, int ahi, int blo, int bhi,
                       const CostFn& cost_of, std::span<const Extended<S>> l_values,
                       std::vector<MinimalPair<S>>& out, std::uint64_t& evals) {
  if (blo > bhi) return;
  int w = (blo + bhi) / 2;
  int lo = std::max(alo, geom.band_lo[w]);
  int hi = std::min(ahi, geom.band_hi[w]);
  MinimalPair<S> best;
  best.w = w;
  for (int u = lo; u <= hi; ++u) {
    if (!geom.admissible(u, w)) continue;
    ++evals;
    Extended<S> cc = !l_values[u - 1].is_finite()
                         ? Extended<S>::infinity()
                         : cost_of(u, w).extended() + l_values[u - 1];
    if (best.u == 0 || cc < best.ccost) {
      best.u = u;
      best.ccost = cc;
    }
  }
  out.push_back(best);
  if (best.u == 0 || best.ccost == Extended<S>::infinity()) {
    // Nothing finite to pivot on; keep the full range for both halves.
    minimal_pairs_rec(geom, alo, ahi, blo, w - 1, cost_of, l_values, out, evals);
    minimal_pairs_rec(geom, alo, ahi, w + 1, bhi, cost_of, l_values, out, evals);
    return;
  }
  minimal_pairs_rec(geom, alo, best.u, blo, w - 1, cost_of, l_values, out, evals);
  minimal_pairs_rec(geom, best.u, ahi, w + 1, bhi, cost_of, l_values, out, evals);
}

}  // namespace detail

// Minimal pairs for every R position in [b_lo, b_hi], sources restricted to
// [a_lo, a_hi]. `cost_of(u, w)` must return the refined cost of the stored
// shortest path for an admissible pair.
template <class S, class CostFn>
std::vector<MinimalPair<S>> minimal_pairs_dc(const BoxGeometry& geom, int a_lo, int a_hi,
                                             int b_lo, int b_hi, const CostFn& cost_of,
                                             std::span<const Extended<S>> l_values,
                                             std::uint64_t* eval_count = nullptr) {
  std::vector<MinimalPair<S>> out;
  std::uint64_t evals = 0;
  detail::minimal_pairs_rec(geom, a_lo, a_hi, b_lo, b_hi, cost_of, l_values, out, evals);
  if (eval_count) *eval_count += evals;
  std::sort(out.begin(), out.end(),
            [](const MinimalPair<S>& x, const MinimalPair<S>& y) { return x.w < y.w; });
  return out;
}

namespace detail {

// Checks the operative content of the non-crossing lemma on the selected
// pairs of one box: source indices nondecreasing in w, and for w' > w the
// selected path of w' never strictly below the selected path of w at a
// shared column. (Literal per-column comparison would misfire on benign
// overlaps, e.g. nested vertical runs.)
template <class S>
bool monge_check_box(int g, const std::vector<MinimalPair<S>>& pairs,
                     const std::vector<std::uint64_t>& words) {
  struct Span {
    int lo_row[32], hi_row[32];
    int col_lo = 0, col_hi = -1;
  };
  std::vector<Span> spans(pairs.size());
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    if (pairs[t].u == 0 || pairs[t].ccost == Extended<S>::infinity()) continue;
    PackedPath p{words[t]};
    BoundaryPos pos = p.start(g);
    Span& sp = spans[t];
    sp.col_lo = sp.col_hi = pos.col;
    sp.lo_row[0] = sp.hi_row[0] = pos.row;
    for (int mv = 0; mv < p.move_count(); ++mv) {
      pos = PackedPath::advance(pos, p.move(mv));
      if (pos.col > sp.col_hi) {
        sp.col_hi = pos.col;
        sp.lo_row[sp.col_hi - sp.col_lo] = sp.hi_row[sp.col_hi - sp.col_lo] = pos.row;
      } else {
        sp.hi_row[pos.col - sp.col_lo] = pos.row;
      }
    }
  }
  for (std::size_t t1 = 0; t1 < pairs.size(); ++t1) {
    if (spans[t1].col_hi < spans[t1].col_lo) continue;
    for (std::size_t t2 = t1 + 1; t2 < pairs.size(); ++t2) {
      if (spans[t2].col_hi < spans[t2].col_lo) continue;
      // pairs are sorted by w, so pairs[t2].w > pairs[t1].w.
      if (pairs[t2].u < pairs[t1].u) return false;
      const Span& lo = spans[t1];  // smaller w: must never be strictly above
      const Span& hi = spans[t2];
      int clo = std::max(lo.col_lo, hi.col_lo);
      int chi = std::min(lo.col_hi, hi.col_hi);
      for (int c = clo; c <= chi; ++c)
        if (hi.hi_row[c - hi.col_lo] < lo.lo_row[c - lo.col_lo]) return false;
    }
  }
  return true;
}

}  // namespace detail

enum class PreprocessMode { Direct, Faithful };

template <class S>
struct CompactDpOptions {
  PreprocessMode mode = PreprocessMode::Direct;
  FaithfulOptions faithful;
  bool traceback = false;
  int threads = 1;
  bool check_monge = false;
  WorkCounters* counters = nullptr;
  std::uint64_t* monge_violations = nullptr;   // incremented per failing box
  std::uint64_t* max_box_evals = nullptr;      // max candidate evaluations per box
  const Preprocessed<S>* preprocessed = nullptr;  // reuse a cached preprocessing
};

namespace detail {

template <class S>
struct BoxDpLocal {
  std::vector<Extended<S>> val;
  std::vector<Step> step;
  int g = 0;

  Extended<S>& at(int l, int m) { return val[static_cast<std::size_t>(l - 1) * g + (m - 1)]; }
  Step& st(int l, int m) { return step[static_cast<std::size_t>(l - 1) * g + (m - 1)]; }
};

// Plain DP over one box from given L values; used to read the final cell
// (which sits strictly inside the last box when the blocks are short) and to
// trace inside that box.
template <class S>
BoxDpLocal<S> in_box_dp(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i, int j,
                        std::span<const Extended<S>> l_values, WorkCounters* counters) {
  const int g = grid.g;
  BoxDpLocal<S> dp;
  dp.g = g;
  dp.val.assign(static_cast<std::size_t>(g) * g, Extended<S>::infinity());
  dp.step.assign(dp.val.size(), Step::None);
  for (int k = 1; k <= 2 * g - 1; ++k) {
    BoundaryPos p = l_position(g, k);
    dp.at(p.row, p.col) = l_values[k - 1];
  }
  std::uint64_t updates = 0;
  for (int l = 2; l <= g; ++l) {
    for (int m = 2; m <= g; ++m) {
      Extended<S> diag =
          dp.at(l - 1, m - 1) + move_price(grid, model, i, j, Move::UpRight, {l, m}).extended();
      Extended<S> left =
          dp.at(l, m - 1) + move_price(grid, model, i, j, Move::Right, {l, m}).extended();
      Extended<S> down =
          dp.at(l - 1, m) + move_price(grid, model, i, j, Move::Up, {l, m}).extended();
      Extended<S> best;
      Step chosen;
      relax(diag, left, down, best, chosen);
      dp.at(l, m) = best;
      dp.st(l, m) = chosen;
      ++updates;
    }
  }
  if (counters) counters->cell_updates += updates;
  return dp;
}

}  // namespace detail

// Propagates one box: assembles nothing itself, just turns L values into R
// values through the preprocessed shortest paths. R(1) and R(2g-1) coincide
// with L(1)/L(2g-1) and are copied; R positions on padding stay infinite.
template <class S>
BoundaryValues<S> box_propagate(const BoxGrid<S>& grid, const BoxGeometry& geom,
                                const Preprocessed<S>& pre, int i, int j,
                                const BoundaryValues<S>& l_vals, const GridCostModel<S>& model,
                                const CompactDpOptions<S>& opts) {
  const int g = grid.g;
  const int blen = 2 * g - 1;
  if (pre.box_sig.size() != static_cast<std::size_t>(grid.rows) * grid.cols)
    throw InternalError("preprocessing does not cover this grid");
  const BoxSignature& sig = pre.signature(grid, i, j);
  if (sig.paths.size() != geom.pairs.size())
    throw InternalError("signature does not match the box geometry");
  std::uint32_t sigma_id = pre.box_sigma[pre.box_index(grid, i, j)];

  bool provenance = opts.traceback;
  BoundaryValues<S> r_vals(blen, provenance);
  r_vals.values[0] = l_vals.values[0];
  r_vals.values[blen - 1] = l_vals.values[blen - 1];

  // Contiguous range of computed R positions lying on real cells.
  int rlo = blen, rhi = 0;
  for (int w = 2; w <= blen - 1; ++w) {
    BoundaryPos pos = r_position(g, w);
    if (grid.row_kind(i, pos.row) == CellKind::Real &&
        grid.col_kind(j, pos.col) == CellKind::Real) {
      rlo = std::min(rlo, w);
      rhi = std::max(rhi, w);
    }
  }
  if (rlo > rhi) return r_vals;

  // Per-pair refined costs, fetched through the value tables once.
  std::vector<PathCost<S>> memo(sig.paths.size());
  std::vector<char> have(sig.paths.size(), 0);
  auto cost_of = [&](int u, int w) -> const PathCost<S>& {
    int idx = geom.index_of(u, w);
    if (!have[idx]) {
      memo[idx] = pre.tables->pair_cost(sigma_id, i, j, PackedPath{sig.paths[idx]});
      have[idx] = 1;
    }
    return memo[idx];
  };

  std::uint64_t evals = 0;
  auto pairs = minimal_pairs_dc(geom, 1, blen, rlo, rhi, cost_of,
                                std::span<const Extended<S>>(l_vals.values), &evals);
  if (opts.counters) opts.counters->candidate_evaluations += evals;
  if (opts.max_box_evals) {
    std::uint64_t cur = *opts.max_box_evals;
    if (evals > cur) *opts.max_box_evals = evals;
  }

  std::vector<std::uint64_t> chosen_words(pairs.size(), 0);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto& p = pairs[t];
    r_vals.values[p.w - 1] = p.ccost;
    if (p.u != 0 && !(p.ccost == Extended<S>::infinity()))
      chosen_words[t] = sig.paths[geom.index_of(p.u, p.w)];
    if (provenance && p.u != 0) {
      r_vals.src[p.w - 1] = static_cast<std::uint16_t>(p.u);
      r_vals.src_path[p.w - 1] = chosen_words[t];
    }
  }
  if (opts.check_monge) {
    if (!detail::monge_check_box(g, pairs, chosen_words)) {
      if (opts.monge_violations) {
        ++*opts.monge_violations;
      } else {
        throw InternalError("non-crossing (Monge) violation in box (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
      }
    }
  }
  return r_vals;
}

namespace detail {

// Stitched L assembly. Bottom boundary comes from the row below (or the
// initialization line), left boundary from the box on the left (or the
// initialization column).
template <class S>
BoundaryValues<S> assemble_l(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i, int j,
                             const BoundaryValues<S>* below, const BoundaryValues<S>* left,
                             bool provenance) {
  const int g = grid.g;
  const int blen = 2 * g - 1;
  BoundaryValues<S> l(blen, provenance);
  auto init_value = [&](int r, int c) -> Extended<S> {
    if (r > grid.a->size() || c > grid.b->size()) return Extended<S>::infinity();
    if (model.ged)
      return Extended<S>(S(model.rho * scalar_from_int<S>(r + c)));  // one of r, c is 0
    return (r == 0 && c == 0) ? Extended<S>(S{}) : Extended<S>::infinity();
  };
  for (int k = 1; k <= g; ++k) {
    BoundaryPos pos = l_position(g, k);
    if (i == 1) {
      l.values[k - 1] = init_value(0, grid.global_col(j, pos.col));
    } else {
      l.values[k - 1] = below->values[g + k - 2];
    }
  }
  for (int k = g; k <= blen; ++k) {
    BoundaryPos pos = l_position(g, k);
    Extended<S> v;
    if (j == 1) {
      v = init_value(grid.global_row(i, pos.row), 0);
    } else {
      v = left->values[k - g];
    }
    if (k == g && i != 1 && j != 1 && !(l.values[k - 1] == v))
      throw InternalError("boundary stitching mismatch at shared corner");
    l.values[k - 1] = v;
  }
  return l;
}

}  // namespace detail

template <class S>
struct CompactDpOutcome {
  S value{};
  Coupling coupling;
  MonotoneMatching matching;
  Preprocessed<S> preprocessed;  // owned copy of what was used (shared tables)
};

namespace detail {

template <class S>
struct TraceFrame {
  int row, col;
  Step entered;  // move used to enter this cell
};

// Full run of the compact DP over the grid. Returns the final value and, if
// requested, the optimal global path reconstructed from per-box provenance.
template <class S>
CompactDpOutcome<S> run_compact_dp(const PointSeq<S>& a, const PointSeq<S>& b, int g,
                                   const GridCostModel<S>& model,
                                   const CompactDpOptions<S>& opts) {
  BoxGrid<S> grid = decompose(a, b, g, model.metric);
  BoxGeometry geom(g);

  CompactDpOutcome<S> out;
  if (opts.preprocessed) {
    out.preprocessed = *opts.preprocessed;
  } else if (opts.mode == PreprocessMode::Faithful) {
    out.preprocessed = preprocess_faithful(grid, geom, model, opts.faithful, opts.counters);
  } else {
    out.preprocessed = preprocess_direct(grid, geom, model);
  }
  const Preprocessed<S>& pre = out.preprocessed;
  const bool full_storage = opts.traceback || opts.threads > 1;

  std::vector<BoundaryValues<S>> all_r;  // full mode: R per box
  std::vector<BoundaryValues<S>> prev_row, cur_row;
  if (full_storage) {
    all_r.assign(static_cast<std::size_t>(grid.rows) * grid.cols, BoundaryValues<S>());
  } else {
    prev_row.assign(grid.cols, BoundaryValues<S>());
    cur_row.assign(grid.cols, BoundaryValues<S>());
  }

  BoundaryValues<S> final_l;

  auto r_of = [&](int i, int j) -> const BoundaryValues<S>* {
    if (i < 1 || j < 1) return nullptr;
    return &all_r[static_cast<std::size_t>(i - 1) * grid.cols + (j - 1)];
  };

  if (!full_storage) {
    for (int i = 1; i <= grid.rows; ++i) {
      const BoundaryValues<S>* left = nullptr;
      BoundaryValues<S> left_store;
      for (int j = 1; j <= grid.cols; ++j) {
        BoundaryValues<S> l = detail::assemble_l(grid, model, i, j,
                                                 i > 1 ? &prev_row[j - 1] : nullptr, left,
                                                 false);
        if (i == grid.rows && j == grid.cols) final_l = l;
        left_store = box_propagate(grid, geom, pre, i, j, l, model, opts);
        cur_row[j - 1] = left_store;
        left = &cur_row[j - 1];
      }
      std::swap(prev_row, cur_row);
    }
  } else {
    // Anti-diagonal wavefront; boxes on one diagonal are independent.
    int threads = std::max(1, opts.threads);
    std::vector<WorkCounters> tls(static_cast<std::size_t>(threads));
    std::atomic<std::uint64_t> max_evals{opts.max_box_evals ? *opts.max_box_evals : 0};
    std::atomic<std::uint64_t> violations{0};
    for (int d = 2; d <= grid.rows + grid.cols; ++d) {
      int i_lo = std::max(1, d - grid.cols);
      int i_hi = std::min(grid.rows, d - 1);
      if (i_lo > i_hi) continue;
      auto work = [&](int i_first, int i_last, WorkCounters* wc) {
        for (int i = i_first; i <= i_last; ++i) {
          int j = d - i;
          CompactDpOptions<S> local = opts;
          local.counters = wc;
          std::uint64_t box_evals = 0;
          std::uint64_t local_viol = 0;
          local.max_box_evals = &box_evals;
          local.monge_violations = opts.check_monge ? &local_viol : nullptr;
          BoundaryValues<S> l = detail::assemble_l(grid, model, i, j, r_of(i - 1, j),
                                                   j > 1 ? r_of(i, j - 1) : nullptr,
                                                   opts.traceback);
          if (i == grid.rows && j == grid.cols) final_l = l;
          all_r[static_cast<std::size_t>(i - 1) * grid.cols + (j - 1)] =
              box_propagate(grid, geom, pre, i, j, l, model, local);
          std::uint64_t seen = max_evals.load(std::memory_order_relaxed);
          while (box_evals > seen &&
                 !max_evals.compare_exchange_weak(seen, box_evals, std::memory_order_relaxed)) {
          }
          violations.fetch_add(local_viol, std::memory_order_relaxed);
        }
      };
      int count = i_hi - i_lo + 1;
      int use = std::min(threads, count);
      if (use <= 1) {
        work(i_lo, i_hi, &tls[0]);
      } else {
        std::vector<std::future<void>> futs;
        int chunk = (count + use - 1) / use;
        for (int t = 0; t < use; ++t) {
          int first = i_lo + t * chunk;
          int last = std::min(i_hi, first + chunk - 1);
          if (first > last) break;
          futs.push_back(std::async(std::launch::async, work, first, last, &tls[t]));
        }
        for (auto& f : futs) f.get();
      }
    }
    for (auto& wc : tls)
      if (opts.counters) *opts.counters += wc;
    if (opts.max_box_evals) *opts.max_box_evals = max_evals.load();
    if (opts.check_monge && violations.load() > 0) {
      if (opts.monge_violations)
        *opts.monge_violations += violations.load();
      else
        throw InternalError("non-crossing (Monge) violation");
    }
  }

  // The answer cell can sit strictly inside the last box when the final
  // blocks are short; a plain DP over that one box reads it out either way.
  detail::BoxDpLocal<S> final_dp =
      detail::in_box_dp(grid, model, grid.rows, grid.cols,
                        std::span<const Extended<S>>(final_l.values), opts.counters);
  int lr = a.size() - (grid.rows - 1) * (g - 1) + 1;
  int lc = b.size() - (grid.cols - 1) * (g - 1) + 1;
  out.value = final_dp.at(lr, lc).finite();

  if (!opts.traceback) return out;

  // Reconstruct the optimal grid path backwards: inside the final box via
  // its DP steps, then box to box through the stored minimal pairs.
  std::vector<detail::TraceFrame<S>> frames;
  auto emit = [&](int r, int c, Step entered) { frames.push_back({r, c, entered}); };

  int bi = grid.rows, bj = grid.cols;
  int cl = lr, cm = lc;
  while (!(cl == 1 || cm == 1)) {
    Step s = final_dp.st(cl, cm);
    emit(grid.global_row(bi, cl), grid.global_col(bj, cm), s);
    switch (s) {
      case Step::Diag: --cl; --cm; break;
      case Step::Left: --cm; break;
      case Step::Down: --cl; break;
      case Step::None: throw InternalError("traceback: missing step in final box");
    }
  }
  int k = l_index_of(g, {cl, cm});

  while (true) {
    // Map the L position of box (bi, bj) to the neighbor that computed it.
    int ni, nj, nw;
    if (k <= g - 1) {
      if (bi == 1) break;  // initialization row
      ni = bi - 1; nj = bj; nw = g + k - 1;
    } else if (k == g) {
      if (bi == 1 || bj == 1) break;  // origin or an initialization line
      ni = bi - 1; nj = bj - 1; nw = g;
    } else {
      if (bj == 1) break;  // initialization column
      ni = bi; nj = bj - 1; nw = k - g + 1;
    }
    const BoundaryValues<S>& rv = all_r[static_cast<std::size_t>(ni - 1) * grid.cols + (nj - 1)];
    if (rv.src.empty() || rv.src[nw - 1] == 0)
      throw InternalError("traceback: no provenance at box boundary");
    PackedPath path{rv.src_path[nw - 1]};
    // Emit path cells end-to-start (start excluded; it becomes the next hop).
    std::vector<BoundaryPos> cells(static_cast<std::size_t>(path.move_count() + 1));
    std::vector<Move> moves = path.moves();
    cells[0] = path.start(g);
    for (int t = 0; t < path.move_count(); ++t)
      cells[static_cast<std::size_t>(t) + 1] = PackedPath::advance(cells[t], moves[t]);
    for (int t = path.move_count(); t >= 1; --t) {
      Step s = moves[t - 1] == Move::UpRight ? Step::Diag
               : moves[t - 1] == Move::Right ? Step::Left
                                             : Step::Down;
      emit(grid.global_row(ni, cells[t].row), grid.global_col(nj, cells[t].col), s);
    }
    bi = ni;
    bj = nj;
    k = static_cast<int>(rv.src[nw - 1]);
  }

  if (!model.ged) {
    // A finite DTW path can only leave through the origin.
    BoundaryPos last = l_position(g, k);
    if (grid.global_row(bi, last.row) != 0 || grid.global_col(bj, last.col) != 0)
      throw InternalError("DTW traceback did not reach the origin");
  }

  std::reverse(frames.begin(), frames.end());
  for (const auto& f : frames) {
    if (!model.ged) {
      out.coupling.pairs.emplace_back(f.row, f.col);
    } else if (f.entered == Step::Diag) {
      out.matching.pairs.emplace_back(f.row, f.col);
    }
  }
  return out;
}

}  // namespace detail

// Full compact-DP run; exposed so callers can keep the preprocessing (for
// the binary cache) alongside the distance.
template <class S>
CompactDpOutcome<S> run_compact_dp(const PointSeq<S>& a, const PointSeq<S>& b, int g,
                                   const GridCostModel<S>& model,
                                   const CompactDpOptions<S>& opts = {}) {
  return detail::run_compact_dp(a, b, g, model, opts);
}

template <class S>
DtwResult<S> dtw_subquadratic(const PointSeq<S>& a, const PointSeq<S>& b, int g, Metric metric,
                              const CompactDpOptions<S>& opts = {}) {
  auto outcome = detail::run_compact_dp(a, b, g, GridCostModel<S>::dtw(metric), opts);
  return {outcome.value, std::move(outcome.coupling)};
}

template <class S>
GedResult<S> ged_subquadratic(const PointSeq<S>& a, const PointSeq<S>& b, const S& rho, int g,
                              Metric metric, const CompactDpOptions<S>& opts = {}) {
  auto outcome = detail::run_compact_dp(a, b, g, GridCostModel<S>::ged_model(metric, rho), opts);
  return {outcome.value, std::move(outcome.matching)};
}

}  // namespace warpbox
