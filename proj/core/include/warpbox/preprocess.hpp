#pragma once

// First stage of the boxed algorithm: per-box signatures (shortest staircase
// path for every admissible boundary pair + the box's sign assignment) and
// value tables that split each path cost into a rows-value depending only on
// the A-side group and a columns-value depending only on the B-side group,
// so cost lookups are O(1).
//
// Two modes share one output contract:
//   - preprocess_direct: per-box computation, any g in [2,13].
//   - preprocess_faithful: g = 2; enumerates (path-set, sign) guesses and
//     tests each guess against all boxes at once through bichromatic
//     dominance reporting, exactly the batched-comparison scheme.
//
// Padding discipline: a move priced as infinity never contributes to a
// rows/columns value; such positions are masked out of the sums, and path
// costs are compared as (pad count, finite part) lexicographically. Within
// the dominance machinery a guessed path with strictly fewer pads than an
// alternative wins that coordinate outright (encoded 0/0), strictly more
// pads loses it outright (encoded 1/0), and equal pads compare by the
// rearranged finite sums.

#include <array>
#include <bit>
#include <compare>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "warpbox/dominance.hpp"
#include "warpbox/staircase.hpp"

namespace warpbox {

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct TableKey {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  friend bool operator==(const TableKey&, const TableKey&) = default;
};

struct TableKeyHash {
  std::size_t operator()(const TableKey& k) const {
    return static_cast<std::size_t>(mix64(k.a ^ mix64(k.b)));
  }
};

// Insert-only sharded hash map; shards keep concurrent box propagation and
// preprocessing cheap to synchronize.
template <class V>
class KeyedStore {
 public:
  std::optional<V> find(const TableKey& k) const {
    auto& sh = shard(k);
    std::lock_guard<std::mutex> lock(sh.mu);
    auto it = sh.map.find(k);
    if (it == sh.map.end()) return std::nullopt;
    return it->second;
  }

  void insert(const TableKey& k, V v) {
    auto& sh = shard(k);
    std::lock_guard<std::mutex> lock(sh.mu);
    sh.map.emplace(k, std::move(v));
  }

  bool contains(const TableKey& k) const {
    auto& sh = shard(k);
    std::lock_guard<std::mutex> lock(sh.mu);
    return sh.map.count(k) != 0;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& sh : shards_)
      for (const auto& [k, v] : sh.map) fn(k, v);
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& sh : shards_) total += sh.map.size();
    return total;
  }

 private:
  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<TableKey, V, TableKeyHash> map;
  };
  static constexpr std::size_t kShards = 16;
  mutable std::array<Shard, kShards> shards_;

  Shard& shard(const TableKey& k) const {
    return shards_[mix64(k.a ^ k.b) & (kShards - 1)];
  }
};

inline std::uint16_t profile_code(PadProfile row, PadProfile col) {
  return static_cast<std::uint16_t>((row.low ? 1 : 0) | (row.cut << 1) | ((col.low ? 1 : 0) << 5) |
                                    (col.cut << 6));
}

inline CellKind kind_from_profile(PadProfile p, int local) {
  if (p.low && local == 1) return CellKind::InitLine;
  return local >= p.cut ? CellKind::OutOfRange : CellKind::Real;
}

// True when the move entering (row, col) is priced as infinity under the
// given block profiles; mirrors move_price without needing the box indices.
inline bool move_is_padded(bool ged, Move mv, int row_k_local, int col_k_local, PadProfile rp,
                           PadProfile cp) {
  CellKind rk = kind_from_profile(rp, row_k_local);
  CellKind ck = kind_from_profile(cp, col_k_local);
  if (rk == CellKind::OutOfRange || ck == CellKind::OutOfRange) return true;
  if (ged) return false;  // horizontal/vertical edges cost rho even on the init lines
  return rk != CellKind::Real || ck != CellKind::Real;
}

inline std::uint32_t mask_from_profiles(int g, bool ged, PackedPath path, PadProfile rp,
                                        PadProfile cp) {
  std::uint32_t mask = 0;
  BoundaryPos pos = path.start(g);
  for (int t = 0; t < path.move_count(); ++t) {
    Move mv = path.move(t);
    pos = PackedPath::advance(pos, mv);
    if (move_is_padded(ged, mv, pos.row, pos.col, rp, cp)) mask |= (1u << t);
  }
  return mask;
}

}  // namespace detail

// Rows-value / columns-value of a path under a sign assignment. For GED the
// rho charge of the horizontal/vertical moves is folded into the rows-value,
// so rows_value - columns_value always equals the finite path cost.
template <class S>
S rows_value(const BoxGrid<S>& grid, const GridCostModel<S>& model, int i, PackedPath path,
             const SignAssignment& sigma, std::uint32_t mask) {
  S sum{};
  long long rho_moves = 0;
  BoundaryPos pos = path.start(grid.g);
  for (int t = 0; t < path.move_count(); ++t) {
    Move mv = path.move(t);
    pos = PackedPath::advance(pos, mv);
    if (mask & (1u << t)) continue;
    if (model.ged && mv != Move::UpRight) {
      ++rho_moves;
      continue;
    }
    sum = S(sum + detail::signed_side_term(sigma.kind, sigma.code(pos.row, pos.col),
                                           grid.a_point(i, pos.row)));
  }
  if (model.ged && rho_moves > 0)
    sum = S(sum + S(model.rho * scalar_from_int<S>(rho_moves)));
  return sum;
}

template <class S>
S columns_value(const BoxGrid<S>& grid, const GridCostModel<S>& model, int j, PackedPath path,
                const SignAssignment& sigma, std::uint32_t mask) {
  S sum{};
  BoundaryPos pos = path.start(grid.g);
  for (int t = 0; t < path.move_count(); ++t) {
    Move mv = path.move(t);
    pos = PackedPath::advance(pos, mv);
    if (mask & (1u << t)) continue;
    if (model.ged && mv != Move::UpRight) continue;
    sum = S(sum + detail::signed_side_term(sigma.kind, sigma.code(pos.row, pos.col),
                                           grid.b_point(j, pos.col)));
  }
  return sum;
}

// Compares cost(p) against cost(q) for two paths sharing both endpoints,
// using only an A-side sum versus a B-side sum (the rearranged comparison).
// Pad counts differ only across padding, where the refined order applies.
template <class S>
std::strong_ordering compare_paths_fredman(const BoxGrid<S>& grid, const GridCostModel<S>& model,
                                           int i, int j, PackedPath p, PackedPath q,
                                           const SignAssignment& sigma) {
  if (p.start_index() != q.start_index() || !(p.end(grid.g) == q.end(grid.g)))
    throw InputError("compare_paths_fredman: paths do not share endpoints");
  PadProfile rp = grid.row_profile(i), cp = grid.col_profile(j);
  std::uint32_t mask_p = detail::mask_from_profiles(grid.g, model.ged, p, rp, cp);
  std::uint32_t mask_q = detail::mask_from_profiles(grid.g, model.ged, q, rp, cp);
  int pad_p = std::popcount(mask_p), pad_q = std::popcount(mask_q);
  if (pad_p != pad_q) return pad_p < pad_q ? std::strong_ordering::less : std::strong_ordering::greater;
  // cost(p) - cost(q) = (Vrow(p) - Vrow(q)) - (Vcol(p) - Vcol(q))
  S a_side = S(rows_value(grid, model, i, p, sigma, mask_p) -
               rows_value(grid, model, i, q, sigma, mask_q));
  S b_side = S(columns_value(grid, model, j, p, sigma, mask_p) -
               columns_value(grid, model, j, q, sigma, mask_q));
  if (a_side < b_side) return std::strong_ordering::less;
  if (b_side < a_side) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

// O(1) path-cost retrieval. Values are keyed by (sign assignment, packed
// path, block pad profiles, side, group) and inserted on demand; the key set
// of legal queries is pinned at preprocessing time.
template <class S>
class ValueTables {
 public:
  ValueTables(const BoxGrid<S>& grid, GridCostModel<S> model)
      : grid_(grid), model_(std::move(model)) {}

  const BoxGrid<S>& grid() const { return grid_; }
  const GridCostModel<S>& model() const { return model_; }

  std::uint32_t intern_sigma(const SignAssignment& sa) {
    std::lock_guard<std::mutex> lock(sigma_mu_);
    std::uint64_t h = sa.canonical_hash();
    auto range = sigma_index_.equal_range(h);
    for (auto it = range.first; it != range.second; ++it)
      if (sigmas_[it->second] == sa) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(sigmas_.size());
    sigmas_.push_back(sa);
    sigma_index_.emplace(h, id);
    return id;
  }

  const SignAssignment& sigma(std::uint32_t id) const { return sigmas_[id]; }
  std::size_t sigma_count() const { return sigmas_.size(); }

  void register_key(std::uint32_t sigma_id, std::uint64_t path_word) {
    registry_.insert({sigma_id, path_word}, char(1));
  }
  bool registered(std::uint32_t sigma_id, std::uint64_t path_word) const {
    return registry_.contains({sigma_id, path_word});
  }

  S row_entry(std::uint32_t sigma_id, PackedPath path, PadProfile rp, PadProfile cp, int i) const {
    detail::TableKey key = make_key(sigma_id, path.word, rp, cp, /*side=*/0, i);
    if (auto v = values_.find(key)) return *v;
    std::uint32_t mask = detail::mask_from_profiles(grid_.g, model_.ged, path, rp, cp);
    S v = rows_value(grid_, model_, i, path, sigmas_[sigma_id], mask);
    values_.insert(key, v);
    return v;
  }

  S col_entry(std::uint32_t sigma_id, PackedPath path, PadProfile rp, PadProfile cp, int j) const {
    detail::TableKey key = make_key(sigma_id, path.word, rp, cp, /*side=*/1, j);
    if (auto v = values_.find(key)) return *v;
    std::uint32_t mask = detail::mask_from_profiles(grid_.g, model_.ged, path, rp, cp);
    S v = columns_value(grid_, model_, j, path, sigmas_[sigma_id], mask);
    values_.insert(key, v);
    return v;
  }

  // Finite path cost through the tables; preconditions: the key was
  // registered by preprocessing and the path is pad-free in box (i,j).
  S query_cost(std::uint32_t sigma_id, int i, int j, PackedPath path) const {
    if (sigma_id >= sigmas_.size() || !registered(sigma_id, path.word))
      throw InternalError("value-table lookup for an unregistered (sigma, path) key");
    PadProfile rp = grid_.row_profile(i), cp = grid_.col_profile(j);
    return S(row_entry(sigma_id, path, rp, cp, i) - col_entry(sigma_id, path, rp, cp, j));
  }

  // Cost including the padding refinement; what the compact DP consumes.
  PathCost<S> pair_cost(std::uint32_t sigma_id, int i, int j, PackedPath path) const {
    PadProfile rp = grid_.row_profile(i), cp = grid_.col_profile(j);
    std::uint32_t mask = detail::mask_from_profiles(grid_.g, model_.ged, path, rp, cp);
    int pad = std::popcount(mask);
    if (pad > 0) return {pad, S{}};
    return {0, query_cost(sigma_id, i, j, path)};
  }

  std::size_t entry_count() const { return values_.size(); }

  template <class Fn>
  void for_each_entry(Fn&& fn) const {
    values_.for_each(fn);
  }
  void insert_raw(std::uint64_t a, std::uint64_t b, S v) { values_.insert({a, b}, std::move(v)); }

 private:
  static detail::TableKey make_key(std::uint32_t sigma_id, std::uint64_t word, PadProfile rp,
                                   PadProfile cp, int side, int group) {
    std::uint64_t a = sigma_id;
    a |= static_cast<std::uint64_t>(side) << 32;
    a |= static_cast<std::uint64_t>(group) << 33;
    a |= static_cast<std::uint64_t>(detail::profile_code(rp, cp)) << 50;
    return {a, word};
  }

  BoxGrid<S> grid_;
  GridCostModel<S> model_;

  mutable std::mutex sigma_mu_;
  std::vector<SignAssignment> sigmas_;
  std::unordered_multimap<std::uint64_t, std::uint32_t> sigma_index_;

  detail::KeyedStore<char> registry_;
  mutable detail::KeyedStore<S> values_;
};

// Preprocessing output: deduplicated signature pool, per-box signature and
// sign ids, and the value tables.
template <class S>
struct Preprocessed {
  std::shared_ptr<ValueTables<S>> tables;
  std::vector<BoxSignature> pool;
  std::vector<std::uint32_t> box_sig;    // rows*cols, index into pool
  std::vector<std::uint32_t> box_sigma;  // rows*cols, sigma id per box
  std::uint64_t dominance_reported = 0;  // faithful mode only
  std::uint64_t dominance_accepted = 0;  // faithful mode only

  std::size_t box_index(const BoxGrid<S>& grid, int i, int j) const {
    return static_cast<std::size_t>(i - 1) * grid.cols + (j - 1);
  }
  const BoxSignature& signature(const BoxGrid<S>& grid, int i, int j) const {
    return pool[box_sig[box_index(grid, i, j)]];
  }
};

// Constant-time packed-path lookup for an admissible pair index.
template <class S>
PackedPath query_shortest_path(const Preprocessed<S>& pre, const BoxGrid<S>& grid, int i, int j,
                               int pair_index) {
  const BoxSignature& sig = pre.signature(grid, i, j);
  if (pair_index < 0 || pair_index >= static_cast<int>(sig.paths.size()))
    throw InputError("pair index out of range");
  return PackedPath{sig.paths[static_cast<std::size_t>(pair_index)]};
}

template <class S>
S query_path_cost(const Preprocessed<S>& pre, std::uint32_t sigma_id, int i, int j,
                  PackedPath path) {
  return pre.tables->query_cost(sigma_id, i, j, path);
}

namespace detail {

template <class S>
std::uint64_t signature_fingerprint(const BoxSignature& sig) {
  std::uint64_t h = sig.sigma.canonical_hash();
  for (std::uint64_t w : sig.paths) h = mix64(h ^ w);
  return h;
}

template <class S>
struct SignaturePool {
  std::vector<BoxSignature> pool;
  std::unordered_multimap<std::uint64_t, std::uint32_t> index;

  std::uint32_t intern(BoxSignature&& sig) {
    std::uint64_t h = signature_fingerprint<S>(sig);
    auto range = index.equal_range(h);
    for (auto it = range.first; it != range.second; ++it)
      if (pool[it->second] == sig) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(pool.size());
    pool.push_back(std::move(sig));
    index.emplace(h, id);
    return id;
  }
};

}  // namespace detail

// Practical mode: computes every box's sign assignment and shortest paths
// directly. Signatures of identical boxes are stored once.
template <class S>
Preprocessed<S> preprocess_direct(const BoxGrid<S>& grid, const BoxGeometry& geom,
                                  const GridCostModel<S>& model) {
  Preprocessed<S> out;
  out.tables = std::make_shared<ValueTables<S>>(grid, model);
  out.box_sig.resize(static_cast<std::size_t>(grid.rows) * grid.cols);
  out.box_sigma.resize(out.box_sig.size());
  detail::SignaturePool<S> pool;
  for (int i = 1; i <= grid.rows; ++i) {
    for (int j = 1; j <= grid.cols; ++j) {
      BoxSignature sig = shortest_paths_direct(grid, geom, i, j, model);
      std::uint32_t sigma_id = out.tables->intern_sigma(sig.sigma);
      for (std::uint64_t w : sig.paths) out.tables->register_key(sigma_id, w);
      std::size_t bi = out.box_index(grid, i, j);
      out.box_sigma[bi] = sigma_id;
      out.box_sig[bi] = pool.intern(std::move(sig));
    }
  }
  out.pool = std::move(pool.pool);
  return out;
}

// One dominance batch for a fixed guess: a blue point per A-side group and a
// red point per B-side group. Trivial coordinates keep every batch of one
// box class at the same dimension d_g + (validation coordinates).
template <class S>
struct GuessPointBatch {
  int dim = 0;
  std::vector<std::uint32_t> a_groups, b_groups;
  std::vector<S> alpha;  // blue, one row per A group
  std::vector<S> beta;   // red, one row per B group
};

namespace detail {

inline int validation_width(MetricKind kind, int dim) {
  switch (kind) {
    case MetricKind::Abs1D: return 1;
    case MetricKind::L1: return dim;
    case MetricKind::Linf: return 2 * dim - 1;
  }
  return 0;
}

// Per-pair alternative lists: every staircase path grouped by admissible
// pair, in enumeration order.
inline std::vector<std::vector<std::uint64_t>> paths_by_pair(const BoxGeometry& geom) {
  std::vector<std::vector<std::uint64_t>> by_pair(geom.pairs.size());
  visit_paths(geom.g, [&](PackedPath p) {
    int idx = geom.index_of(p.start_index(), r_index_of(geom.g, p.end(geom.g)));
    by_pair[static_cast<std::size_t>(idx)].push_back(p.word);
  });
  return by_pair;
}

}  // namespace detail

// Builds the dominance points testing one guess (a path per admissible pair
// plus a sign assignment) against every box of one class. A beta >= alpha
// outcome certifies that each guessed path is shortest in that box and the
// sign assignment is correct there (up to ties and padded cells).
template <class S>
GuessPointBatch<S> build_guess_points(const BoxGrid<S>& grid, const BoxGeometry& geom,
                                      const GridCostModel<S>& model,
                                      const std::vector<std::uint64_t>& guess,
                                      const SignAssignment& sigma,
                                      const std::vector<std::vector<std::uint64_t>>& alternatives,
                                      bool a_fringe, bool b_fringe) {
  if (guess.size() != geom.pairs.size())
    throw InputError("guess must supply one path per admissible pair");
  const int g = grid.g;
  PadProfile rp{a_fringe, g + 1}, cp{b_fringe, g + 1};

  GuessPointBatch<S> batch;
  for (int i = a_fringe ? 1 : 2; i <= (a_fringe ? 1 : grid.rows); ++i)
    batch.a_groups.push_back(static_cast<std::uint32_t>(i));
  for (int j = b_fringe ? 1 : 2; j <= (b_fringe ? 1 : grid.cols); ++j)
    batch.b_groups.push_back(static_cast<std::uint32_t>(j));

  int d_g = 0;
  for (const auto& alts : alternatives) d_g += static_cast<int>(alts.size()) - 1;
  const int vwidth = detail::validation_width(sigma.kind, grid.metric.dim);
  batch.dim = d_g + g * g * vwidth;
  batch.alpha.assign(batch.a_groups.size() * static_cast<std::size_t>(batch.dim), S{});
  batch.beta.assign(batch.b_groups.size() * static_cast<std::size_t>(batch.dim), S{});

  auto alpha_at = [&](std::size_t gi, int c) -> S& {
    return batch.alpha[gi * batch.dim + static_cast<std::size_t>(c)];
  };
  auto beta_at = [&](std::size_t gj, int c) -> S& {
    return batch.beta[gj * batch.dim + static_cast<std::size_t>(c)];
  };

  int coord = 0;
  for (std::size_t pi = 0; pi < guess.size(); ++pi) {
    PackedPath guessed{guess[pi]};
    std::uint32_t mask_g = detail::mask_from_profiles(g, model.ged, guessed, rp, cp);
    int pad_g = std::popcount(mask_g);
    for (std::uint64_t alt_word : alternatives[pi]) {
      if (alt_word == guess[pi]) continue;
      PackedPath alt{alt_word};
      std::uint32_t mask_a = detail::mask_from_profiles(g, model.ged, alt, rp, cp);
      int pad_a = std::popcount(mask_a);
      if (pad_g < pad_a) {
        // The guessed path beats this alternative across the whole class.
        ++coord;
        continue;
      }
      if (pad_g > pad_a) {
        // The guessed path cannot be shortest anywhere in this class.
        for (std::size_t gi = 0; gi < batch.a_groups.size(); ++gi)
          alpha_at(gi, coord) = scalar_from_int<S>(1);
        ++coord;
        continue;
      }
      for (std::size_t gi = 0; gi < batch.a_groups.size(); ++gi) {
        int i = static_cast<int>(batch.a_groups[gi]);
        alpha_at(gi, coord) = S(rows_value(grid, model, i, guessed, sigma, mask_g) -
                                rows_value(grid, model, i, alt, sigma, mask_a));
      }
      for (std::size_t gj = 0; gj < batch.b_groups.size(); ++gj) {
        int j = static_cast<int>(batch.b_groups[gj]);
        beta_at(gj, coord) = S(columns_value(grid, model, j, guessed, sigma, mask_g) -
                               columns_value(grid, model, j, alt, sigma, mask_a));
      }
      ++coord;
    }
  }

  // Validation coordinates: beta - alpha reproduces the signed distance
  // constraints cell by cell; padded cells stay trivially satisfied.
  for (int l = 1; l <= g; ++l) {
    for (int m = 1; m <= g; ++m) {
      bool padded = detail::kind_from_profile(rp, l) != CellKind::Real ||
                    detail::kind_from_profile(cp, m) != CellKind::Real;
      std::uint8_t code = sigma.code(l, m);
      for (int sub = 0; sub < vwidth; ++sub, ++coord) {
        if (padded) continue;
        switch (sigma.kind) {
          case MetricKind::Abs1D:
          case MetricKind::L1: {
            // One coordinate per vector component k = sub: requires
            // s_k (a_k - b_k) >= 0.
            int k = sub;
            bool neg = sigma.kind == MetricKind::Abs1D ? code != 0 : ((code >> k) & 1) != 0;
            for (std::size_t gi = 0; gi < batch.a_groups.size(); ++gi) {
              S ak = grid.a_point(static_cast<int>(batch.a_groups[gi]), l)[k];
              alpha_at(gi, coord) = neg ? ak : S(S{} - ak);
            }
            for (std::size_t gj = 0; gj < batch.b_groups.size(); ++gj) {
              S bk = grid.b_point(static_cast<int>(batch.b_groups[gj]), m)[k];
              beta_at(gj, coord) = neg ? bk : S(S{} - bk);
            }
            break;
          }
          case MetricKind::Linf: {
            // Constraints s'(a_k - b_k) <= c (a_k* - b_k*) over every signed
            // coordinate other than the chosen one.
            int kstar = code >> 1;
            int csign = (code & 1) ? -1 : 1;
            int alt = sub;  // index into the 2d-1 non-chosen signed coords
            int k = -1, sprime = 0;
            int seen = 0;
            for (int kk = 0; kk < grid.metric.dim && k < 0; ++kk)
              for (int ss : {1, -1}) {
                if (kk == kstar && ss == csign) continue;
                if (seen++ == alt) {
                  k = kk;
                  sprime = ss;
                  break;
                }
              }
            for (std::size_t gi = 0; gi < batch.a_groups.size(); ++gi) {
              auto pa = grid.a_point(static_cast<int>(batch.a_groups[gi]), l);
              S term = sprime > 0 ? pa[k] : S(S{} - pa[k]);
              S anchor = csign > 0 ? pa[kstar] : S(S{} - pa[kstar]);
              alpha_at(gi, coord) = S(term - anchor);
            }
            for (std::size_t gj = 0; gj < batch.b_groups.size(); ++gj) {
              auto pb = grid.b_point(static_cast<int>(batch.b_groups[gj]), m);
              S term = sprime > 0 ? pb[k] : S(S{} - pb[k]);
              S anchor = csign > 0 ? pb[kstar] : S(S{} - pb[kstar]);
              beta_at(gj, coord) = S(term - anchor);
            }
            break;
          }
        }
      }
    }
  }
  if (coord != batch.dim) throw InternalError("guess point dimension mismatch");
  return batch;
}

struct FaithfulOptions {
  bool unpruned = false;  // enumerate every path set, not just realized candidates
};

// Faithful mode: guess (path set, sign assignment) pairs, test each guess
// against all boxes of a class at once via dominance reporting, and accept
// the first (lexicographically smallest) dominating guess per box. Restricted
// to g = 2, where the guess space is tame.
template <class S>
Preprocessed<S> preprocess_faithful(const BoxGrid<S>& grid, const BoxGeometry& geom,
                                    const GridCostModel<S>& model, FaithfulOptions opts = {},
                                    WorkCounters* counters = nullptr) {
  if (grid.g != 2) throw InputError("faithful preprocessing requires g = 2");
  if (grid.metric.kind != MetricKind::Abs1D && grid.metric.dim > 3)
    throw InputError("faithful preprocessing supports dimension <= 3");
  if (grid.row_profile(grid.rows).cut != grid.g + 1 || grid.col_profile(grid.cols).cut != grid.g + 1)
    throw InternalError("g = 2 blocks can never be short");

  const int g = grid.g;
  auto all_paths = detail::paths_by_pair(geom);

  // Candidate paths per pair: either everything, or only paths realized as
  // some box's shortest (the pruned loop exercises identical dominance logic).
  std::vector<std::vector<std::uint64_t>> candidates(geom.pairs.size());
  if (opts.unpruned) {
    candidates = all_paths;
  } else {
    std::vector<std::vector<std::uint64_t>> seen(geom.pairs.size());
    for (int i = 1; i <= grid.rows; ++i)
      for (int j = 1; j <= grid.cols; ++j) {
        BoxSignature sig = shortest_paths_direct(grid, geom, i, j, model);
        for (std::size_t pi = 0; pi < sig.paths.size(); ++pi) seen[pi].push_back(sig.paths[pi]);
      }
    for (std::size_t pi = 0; pi < seen.size(); ++pi) {
      std::sort(seen[pi].begin(), seen[pi].end());
      seen[pi].erase(std::unique(seen[pi].begin(), seen[pi].end()), seen[pi].end());
      candidates[pi] = std::move(seen[pi]);
    }
  }

  // Sign assignments enumerated cell-major with the smallest code first, so
  // the first validating assignment is the canonical one.
  int codes_per_cell = 0;
  switch (grid.metric.kind) {
    case MetricKind::Abs1D: codes_per_cell = 2; break;
    case MetricKind::L1: codes_per_cell = 1 << grid.metric.dim; break;
    case MetricKind::Linf: codes_per_cell = 2 * grid.metric.dim; break;
  }
  const int cells = g * g;

  struct Acceptance {
    bool done = false;
    std::vector<std::uint64_t> paths;
    SignAssignment sigma;
  };
  std::vector<Acceptance> accepted(static_cast<std::size_t>(grid.rows) * grid.cols);
  std::uint64_t raw_reported = 0, accepted_pairs = 0;

  std::vector<std::size_t> choice(geom.pairs.size(), 0);
  std::vector<std::uint64_t> guess(geom.pairs.size());
  bool more_guesses = true;
  while (more_guesses) {
    for (std::size_t pi = 0; pi < choice.size(); ++pi) guess[pi] = candidates[pi][choice[pi]];

    SignAssignment sigma;
    sigma.kind = grid.metric.kind;
    sigma.dim = grid.metric.dim;
    sigma.g = g;
    sigma.codes.assign(static_cast<std::size_t>(cells), 0);
    bool more_sigmas = true;
    while (more_sigmas) {
      for (bool a_fringe : {true, false}) {
        for (bool b_fringe : {true, false}) {
          if (!a_fringe && grid.rows < 2) continue;
          if (!b_fringe && grid.cols < 2) continue;
          GuessPointBatch<S> batch = build_guess_points(grid, geom, model, guess, sigma,
                                                        all_paths, a_fringe, b_fringe);
          ColoredPointSet<S> set(batch.dim);
          for (std::size_t gi = 0; gi < batch.a_groups.size(); ++gi)
            set.add_blue(batch.a_groups[gi],
                         {batch.alpha.data() + gi * batch.dim,
                          static_cast<std::size_t>(batch.dim)});
          for (std::size_t gj = 0; gj < batch.b_groups.size(); ++gj)
            set.add_red(batch.b_groups[gj],
                        {batch.beta.data() + gj * batch.dim,
                         static_cast<std::size_t>(batch.dim)});
          auto pairs = dominating_pairs_dnc(set, counters);
          raw_reported += pairs.size();
          for (auto [j, i] : pairs) {
            std::size_t bi = static_cast<std::size_t>(i - 1) * grid.cols + (j - 1);
            if (accepted[bi].done) continue;
            accepted[bi] = {true, guess, sigma};
            ++accepted_pairs;
          }
        }
      }
      // Next sigma: increment the cell codes like a big-endian counter.
      more_sigmas = false;
      for (int c = cells - 1; c >= 0; --c) {
        if (static_cast<int>(sigma.codes[c]) + 1 < codes_per_cell) {
          ++sigma.codes[c];
          std::fill(sigma.codes.begin() + c + 1, sigma.codes.end(), 0);
          more_sigmas = true;
          break;
        }
        sigma.codes[c] = 0;
      }
    }
    more_guesses = false;
    for (std::size_t pi = choice.size(); pi-- > 0;) {
      if (choice[pi] + 1 < candidates[pi].size()) {
        ++choice[pi];
        std::fill(choice.begin() + pi + 1, choice.end(), 0);
        more_guesses = true;
        break;
      }
      choice[pi] = 0;
    }
  }

  Preprocessed<S> out;
  out.tables = std::make_shared<ValueTables<S>>(grid, model);
  out.box_sig.resize(accepted.size());
  out.box_sigma.resize(accepted.size());
  out.dominance_reported = raw_reported;
  out.dominance_accepted = accepted_pairs;
  detail::SignaturePool<S> pool;
  for (int i = 1; i <= grid.rows; ++i) {
    for (int j = 1; j <= grid.cols; ++j) {
      std::size_t bi = static_cast<std::size_t>(i - 1) * grid.cols + (j - 1);
      if (!accepted[bi].done)
        throw InternalError("faithful preprocessing left box (" + std::to_string(i) + "," +
                            std::to_string(j) + ") without a signature");
      BoxSignature sig{accepted[bi].sigma, accepted[bi].paths};
      std::uint32_t sigma_id = out.tables->intern_sigma(sig.sigma);
      for (std::uint64_t w : sig.paths) out.tables->register_key(sigma_id, w);
      out.box_sigma[bi] = sigma_id;
      out.box_sig[bi] = pool.intern(std::move(sig));
    }
  }
  out.pool = std::move(pool.pool);

  // Eagerly fill the rows/columns values the accepted guesses touch.
  for (int i = 1; i <= grid.rows; ++i)
    for (int j = 1; j <= grid.cols; ++j) {
      std::size_t bi = static_cast<std::size_t>(i - 1) * grid.cols + (j - 1);
      const BoxSignature& sig = out.pool[out.box_sig[bi]];
      PadProfile rp = grid.row_profile(i), cp = grid.col_profile(j);
      for (std::uint64_t w : sig.paths) {
        for (int ii = 1; ii <= grid.rows; ++ii)
          if ((ii == 1) == rp.low) out.tables->row_entry(out.box_sigma[bi], PackedPath{w}, rp, cp, ii);
        for (int jj = 1; jj <= grid.cols; ++jj)
          if ((jj == 1) == cp.low) out.tables->col_entry(out.box_sigma[bi], PackedPath{w}, rp, cp, jj);
      }
    }
  return out;
}

}  // namespace warpbox
