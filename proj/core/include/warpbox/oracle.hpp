#pragma once

// Reference quadratic dynamic programs for DTW and GED, with traceback.
// These are the ground truth the compact DP is checked against.

#include <cstdint>
#include <vector>

#include "warpbox/core.hpp"

namespace warpbox {

enum class Step : std::uint8_t { None, Diag, Left, Down };

// (n+1) x (m+1) DP matrix, row 0 / column 0 holding the initialization.
// Rows grow bottom-to-top, columns left-to-right: at(0,0) is the origin.
template <class S>
struct DpMatrix {
  int rows = 0;  // n + 1
  int cols = 0;  // m + 1
  std::vector<Extended<S>> values;
  std::vector<Step> back;

  DpMatrix(int n, int m)
      : rows(n + 1), cols(m + 1), values(static_cast<std::size_t>(rows) * cols),
        back(static_cast<std::size_t>(rows) * cols, Step::None) {}

  Extended<S>& at(int l, int m) { return values[static_cast<std::size_t>(l) * cols + m]; }
  const Extended<S>& at(int l, int m) const {
    return values[static_cast<std::size_t>(l) * cols + m];
  }
  Step& step(int l, int m) { return back[static_cast<std::size_t>(l) * cols + m]; }
  Step step(int l, int m) const { return back[static_cast<std::size_t>(l) * cols + m]; }
};

namespace detail {

// Tie preference Diag > Left > Down keeps traceback deterministic.
template <class S>
inline void relax(const Extended<S>& diag, const Extended<S>& left, const Extended<S>& down,
                  Extended<S>& best, Step& chosen) {
  best = diag;
  chosen = Step::Diag;
  if (left < best) {
    best = left;
    chosen = Step::Left;
  }
  if (down < best) {
    best = down;
    chosen = Step::Down;
  }
}

template <class S>
Coupling trace_coupling(const DpMatrix<S>& dp) {
  Coupling c;
  int l = dp.rows - 1, m = dp.cols - 1;
  while (l != 0 || m != 0) {
    c.pairs.emplace_back(l, m);
    switch (dp.step(l, m)) {
      case Step::Diag: --l; --m; break;
      case Step::Left: --m; break;
      case Step::Down: --l; break;
      case Step::None: throw InternalError("DTW traceback fell off the matrix");
    }
  }
  std::reverse(c.pairs.begin(), c.pairs.end());
  return c;
}

template <class S>
MonotoneMatching trace_matching(const DpMatrix<S>& dp) {
  MonotoneMatching mm;
  int l = dp.rows - 1, m = dp.cols - 1;
  while (l != 0 || m != 0) {
    switch (dp.step(l, m)) {
      case Step::Diag:
        mm.pairs.emplace_back(l, m);
        --l; --m;
        break;
      case Step::Left: --m; break;
      case Step::Down: --l; break;
      case Step::None: throw InternalError("GED traceback fell off the matrix");
    }
  }
  std::reverse(mm.pairs.begin(), mm.pairs.end());
  return mm;
}

}  // namespace detail

template <class S>
DpMatrix<S> dtw_matrix(const PointSeq<S>& a, const PointSeq<S>& b, const Metric& metric,
                       WorkCounters* counters = nullptr) {
  metric.validate();
  const int n = a.size(), m = b.size();
  DpMatrix<S> dp(n, m);
  dp.at(0, 0) = Extended<S>(S{});
  for (int l = 1; l <= n; ++l) dp.at(l, 0) = Extended<S>::infinity();
  for (int c = 1; c <= m; ++c) dp.at(0, c) = Extended<S>::infinity();
  std::uint64_t updates = 0;
  for (int l = 1; l <= n; ++l) {
    for (int c = 1; c <= m; ++c) {
      Extended<S> best;
      Step chosen;
      detail::relax(dp.at(l - 1, c - 1), dp.at(l, c - 1), dp.at(l - 1, c), best, chosen);
      dp.at(l, c) = best + dist(metric, a, l, b, c);
      dp.step(l, c) = chosen;
      ++updates;
    }
  }
  if (counters) counters->cell_updates += updates;
  return dp;
}

template <class S>
DpMatrix<S> ged_matrix(const PointSeq<S>& a, const PointSeq<S>& b, const S& rho,
                       const Metric& metric, WorkCounters* counters = nullptr) {
  metric.validate();
  if (rho < S{}) throw InputError("gap penalty rho must be >= 0");
  const int n = a.size(), m = b.size();
  DpMatrix<S> dp(n, m);
  dp.at(0, 0) = Extended<S>(S{});
  for (int l = 1; l <= n; ++l) {
    dp.at(l, 0) = Extended<S>(S(rho * scalar_from_int<S>(l)));
    dp.step(l, 0) = Step::Down;
  }
  for (int c = 1; c <= m; ++c) {
    dp.at(0, c) = Extended<S>(S(rho * scalar_from_int<S>(c)));
    dp.step(0, c) = Step::Left;
  }
  std::uint64_t updates = 0;
  for (int l = 1; l <= n; ++l) {
    for (int c = 1; c <= m; ++c) {
      Extended<S> diag = dp.at(l - 1, c - 1) + dist(metric, a, l, b, c);
      Extended<S> left = dp.at(l, c - 1) + rho;
      Extended<S> down = dp.at(l - 1, c) + rho;
      Extended<S> best;
      Step chosen;
      detail::relax(diag, left, down, best, chosen);
      dp.at(l, c) = best;
      dp.step(l, c) = chosen;
      ++updates;
    }
  }
  if (counters) counters->cell_updates += updates;
  return dp;
}

template <class S>
struct DtwResult {
  S value{};
  Coupling coupling;
};

template <class S>
struct GedResult {
  S value{};
  MonotoneMatching matching;
};

template <class S>
DtwResult<S> dtw_quadratic(const PointSeq<S>& a, const PointSeq<S>& b, const Metric& metric,
                           WorkCounters* counters = nullptr, bool want_coupling = true) {
  if (a.size() < 1 || b.size() < 1) throw InputError("sequences must be nonempty");
  if (a.dim != b.dim) throw InputError("sequences have different dimensions");
  if (want_coupling) {
    DpMatrix<S> dp = dtw_matrix(a, b, metric, counters);
    return {dp.at(a.size(), b.size()).finite(), detail::trace_coupling(dp)};
  }
  // Two-row rolling evaluation for value-only queries.
  metric.validate();
  const int n = a.size(), m = b.size();
  std::vector<Extended<S>> prev(m + 1), cur(m + 1);
  prev[0] = Extended<S>(S{});
  for (int c = 1; c <= m; ++c) prev[c] = Extended<S>::infinity();
  std::uint64_t updates = 0;
  for (int l = 1; l <= n; ++l) {
    cur[0] = Extended<S>::infinity();
    for (int c = 1; c <= m; ++c) {
      Extended<S> best;
      Step chosen;
      detail::relax(prev[c - 1], cur[c - 1], prev[c], best, chosen);
      cur[c] = best + dist(metric, a, l, b, c);
      ++updates;
    }
    std::swap(prev, cur);
  }
  if (counters) counters->cell_updates += updates;
  return {prev[m].finite(), {}};
}

template <class S>
GedResult<S> ged_quadratic(const PointSeq<S>& a, const PointSeq<S>& b, const S& rho,
                           const Metric& metric, WorkCounters* counters = nullptr,
                           bool want_matching = true) {
  if (a.size() < 1 || b.size() < 1) throw InputError("sequences must be nonempty");
  if (a.dim != b.dim) throw InputError("sequences have different dimensions");
  if (want_matching) {
    DpMatrix<S> dp = ged_matrix(a, b, rho, metric, counters);
    return {dp.at(a.size(), b.size()).finite(), detail::trace_matching(dp)};
  }
  metric.validate();
  if (rho < S{}) throw InputError("gap penalty rho must be >= 0");
  const int n = a.size(), m = b.size();
  std::vector<Extended<S>> prev(m + 1), cur(m + 1);
  prev[0] = Extended<S>(S{});
  for (int c = 1; c <= m; ++c) prev[c] = Extended<S>(S(rho * scalar_from_int<S>(c)));
  std::uint64_t updates = 0;
  for (int l = 1; l <= n; ++l) {
    cur[0] = Extended<S>(S(rho * scalar_from_int<S>(l)));
    for (int c = 1; c <= m; ++c) {
      Extended<S> diag = prev[c - 1] + dist(metric, a, l, b, c);
      Extended<S> left = cur[c - 1] + rho;
      Extended<S> down = prev[c] + rho;
      Extended<S> best;
      Step chosen;
      detail::relax(diag, left, down, best, chosen);
      cur[c] = best;
      ++updates;
    }
    std::swap(prev, cur);
  }
  if (counters) counters->cell_updates += updates;
  return {prev[m].finite(), {}};
}

}  // namespace warpbox
