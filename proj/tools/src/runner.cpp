#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "input.hpp"
#include "warpbox/compactdp.hpp"
#include "warpbox/generate.hpp"
#include "warpbox/preprocess_io.hpp"
#include "warpbox/reference.hpp"

namespace warpbox::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <class S>
json scalar_to_json(const S& v) {
  if constexpr (std::is_same_v<S, std::int64_t> || std::is_same_v<S, double>) {
    return json(v);
  } else {
    return json(ScalarTraits<S>::to_string(v));
  }
}

json pairs_to_json(const std::vector<IndexPair>& pairs) {
  json arr = json::array();
  for (auto [i, j] : pairs) arr.push_back(json::array({i, j}));
  return arr;
}

json counters_to_json(const WorkCounters& wc) {
  return json{{"cell_updates", wc.cell_updates},
              {"candidate_evaluations", wc.candidate_evaluations},
              {"dominance_pairs_reported", wc.dominance_pairs_reported}};
}

Metric resolve_metric(const RunConfig& config, int dim) {
  MetricKind kind;
  if (config.metric == "abs1d") {
    kind = MetricKind::Abs1D;
  } else if (config.metric == "l1") {
    kind = MetricKind::L1;
  } else if (config.metric == "linf") {
    kind = MetricKind::Linf;
  } else {
    throw InputError("unknown metric '" + config.metric + "' (abs1d, l1, linf)");
  }
  if (kind == MetricKind::Abs1D && dim != 1)
    throw InputError("abs1d metric requires 1-D input; pick --metric l1 or linf");
  if (kind != MetricKind::Abs1D && dim > 3)
    throw InputError("l1/linf metrics support dimension <= 3");
  Metric m{kind, dim};
  m.validate();
  return m;
}

template <class S>
void check_mode(const RunConfig& config) {
  if (config.mode != "direct" && config.mode != "faithful" && config.mode != "faithful-unpruned")
    throw InputError("unknown mode '" + config.mode + "' (direct, faithful, faithful-unpruned)");
  if (config.mode != "direct" && config.g != 2)
    throw InputError("faithful mode requires --g 2");
}

template <class S>
CompactDpOptions<S> make_options(const RunConfig& config, WorkCounters* wc) {
  CompactDpOptions<S> opts;
  opts.mode = config.mode == "direct" ? PreprocessMode::Direct : PreprocessMode::Faithful;
  opts.faithful.unpruned = config.mode == "faithful-unpruned";
  opts.traceback = config.traceback;
  opts.threads = config.threads;
  opts.counters = wc;
  return opts;
}

template <class S>
json run_distance(const RunConfig& config) {
  check_mode<S>(config);
  auto [a, b] = parse_input<S>(config.input_path);
  Metric metric = resolve_metric(config, a.dim);
  const bool ged = config.command == Command::Ged;
  if (ged && !config.rho_given) throw InputError("ged requires --rho");
  S rho = ged ? parse_scalar<S>(config.rho, 0) : S{};
  if (ged && rho < S{}) throw InputError("--rho must be >= 0");

  json report;
  report["command"] = ged ? "ged" : "dtw";
  report["metric"] = config.metric;
  report["g"] = config.g;
  WorkCounters wc;
  auto t0 = Clock::now();

  if (config.algorithm == Algorithm::Quadratic) {
    report["algorithm"] = "quadratic";
    if (ged) {
      auto res = ged_quadratic<S>(a, b, rho, metric, &wc, config.traceback);
      report["distance"] = scalar_to_json(res.value);
      if (config.traceback) report["coupling_or_matching"] = pairs_to_json(res.matching.pairs);
    } else {
      auto res = dtw_quadratic<S>(a, b, metric, &wc, config.traceback);
      report["distance"] = scalar_to_json(res.value);
      if (config.traceback) report["coupling_or_matching"] = pairs_to_json(res.coupling.pairs);
    }
  } else {
    report["algorithm"] = "subquadratic";
    report["mode"] = config.mode;
    auto model = ged ? GridCostModel<S>::ged_model(metric, rho) : GridCostModel<S>::dtw(metric);
    CompactDpOptions<S> opts = make_options<S>(config, &wc);

    BoxGrid<S> grid = decompose<S>(a, b, config.g, metric);
    std::optional<Preprocessed<S>> cached;
    if (!config.cache_path.empty()) {
      cached = load_preprocessed<S>(config.cache_path, grid, model);
      if (cached) {
        opts.preprocessed = &*cached;
        report["cache"] = "hit";
      } else {
        report["cache"] = "miss";
      }
    }
    auto outcome = run_compact_dp<S>(a, b, config.g, model, opts);
    if (!config.cache_path.empty() && !cached)
      save_preprocessed<S>(config.cache_path, grid, model, outcome.preprocessed);
    report["distance"] = scalar_to_json(outcome.value);
    if (config.traceback)
      report["coupling_or_matching"] =
          pairs_to_json(ged ? outcome.matching.pairs : outcome.coupling.pairs);
  }
  report["work_units"] = counters_to_json(wc);
  report["wall_time_ms"] = ms_since(t0);
  return report;
}

template <class S>
std::pair<PointSeq<S>, PointSeq<S>> bench_input(const RunConfig& config) {
  if (!config.input_path.empty()) return parse_input<S>(config.input_path);
  if (config.random_len <= 0)
    throw InputError("bench needs an input file or --random-n <len>");
  std::mt19937_64 rng(config.seed);
  InstanceParams p;
  p.max_len = config.random_len;
  p.min_len = config.random_len;
  return random_instance<S>(rng, p);
}

template <class S>
json run_bench(const RunConfig& config) {
  check_mode<S>(config);
  auto [a, b] = bench_input<S>(config);
  Metric metric = resolve_metric(config, a.dim);
  const bool ged = config.rho_given;
  S rho = ged ? parse_scalar<S>(config.rho, 0) : S{};

  json report;
  report["command"] = "bench";
  report["measure"] = ged ? "ged" : "dtw";
  report["g"] = config.g;
  report["n"] = a.size();
  report["m"] = b.size();

  WorkCounters wq;
  auto t0 = Clock::now();
  S quad_value;
  if (ged) {
    quad_value = ged_quadratic<S>(a, b, rho, metric, &wq, false).value;
  } else {
    quad_value = dtw_quadratic<S>(a, b, metric, &wq, false).value;
  }
  json quad;
  quad["distance"] = scalar_to_json(quad_value);
  quad["work_units"] = counters_to_json(wq);
  quad["wall_time_ms"] = ms_since(t0);
  report["quadratic"] = quad;

  WorkCounters ws;
  CompactDpOptions<S> opts = make_options<S>(config, &ws);
  opts.traceback = false;
  t0 = Clock::now();
  S sub_value;
  if (ged) {
    sub_value = ged_subquadratic<S>(a, b, rho, config.g, metric, opts).value;
  } else {
    sub_value = dtw_subquadratic<S>(a, b, config.g, metric, opts).value;
  }
  json sub;
  sub["distance"] = scalar_to_json(sub_value);
  sub["work_units"] = counters_to_json(ws);
  sub["wall_time_ms"] = ms_since(t0);
  report["subquadratic"] = sub;
  report["distances_equal"] = scalar_equal(quad_value, sub_value);
  return report;
}

// ---------------------------------------------------------------------------
// Self-test: oracle-equivalence and invariant suites on generated instances.

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

void finish(std::vector<SuiteResult>& suites, SuiteResult r, bool quiet) {
  if (!quiet)
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name
              << (r.detail.empty() ? "" : ": " + r.detail) << "\n";
  suites.push_back(std::move(r));
}

using S64 = std::int64_t;

SuiteResult suite_brute_force(std::mt19937_64& rng) {
  SuiteResult r{"brute-force-grounding"};
  Metric m{MetricKind::Abs1D, 1};
  for (int n = 1; n <= 7 && r.passed; ++n) {
    for (int mm = 1; n + mm <= 8 && r.passed; ++mm) {
      for (int rep = 0; rep < 12 && r.passed; ++rep) {
        InstanceParams p;
        p.min_len = p.max_len = 1;  // lengths fixed below
        PointSeq<S64> a = random_sequence<S64>(rng, {n, 6, 1, n}, "A");
        PointSeq<S64> b = random_sequence<S64>(rng, {mm, 6, 1, mm}, "B");
        if (dtw_quadratic<S64>(a, b, m, nullptr, false).value != brute_force_dtw(a, b, m)) {
          r.passed = false;
          r.detail = "dtw mismatch at n=" + std::to_string(n) + " m=" + std::to_string(mm);
        }
        for (S64 rho : {0, 1, 3}) {
          if (ged_quadratic<S64>(a, b, rho, m, nullptr, false).value !=
              brute_force_ged(a, b, rho, m)) {
            r.passed = false;
            r.detail = "ged mismatch at rho=" + std::to_string(rho);
          }
        }
      }
    }
  }
  return r;
}

SuiteResult suite_oracle_equivalence(std::mt19937_64& rng, int instances) {
  SuiteResult r{"oracle-equivalence"};
  Metric m{MetricKind::Abs1D, 1};
  std::uint64_t violations = 0;
  for (int t = 0; t < instances && r.passed; ++t) {
    InstanceParams p;
    p.max_len = 96;
    p.value_range = t % 4 == 0 ? 5 : 1000000;
    auto [a, b] = random_instance<S64>(rng, p);
    auto quad = dtw_quadratic<S64>(a, b, m, nullptr, false);
    for (int g : {2, 3, 4}) {
      CompactDpOptions<S64> opts;
      opts.traceback = true;
      opts.check_monge = true;
      opts.monge_violations = &violations;
      auto sub = dtw_subquadratic<S64>(a, b, g, m, opts);
      if (sub.value != quad.value || coupling_cost(a, b, sub.coupling, m) != sub.value) {
        r.passed = false;
        r.detail = "dtw g=" + std::to_string(g);
        break;
      }
    }
    for (S64 rho : {0, 1, 17}) {
      auto gq = ged_quadratic<S64>(a, b, rho, m, nullptr, false);
      CompactDpOptions<S64> opts;
      opts.traceback = true;
      opts.check_monge = true;
      opts.monge_violations = &violations;
      auto gs = ged_subquadratic<S64>(a, b, rho, 3, m, opts);
      if (gs.value != gq.value || matching_cost(a, b, gs.matching, rho, m) != gs.value) {
        r.passed = false;
        r.detail = "ged rho=" + std::to_string(rho);
        break;
      }
    }
  }
  if (violations > 0) {
    r.passed = false;
    r.detail = "non-crossing violations: " + std::to_string(violations);
  }
  return r;
}

SuiteResult suite_dominance(std::mt19937_64& rng) {
  SuiteResult r{"dominance-engines"};
  for (int t = 0; t < 60 && r.passed; ++t) {
    int dim = 1 + static_cast<int>(bounded(rng, 8));
    ColoredPointSet<S64> set(dim);
    int total = 2 + static_cast<int>(bounded(rng, 120));
    long long range = t % 3 == 0 ? 2 : 40;  // small ranges force duplicates
    std::vector<S64> v(dim);
    for (int i = 0; i < total; ++i) {
      for (auto& x : v) x = static_cast<S64>(bounded(rng, 2 * range + 1)) - range;
      if (bounded(rng, 2))
        set.add_red(static_cast<std::uint32_t>(i), v);
      else
        set.add_blue(static_cast<std::uint32_t>(i), v);
    }
    if (dominating_pairs_naive(set) != dominating_pairs_dnc(set)) {
      r.passed = false;
      r.detail = "set " + std::to_string(t);
    }
  }
  return r;
}

SuiteResult suite_fredman(std::mt19937_64& rng) {
  SuiteResult r{"fredman-soundness"};
  Metric m{MetricKind::Abs1D, 1};
  for (int t = 0; t < 10 && r.passed; ++t) {
    InstanceParams p;
    p.max_len = 12;
    p.value_range = t % 2 ? 4 : 100000;
    auto [a, b] = random_instance<S64>(rng, p);
    for (int g : {2, 3}) {
      auto grid = decompose<S64>(a, b, g, m);
      BoxGeometry geom(g);
      auto model =
          t % 3 == 0 ? GridCostModel<S64>::ged_model(m, S64(2)) : GridCostModel<S64>::dtw(m);
      std::vector<std::vector<std::uint64_t>> by_pair(geom.pairs.size());
      visit_paths(g, [&](PackedPath pp) {
        by_pair[geom.index_of(pp.start_index(), r_index_of(g, pp.end(g)))].push_back(pp.word);
      });
      for (int i = 1; i <= grid.rows && r.passed; ++i)
        for (int j = 1; j <= grid.cols && r.passed; ++j) {
          auto sigma = sign_assignment(grid, i, j);
          for (auto& paths : by_pair)
            for (auto w1 : paths)
              for (auto w2 : paths) {
                auto ord = compare_paths_fredman(grid, model, i, j, PackedPath{w1},
                                                 PackedPath{w2}, sigma);
                auto c1 = path_cost_refined(grid, model, i, j, PackedPath{w1});
                auto c2 = path_cost_refined(grid, model, i, j, PackedPath{w2});
                auto want = c1 < c2   ? std::strong_ordering::less
                            : c2 < c1 ? std::strong_ordering::greater
                                      : std::strong_ordering::equal;
                if (ord != want) {
                  r.passed = false;
                  r.detail = "box (" + std::to_string(i) + "," + std::to_string(j) + ")";
                }
              }
        }
    }
  }
  return r;
}

SuiteResult suite_encoding() {
  SuiteResult r{"path-encoding"};
  for (int g = 2; g <= 8 && r.passed; ++g) {
    std::uint64_t prev = 0, count = 0;
    visit_paths(g, [&](PackedPath p) {
      ++count;
      if (p.word <= prev || (p.word >> 59) != 0) r.passed = false;
      prev = p.word;
      Move mv[24];
      int tc = p.move_count();
      for (int t = 0; t < tc; ++t) mv[t] = p.move(t);
      PackedPath again = PackedPath::make(p.start_index(), std::vector<Move>(mv, mv + tc));
      if (again.word != p.word) r.passed = false;
    });
    double bound = std::pow(3.0, 2 * g - 1);
    if (static_cast<double>(count) > bound) r.passed = false;
    if (!r.passed) r.detail = "g=" + std::to_string(g);
  }
  return r;
}

SuiteResult suite_faithful(std::mt19937_64& rng) {
  SuiteResult r{"faithful-equivalence"};
  Metric m{MetricKind::Abs1D, 1};
  for (int t = 0; t < 15 && r.passed; ++t) {
    InstanceParams p;
    p.max_len = 30;
    p.value_range = t % 2 ? 3 : 100000;
    auto [a, b] = random_instance<S64>(rng, p);
    auto grid = decompose<S64>(a, b, 2, m);
    BoxGeometry geom(2);
    auto model = GridCostModel<S64>::dtw(m);
    auto direct = preprocess_direct(grid, geom, model);
    auto faithful = preprocess_faithful(grid, geom, model);
    for (int i = 1; i <= grid.rows && r.passed; ++i)
      for (int j = 1; j <= grid.cols && r.passed; ++j)
        if (!(direct.signature(grid, i, j) == faithful.signature(grid, i, j))) {
          r.passed = false;
          r.detail = "signature mismatch";
        }
    if (faithful.dominance_accepted != static_cast<std::uint64_t>(grid.rows) * grid.cols) {
      r.passed = false;
      r.detail = "accepted pairs != s^2";
    }
  }
  return r;
}

json run_selftest(const RunConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::vector<SuiteResult> suites;
  finish(suites, suite_brute_force(rng), config.quiet);
  finish(suites, suite_oracle_equivalence(rng, config.selftest_instances), config.quiet);
  finish(suites, suite_dominance(rng), config.quiet);
  finish(suites, suite_fredman(rng), config.quiet);
  finish(suites, suite_encoding(), config.quiet);
  finish(suites, suite_faithful(rng), config.quiet);

  json report;
  report["command"] = "selftest";
  report["seed"] = config.seed;
  json arr = json::array();
  bool all = true;
  for (const auto& s : suites) {
    arr.push_back(json{{"name", s.name}, {"passed", s.passed}, {"detail", s.detail}});
    all = all && s.passed;
  }
  report["suites"] = arr;
  report["passed"] = all;
  return report;
}

template <class S>
json dispatch(const RunConfig& config) {
  switch (config.command) {
    case Command::Dtw:
    case Command::Ged:
      return run_distance<S>(config);
    case Command::Bench:
      return run_bench<S>(config);
    case Command::Selftest:
      return run_selftest(config);
  }
  throw InputError("unknown command");
}

}  // namespace

json run_report(const RunConfig& config) {
  switch (config.arith) {
    case Arith::Int64:
      return dispatch<std::int64_t>(config);
    case Arith::RationalExact:
      return dispatch<Rational>(config);
    case Arith::Float64:
      return dispatch<double>(config);
  }
  throw InputError("unknown arithmetic mode");
}

namespace {

void flatten_tsv(const json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_tsv(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array() && !j.empty() && j.front().is_array()) {
    // index-pair lists: render compactly as i:j,i:j,...
    out += prefix + "\t";
    for (std::size_t t = 0; t < j.size(); ++t) {
      if (t) out += ",";
      out += j[t][0].dump() + ":" + j[t][1].dump();
    }
    out += "\n";
  } else {
    out += prefix + "\t" + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
  }
}

}  // namespace

std::string report_to_tsv(const json& report) {
  std::string out;
  flatten_tsv(report, "", out);
  return out;
}

}  // namespace warpbox::cli
