// Acceptance checks 1-11. Prints one PASS/FAIL line per check and exits
// non-zero if any fails. Checks 5-8 and 10 share one run of the full grid.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nkgroups/experiment.hpp"
#include "oracles.hpp"

using namespace nkgroups;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("[%s] %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void guarded(int id, const char* name, const std::function<Outcome()>& check) {
  try {
    report(id, name, check());
  } catch (const std::exception& e) {
    report(id, name, {false, std::string("exception: ") + e.what()});
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string fmt_ci(const Interval& ci) { return fmt("%.4f [%.4f, %.4f]", ci.estimate, ci.lower, ci.upper); }

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------

Outcome landscape_correctness() {
  const auto t0 = Clock::now();
  int landscapes = 0;
  std::string problem;
  for (Pattern p : kAllPatterns)
    for (int k : {3, 5})
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ++landscapes;
        const auto ls = build_landscape(build_matrix(p, 12, k, seed), 1000 + seed);
        double best = -1.0;
        for (std::uint32_t b = 0; b < 4096; ++b) {
          const double v = ls.performance(Solution(b, 12));
          if (!(v >= 0.0 && v <= 1.0)) problem = "performance out of range";
          best = std::max(best, oracle::performance(ls, oracle::decode(b, 12)));
        }
        if (std::abs(best - ls.global_max()) > 1e-12) problem = "global max mismatch";
        if (ls.performance(ls.global_argmax()) / ls.global_max() != 1.0) problem = "argmax does not normalize to 1";
      }
  const double secs = seconds_since(t0);
  if (secs >= 5.0 && problem.empty()) problem = "too slow";
  return {problem.empty(), fmt("%d landscapes in %.2f s (< 5 s) %s", landscapes, secs, problem.c_str())};
}

Outcome single_peak() {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ls = build_landscape(build_matrix(Pattern::Local, 10, 0), seed, 2);
    if (ls.count_local_optima() != 1) return {false, fmt("seed %llu has several optima", (unsigned long long)seed)};
    for (std::uint32_t start = 0; start < 1024; ++start)
      if (oracle::hill_climb(ls, start) != ls.global_argmax().bits())
        return {false, fmt("seed %llu: climb from %u misses the peak", (unsigned long long)seed, start)};
  }
  return {true, "100 landscapes, 1024 starts each"};
}

std::string serialize(const ScenarioConfig& c, std::span<const RunRecord> recs) {
  std::ostringstream out;
  write_record_rows(out, c, recs);
  return out.str();
}

Outcome determinism() {
  ScenarioConfig c;
  c.k = 5;
  c.pattern = Pattern::Random;
  c.tau = Schedule::every(1);
  c.learn_prob = 0.3;
  c.replications = 64;
  c.base_seed = 7;
  for (int r : {0, 17, 63})
    if (serialize(c, run_once(c, r)) != serialize(c, run_once(c, r))) return {false, "repeated run differs"};
  const std::string one = serialize(c, run_scenario(c, 1));
  const std::string eight = serialize(c, run_scenario(c, 8));
  return {one == eight, fmt("64 replications, %zu bytes identical at parallelism 1 and 8", one.size())};
}

Outcome degenerate_dynamics() {
  ScenarioConfig c;
  c.learn_prob = 0.0;
  c.tau = Schedule::never();
  c.horizon = 30;
  int runs = 0;
  for (Pattern p : kAllPatterns)
    for (int k : {3, 5}) {
      c.pattern = p;
      c.k = k;
      for (int r = 0; r < 42 && runs < 500; ++r, ++runs) {
        std::vector<AgentId> members;
        std::vector<std::vector<SubtaskSolution>> known;
        std::optional<Solution> d3;
        bool ok = true;
        run_once(c, r, [&](int t, const Population& pop, const GroupState& g, const Solution& implemented) {
          std::vector<std::vector<SubtaskSolution>> now;
          for (const Agent& a : pop.agents) now.push_back(a.known);
          if (t == 2) {
            members = g.members;
            known = now;
          } else if (t > 2) {
            ok = ok && members == g.members && known == now;
          }
          if (t == 3) d3 = implemented;
          if (t > 3) ok = ok && implemented == *d3;
        });
        if (!ok) return {false, fmt("run %d (%s, k=%d) changed", r, std::string(to_string(p)).c_str(), k)};
      }
    }
  return {runs == 500, fmt("%d runs", runs)};
}

// ---------------------------------------------------------------------------

struct GridRun {
  std::vector<CellSummary> cells;
  double seconds = 0.0;
};

GridRun run_full_grid() {
  ExperimentSpec spec;
  spec.replications = 200;
  spec.parallelism = workers();
  const auto t0 = Clock::now();
  Summarizer summarizer;
  for (const ScenarioConfig& c : expand_grid(spec)) {
    const FactorLevels levels = FactorLevels::of(c);
    const auto id = scenario_id(c);
    run_scenario(c, spec.parallelism, [&](std::span<const RunRecord> recs) { summarizer.add(levels, id, recs); });
  }
  return {summarizer.finish(), seconds_since(t0)};
}

CellFilter where(std::function<bool(const FactorLevels&)> f) { return f; }

Interval ci_of(const std::vector<CellSummary>& cells, const CellFilter& lhs, const CellFilter& rhs) {
  return bootstrap_interval(cells, contrast_between(cells, lhs, rhs));
}

std::size_t index_of(const std::vector<CellSummary>& cells, const FactorLevels& l) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].levels == l) return i;
  throw std::out_of_range("missing cell " + levels_key(l.k, l.pattern, l.tau, l.learn_prob));
}

Outcome complexity_direction(const GridRun& g) {
  const auto ci = ci_of(g.cells, where([](const FactorLevels& l) { return l.k == 3; }),
                        where([](const FactorLevels& l) { return l.k == 5; }));
  const bool pass = ci.estimate > 0 && ci.lower > 0 && g.seconds < 1800;
  return {pass, fmt("pd(K=3) - pd(K=5) = %s; grid took %.0f s on %d threads (< 1800 s)", fmt_ci(ci).c_str(), g.seconds,
                    workers())};
}

Outcome structure_direction(const GridRun& g) {
  bool pass = true;
  std::string detail;
  for (int k : {3, 5}) {
    const auto ci = ci_of(g.cells, where([k](const FactorLevels& l) { return l.k == k && l.pattern == Pattern::Block && l.learn_prob == 0.0; }),
                          where([k](const FactorLevels& l) { return l.k == k && l.pattern == Pattern::Random && l.learn_prob == 0.0; }));
    pass = pass && ci.lower > 0;
    detail += fmt("block-random K=%d: %s; ", k, fmt_ci(ci).c_str());
  }
  int beaten = 0, total = 0;
  std::string misses;
  for (Pattern p : kAllPatterns)
    for (Schedule tau : {Schedule::every(1), Schedule::every(10)}) {
      ++total;
      const auto ci = ci_of(g.cells, where([&](const FactorLevels& l) { return l == FactorLevels{5, p, tau, 0.0}; }),
                            where([&](const FactorLevels& l) { return l == FactorLevels{5, p, Schedule::never(), 0.0}; }));
      if (ci.lower > 0) ++beaten;
      else misses += fmt(" %s/tau=%s %s", std::string(to_string(p)).c_str(), tau.to_string().c_str(), fmt_ci(ci).c_str());
    }
  pass = pass && beaten == total;
  detail += fmt("adaptive beats never at K=5: %d/%d", beaten, total) + misses;
  return {pass, detail};
}

Outcome learning_saturation(const GridRun& g) {
  bool pass = true;
  std::string detail;
  for (Schedule tau : {Schedule::every(1), Schedule::every(10)}) {
    const auto p0 = index_of(g.cells, {3, Pattern::Block, tau, 0.0});
    const auto p1 = index_of(g.cells, {3, Pattern::Block, tau, 0.1});
    const auto p5 = index_of(g.cells, {3, Pattern::Block, tau, 0.5});
    // [pd(.1) - pd(0)] - 5 [pd(.5) - pd(.1)]
    const Contrast c{{{p1, 6.0}, {p0, -1.0}, {p5, -5.0}}};
    const auto ci = bootstrap_interval(g.cells, c);
    const double gain = g.cells[p1].mean_normalized - g.cells[p0].mean_normalized;
    const double later = g.cells[p5].mean_normalized - g.cells[p1].mean_normalized;
    pass = pass && gain > 5 * later && ci.lower > 0;
    detail += fmt("tau=%s: gain %.4f vs 5 x %.4f, margin %s; ", tau.to_string().c_str(), gain, later, fmt_ci(ci).c_str());
  }
  return {pass, detail};
}

Outcome tipping_point(const GridRun& g) {
  const Schedule one = Schedule::every(1);
  const auto ci = ci_of(g.cells, where([&](const FactorLevels& l) { return l == FactorLevels{5, Pattern::Block, one, 0.3}; }),
                        where([&](const FactorLevels& l) { return l == FactorLevels{5, Pattern::Block, one, 1.0}; }));
  std::string detail = fmt("pd(0.3) - pd(1.0) = %s; pd at 1.0 by tau:", fmt_ci(ci).c_str());
  double tau1 = 0.0, lowest_other = 2.0;
  for (Schedule tau : {Schedule::never(), Schedule::every(1), Schedule::every(10)}) {
    const double v = g.cells[index_of(g.cells, {5, Pattern::Block, tau, 1.0})].mean_normalized;
    detail += fmt(" %s=%.4f", tau.to_string().c_str(), v);
    if (tau == one) tau1 = v;
    else lowest_other = std::min(lowest_other, v);
  }
  return {ci.lower > 0 && tau1 < lowest_other, detail};
}

// ---------------------------------------------------------------------------

Outcome analysis_oracle() {
  // 2x2x2 over k, pattern and tau; values a + b + c + interaction
  const double v[2][2][2] = {{{0.10, 0.20}, {0.30, 0.50}}, {{0.40, 0.60}, {0.70, 0.90}}};
  const int ks[2] = {3, 5};
  const Pattern ps[2] = {Pattern::Block, Pattern::Random};
  const Schedule ts[2] = {Schedule::never(), Schedule::every(10)};
  std::vector<LabeledRecord> records;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l)
        for (int r = 0; r < 3; ++r)
          for (int t = 1; t <= 4; ++t) {
            const double jitter = 0.01 * (r - 1) + 0.002 * (t - 2.5);
            records.push_back({{ks[i], ps[j], ts[l], 0.0}, {0, r, t, 0.0, v[i][j][l] + jitter, {}, false}});
          }
  const auto cells = summarize(records);
  const auto pd_k = partial_dependence(cells, {Factor::K});
  const auto pd_p = partial_dependence(cells, {Factor::Pattern});
  const auto pd_kt = partial_dependence(cells, {Factor::K, Factor::Tau});
  // hand arithmetic
  double err = 0.0;
  err = std::max(err, std::abs(pd_k.at({3, Pattern::Block, Schedule::never(), 0.0}) - 0.275));
  err = std::max(err, std::abs(pd_k.at({5, Pattern::Block, Schedule::never(), 0.0}) - 0.65));
  err = std::max(err, std::abs(pd_p.at({0, Pattern::Block, Schedule::never(), 0.0}) - 0.325));
  err = std::max(err, std::abs(pd_p.at({0, Pattern::Random, Schedule::never(), 0.0}) - 0.6));
  err = std::max(err, std::abs(pd_kt.at({5, Pattern::Block, Schedule::every(10), 0.0}) - 0.75));
  err = std::max(err, std::abs(pd_kt.at({3, Pattern::Block, Schedule::never(), 0.0}) - 0.2));
  // pooled record mean per k level equals the unweighted marginal
  double pool_err = 0.0;
  for (int k : ks) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : records)
      if (r.levels.k == k) {
        sum += r.record.normalized;
        ++n;
      }
    pool_err = std::max(pool_err, std::abs(sum / n - pd_k.at({k, Pattern::Block, Schedule::never(), 0.0})));
  }
  return {err <= 1e-12 && pool_err <= 1e-12, fmt("max |error| %.2e, pooling %.2e", err, pool_err)};
}

Outcome arity(const GridRun& g) {
  const auto grid = expand_grid(ExperimentSpec{});
  std::ostringstream csv;
  write_cells(csv, g.cells);
  const std::string text = csv.str();
  const auto lines = std::count(text.begin(), text.end(), '\n') - 1;
  std::map<std::string, std::size_t> rows;
  for (const auto& t : figure_tables(g.cells, FigureKind::Overview)) rows[t.name] = t.table.rows.size();
  const bool pass = grid.size() == 396 && lines == 396 && rows["pd_tau"] == 3 && rows["pd_learn_prob"] == 11 &&
                    rows["pd_k"] == 2 && rows["pd_pattern"] == 6;
  return {pass, fmt("%zu scenarios, %ld cell rows, pd rows %zu/%zu/%zu/%zu", grid.size(), static_cast<long>(lines),
                    rows["pd_tau"], rows["pd_learn_prob"], rows["pd_k"], rows["pd_pattern"])};
}

Outcome performance_budget() {
  ScenarioConfig c;
  c.k = 5;
  c.pattern = Pattern::Random;
  c.tau = Schedule::every(1);
  c.learn_prob = 1.0;
  c.replications = 200;
  const auto t0 = Clock::now();
  std::size_t n = 0;
  run_scenario(c, 1, [&](std::span<const RunRecord> recs) { n += recs.size(); });
  const double secs = seconds_since(t0);
  return {n == 20000 && secs < 10.0, fmt("200 x 100 periods (K=5, random, tau=1, learn_prob=1) in %.2f s (< 10 s)", secs)};
}

}  // namespace

int main() {
  guarded(1, "landscape correctness", landscape_correctness);
  guarded(2, "single-peak oracle", single_peak);
  guarded(3, "determinism", determinism);
  guarded(4, "degenerate dynamics", degenerate_dynamics);

  std::printf("running the full grid at 200 replications on %d threads...\n", workers());
  std::fflush(stdout);
  GridRun grid;
  try {
    grid = run_full_grid();
  } catch (const std::exception& e) {
    std::printf("full grid failed: %s\n", e.what());
  }
  guarded(5, "complexity direction", [&] { return complexity_direction(grid); });
  guarded(6, "structure direction", [&] { return structure_direction(grid); });
  guarded(7, "learning saturation", [&] { return learning_saturation(grid); });
  guarded(8, "tipping point", [&] { return tipping_point(grid); });
  guarded(9, "analysis oracle", analysis_oracle);
  guarded(10, "arity", [&] { return arity(grid); });
  guarded(11, "performance budget", performance_budget);

  std::printf("%d of 11 checks failed\n", failures);
  return failures == 0 ? 0 : 1;
}
