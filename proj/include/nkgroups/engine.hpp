#pragma once

// Period loop for one run, replication fan-out and normalization.
//
// Per period: adapt the group if scheduled, each member implements its best
// known solution against the previous group strategy, the concatenation is
// evaluated and normalized by the landscape's global maximum, and finally
// agents learn. Every stream of a run is derived from
// (base_seed, replication), so scenarios that share a base seed also share
// landscapes and populations replication by replication.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nkgroups/adaptation.hpp"
#include "nkgroups/landscape.hpp"
#include "nkgroups/population.hpp"
#include "nkgroups/rng.hpp"

namespace nkgroups {

enum class LearningScope { AllAgents, MembersOnly };

struct ScenarioConfig {
  int n = 12;
  int m_subtasks = 3;
  int p_agents = 30;
  int k = 3;
  Pattern pattern = Pattern::Block;
  Schedule tau = Schedule::never();
  double learn_prob = 0.0;
  int horizon = 100;
  int replications = 1500;
  std::uint64_t base_seed = 0;
  LearningScope learners = LearningScope::AllAgents;

  void validate() const {
    if (n < 1 || n > kEnumerationCap) throw std::invalid_argument("n must lie in [1, 24]");
    if (m_subtasks < 2 || n % m_subtasks != 0) throw std::invalid_argument("n must be divisible by m_subtasks >= 2");
    if (p_agents < m_subtasks) throw std::invalid_argument("p_agents must be at least m_subtasks");
    if (k < 0 || k >= n) throw std::invalid_argument("k must satisfy 0 <= k < n");
    if (!(learn_prob >= 0.0 && learn_prob <= 1.0)) throw std::invalid_argument("learn_prob must lie in [0,1]");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  }
};

/// Canonical text of the factor levels, e.g. "k=3;pattern=block;tau=10;learn_prob=0.1".
inline std::string levels_key(int k, Pattern pattern, Schedule tau, double learn_prob);

/// FNV-1a over levels_key; stable across runs and platforms.
inline std::uint64_t scenario_id(const ScenarioConfig& c);

struct RunRecord {
  std::uint64_t scenario_id = 0;
  int replication = 0;
  int t = 0;
  double raw = 0.0;
  double normalized = 0.0;
  std::vector<AgentId> members;
  bool adapted = false;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunSetup {
  Landscape landscape;
  Population population;
  Solution prior;
};

/// Landscape, population and the random period-0 strategy for one replication.
inline RunSetup setup_run(const ScenarioConfig& c, int replication) {
  const auto rep = static_cast<std::uint64_t>(replication);
  auto matrix = build_matrix(c.pattern, c.n, c.k, derive_seed(c.base_seed, rep, StreamPurpose::Matrix), c.m_subtasks);
  auto landscape = build_landscape(std::move(matrix), derive_seed(c.base_seed, rep, StreamPurpose::Landscape),
                                   c.m_subtasks);
  auto population = init_population(
      c.p_agents, c.m_subtasks, c.n / c.m_subtasks, derive_seed(c.base_seed, rep, StreamPurpose::Population),
      [&](int i) { return derive_seed(c.base_seed, rep, StreamPurpose::Agent, static_cast<std::uint64_t>(i)); });
  Rng prior_rng = make_rng(derive_seed(c.base_seed, rep, StreamPurpose::Prior));
  Solution prior(static_cast<std::uint32_t>(uniform_below(prior_rng, std::uint64_t{1} << c.n)), c.n);
  return {std::move(landscape), std::move(population), prior};
}

/// Optional per-period hook for tests and diagnostics, called after the
/// record is produced and before learning.
using PeriodObserver = std::function<void(int t, const Population&, const GroupState&, const Solution& implemented)>;

inline std::vector<RunRecord> run_once(const ScenarioConfig& c, int replication, const PeriodObserver& observe = {}) {
  c.validate();
  if (replication < 0) throw std::invalid_argument("replication index must be non-negative");
  RunSetup run = setup_run(c, replication);
  const Landscape& ls = run.landscape;
  Population& pop = run.population;
  const int len = ls.subtask_length();
  const std::uint64_t id = scenario_id(c);

  GroupState group{{}, run.prior};
  std::vector<SubtaskSolution> choice(static_cast<std::size_t>(c.p_agents));
  std::vector<RunRecord> records;
  records.reserve(static_cast<std::size_t>(c.horizon));

  for (int t = 1; t <= c.horizon; ++t) {
    const bool adapted = should_adapt(c.tau, t);
    if (adapted) {
      std::vector<AgentId> members(static_cast<std::size_t>(c.m_subtasks));
      for (int m = 0; m < c.m_subtasks; ++m) {
        std::vector<Signal> signals;
        for (AgentId a : pop.per_subtask[static_cast<std::size_t>(m)]) {
          const auto [best, utility] = best_known(pop.agents[static_cast<std::size_t>(a)], ls, group.last_strategy);
          choice[static_cast<std::size_t>(a)] = best;
          signals.push_back({a, utility});
        }
        std::optional<AgentId> incumbent;
        if (!group.members.empty()) incumbent = group.members[static_cast<std::size_t>(m)];
        members[static_cast<std::size_t>(m)] = select_member(signals, incumbent);
      }
      group.members = std::move(members);
    } else {
      for (AgentId a : group.members)
        choice[static_cast<std::size_t>(a)] = best_known(pop.agents[static_cast<std::size_t>(a)], ls, group.last_strategy).first;
    }

    Solution implemented = group.last_strategy;
    for (int m = 0; m < c.m_subtasks; ++m)
      implemented = implemented.with_segment(m * len, len, choice[static_cast<std::size_t>(group.members[static_cast<std::size_t>(m)])]);

    const double raw = ls.performance(implemented);
    records.push_back({id, replication, t, raw, raw / ls.global_max(), group.members, adapted});
    if (observe) observe(t, pop, group, implemented);

    if (c.learners == LearningScope::AllAgents) {
      for (Agent& a : pop.agents) learn_step(a, ls, group.last_strategy, c.learn_prob);
    } else {
      for (AgentId a : group.members) learn_step(pop.agents[static_cast<std::size_t>(a)], ls, group.last_strategy, c.learn_prob);
    }
    group.last_strategy = implemented;
  }
  return records;
}

/// Runs every replication on up to `parallelism` threads. `sink` receives
/// each replication's records in replication order whatever the completion
/// order.
inline void run_scenario(const ScenarioConfig& c, int parallelism,
                         const std::function<void(std::span<const RunRecord>)>& sink) {
  c.validate();
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
  const int workers = std::min(parallelism, c.replications);
  if (workers == 1) {
    for (int r = 0; r < c.replications; ++r) sink(run_once(c, r));
    return;
  }

  std::vector<std::optional<std::vector<RunRecord>>> done(static_cast<std::size_t>(c.replications));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::condition_variable cv;

  auto work = [&] {
    for (int r = next++; r < c.replications && !failed; r = next++) {
      try {
        auto recs = run_once(c, r);
        std::lock_guard lock(mu);
        done[static_cast<std::size_t>(r)] = std::move(recs);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(work);

  for (int r = 0; r < c.replications; ++r) {
    std::vector<RunRecord> recs;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return failed || done[static_cast<std::size_t>(r)].has_value(); });
      if (failed) break;
      recs = std::move(*done[static_cast<std::size_t>(r)]);
      done[static_cast<std::size_t>(r)].reset();
    }
    try {
      sink(recs);
    } catch (...) {
      failed = true;
      throw;
    }
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

inline std::vector<RunRecord> run_scenario(const ScenarioConfig& c, int parallelism) {
  std::vector<RunRecord> out;
  out.reserve(static_cast<std::size_t>(c.replications) * static_cast<std::size_t>(c.horizon));
  run_scenario(c, parallelism, [&](std::span<const RunRecord> recs) { out.insert(out.end(), recs.begin(), recs.end()); });
  return out;
}

// ---------------------------------------------------------------------------

inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", p);
  return buf;
}

inline std::string levels_key(int k, Pattern pattern, Schedule tau, double learn_prob) {
  return "k=" + std::to_string(k) + ";pattern=" + std::string(to_string(pattern)) + ";tau=" + tau.to_string() +
         ";learn_prob=" + format_probability(learn_prob);
}

inline std::uint64_t scenario_id(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : levels_key(c.k, c.pattern, c.tau, c.learn_prob)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace nkgroups
