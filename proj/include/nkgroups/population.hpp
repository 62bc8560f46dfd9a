#pragma once

// Agents: expertise, known subtask solutions, utility estimates and the
// discovery/forgetting step.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nkgroups/landscape.hpp"
#include "nkgroups/rng.hpp"

namespace nkgroups {

using AgentId = int;

/// A solution to one subtask: bit j is decision (subtask * S + j).
using SubtaskSolution = std::uint32_t;

struct Agent {
  AgentId id = 0;
  int expertise = 0;
  /// Known solutions, kept sorted ascending and never empty.
  std::vector<SubtaskSolution> known;
  Rng rng;

  bool knows(SubtaskSolution s) const { return std::binary_search(known.begin(), known.end(), s); }
  void insert(SubtaskSolution s) {
    auto it = std::lower_bound(known.begin(), known.end(), s);
    if (it == known.end() || *it != s) known.insert(it, s);
  }
};

struct Population {
  int subtasks = 0;
  int subtask_length = 0;
  std::vector<Agent> agents;
  /// per_subtask[m] holds the ids of agents with expertise m, ascending.
  std::vector<std::vector<AgentId>> per_subtask;
};

/// Each agent gets a uniform expertise (whole assignment redrawn until every
/// subtask is covered) and one uniformly random solution to its subtask.
/// Expertise comes from `population_seed`; agent i's private stream is
/// seeded with `agent_seed(i)`.
template <typename AgentSeedFn>
Population init_population(int p, int m_subtasks, int s_len, std::uint64_t population_seed,
                           AgentSeedFn&& agent_seed) {
  if (m_subtasks < 2) throw std::invalid_argument("need at least two subtasks");
  if (p < m_subtasks) throw std::invalid_argument("population smaller than the number of subtasks");
  if (s_len < 1 || s_len * m_subtasks > kEnumerationCap) throw std::invalid_argument("subtask length out of range");

  Rng rng = make_rng(population_seed);
  std::vector<int> expertise(static_cast<std::size_t>(p));
  std::vector<int> counts;
  do {
    counts.assign(static_cast<std::size_t>(m_subtasks), 0);
    for (int& e : expertise) {
      e = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(m_subtasks)));
      ++counts[static_cast<std::size_t>(e)];
    }
  } while (std::find(counts.begin(), counts.end(), 0) != counts.end());

  Population pop{m_subtasks, s_len, {}, std::vector<std::vector<AgentId>>(static_cast<std::size_t>(m_subtasks))};
  pop.agents.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    Agent a{i, expertise[static_cast<std::size_t>(i)], {}, make_rng(agent_seed(i))};
    a.known.push_back(static_cast<SubtaskSolution>(uniform_below(a.rng, std::uint64_t{1} << s_len)));
    pop.per_subtask[static_cast<std::size_t>(a.expertise)].push_back(i);
    pop.agents.push_back(std::move(a));
  }
  return pop;
}

inline Population init_population(int p, int m_subtasks, int s_len, std::uint64_t seed) {
  return init_population(p, m_subtasks, s_len, seed,
                         [seed](int i) { return derive_seed(seed, 0, StreamPurpose::Agent, static_cast<std::uint64_t>(i)); });
}

/// U = 1/2 * (C_m + mean over r != m of C_r), with `candidate` placed into
/// subtask m of `residual` and every contribution evaluated on the result.
inline double estimate_utility(const Landscape& ls, int subtask, SubtaskSolution candidate, const Solution& residual) {
  if (residual.size() != ls.n()) throw std::invalid_argument("residual length does not match landscape");
  if (subtask < 0 || subtask >= ls.subtasks()) throw std::out_of_range("subtask index out of range");
  const int len = ls.subtask_length();
  const std::uint32_t bits = residual.with_segment(subtask * len, len, candidate).bits();
  double own = 0.0;
  double total = 0.0;
  for (int i = 0; i < ls.n(); ++i) {
    const double c = ls.contribution(i, bits);
    total += c;
    if (i / len == subtask) own += c;
  }
  const double others = (total - own) / len / (ls.subtasks() - 1);
  return 0.5 * (own / len + others);
}

inline double estimate_utility(const Agent& agent, const Landscape& ls, SubtaskSolution candidate,
                               const Solution& residual) {
  return estimate_utility(ls, agent.expertise, candidate, residual);
}

/// Utility-maximising known solution. Ties go to the lowest value.
inline std::pair<SubtaskSolution, double> best_known(const Agent& agent, const Landscape& ls, const Solution& residual) {
  if (agent.known.empty()) throw std::logic_error("agent knows no solution");
  SubtaskSolution best = agent.known.front();
  double best_u = estimate_utility(agent, ls, best, residual);
  for (std::size_t i = 1; i < agent.known.size(); ++i) {
    const double u = estimate_utility(agent, ls, agent.known[i], residual);
    if (u > best_u) {
      best_u = u;
      best = agent.known[i];
    }
  }
  return {best, best_u};
}

/// End-of-period learning. Both mechanisms act on the known set as it stood
/// at the start of the step:
///  - discovery (prob): flip one random bit of a random known solution and
///    add it (no-op if already known);
///  - forgetting (prob): drop one random known solution other than the
///    current utility maximiser, if there is one.
/// The two Bernoulli draws are always consumed.
inline void learn_step(Agent& agent, const Landscape& ls, const Solution& residual, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("learning probability must lie in [0,1]");
  const bool discover = bernoulli(agent.rng, prob);
  const bool forget = bernoulli(agent.rng, prob);
  if (!discover && !forget) return;

  const std::size_t before = agent.known.size();
  std::optional<SubtaskSolution> discovered;
  if (discover) {
    const SubtaskSolution base = agent.known[uniform_below(agent.rng, before)];
    const int bit = static_cast<int>(uniform_below(agent.rng, static_cast<std::uint64_t>(ls.subtask_length())));
    const SubtaskSolution neighbour = base ^ (SubtaskSolution{1} << bit);
    if (!agent.knows(neighbour)) discovered = neighbour;
  }
  std::optional<SubtaskSolution> forgotten;
  if (forget && before > 1) {
    const SubtaskSolution keep = best_known(agent, ls, residual).first;
    std::vector<SubtaskSolution> candidates;
    for (SubtaskSolution s : agent.known)
      if (s != keep) candidates.push_back(s);
    forgotten = candidates[uniform_below(agent.rng, candidates.size())];
  }
  if (forgotten) agent.known.erase(std::lower_bound(agent.known.begin(), agent.known.end(), *forgotten));
  if (discovered) agent.insert(*discovered);
}

/// Realized utility after d_t is implemented; agents outside the group get 0.
inline double realized_utility(const Agent& agent, const Landscape& ls, const Solution& implemented,
                               std::span<const AgentId> members) {
  if (std::find(members.begin(), members.end(), agent.id) == members.end()) return 0.0;
  const int len = ls.subtask_length();
  return estimate_utility(ls, agent.expertise, implemented.segment(agent.expertise * len, len), implemented);
}

}  // namespace nkgroups
