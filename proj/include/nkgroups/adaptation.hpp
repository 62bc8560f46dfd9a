#pragma once

// Signal-based group formation and the adaptation schedule.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nkgroups/landscape.hpp"
#include "nkgroups/population.hpp"

namespace nkgroups {

/// Periods between adaptation rounds. The group always forms at t = 1;
/// after that it re-forms when (t - 1) % gap == 0, or never.
class Schedule {
 public:
  static constexpr Schedule never() { return Schedule(0); }
  static constexpr Schedule every(int gap) {
    if (gap < 1) throw std::invalid_argument("adaptation gap must be a positive integer");
    return Schedule(gap);
  }

  static Schedule parse(std::string_view text) {
    if (text == "never") return never();
    int gap = 0;
    for (char c : text) {
      if (c < '0' || c > '9' || gap > 100000000)
        throw std::invalid_argument("tau must be 'never' or a positive integer, got '" + std::string(text) + "'");
      gap = gap * 10 + (c - '0');
    }
    if (text.empty() || gap < 1)
      throw std::invalid_argument("tau must be 'never' or a positive integer, got '" + std::string(text) + "'");
    return every(gap);
  }

  bool is_never() const { return gap_ == 0; }
  int gap() const { return gap_; }

  std::string to_string() const { return is_never() ? "never" : std::to_string(gap_); }

  friend constexpr bool operator==(Schedule, Schedule) = default;
  /// never sorts first, then by gap.
  friend constexpr auto operator<=>(Schedule, Schedule) = default;

 private:
  constexpr explicit Schedule(int gap) : gap_(gap) {}
  int gap_ = 0;
};

inline bool should_adapt(Schedule schedule, int t) {
  if (t < 1) throw std::invalid_argument("periods start at t = 1");
  if (t == 1) return true;
  if (schedule.is_never()) return false;
  return (t - 1) % schedule.gap() == 0;
}

struct GroupState {
  /// members[m] works on subtask m. Empty before the first formation.
  std::vector<AgentId> members;
  /// The group strategy implemented in the previous period.
  Solution last_strategy;
};

struct Signal {
  AgentId agent = 0;
  double value = 0.0;
};

/// Every agent with expertise `subtask` honestly reports its best estimated
/// utility against the residual decisions of `residual`.
inline std::vector<Signal> collect_signals(const Population& pop, const Landscape& ls, int subtask,
                                           const Solution& residual) {
  if (subtask < 0 || subtask >= pop.subtasks) throw std::out_of_range("subtask index out of range");
  const auto& ids = pop.per_subtask[static_cast<std::size_t>(subtask)];
  if (ids.empty()) throw std::logic_error("no agent has expertise in subtask " + std::to_string(subtask));
  std::vector<Signal> out;
  out.reserve(ids.size());
  for (AgentId id : ids)
    out.push_back({id, best_known(pop.agents[static_cast<std::size_t>(id)], ls, residual).second});
  return out;
}

/// Highest signal wins; on an exact tie the incumbent stays, otherwise the
/// lowest id among the tied wins.
inline AgentId select_member(const std::vector<Signal>& signals, std::optional<AgentId> incumbent) {
  if (signals.empty()) throw std::logic_error("no signals to select from");
  const Signal* best = nullptr;
  for (const Signal& s : signals) {
    if (best == nullptr || s.value > best->value ||
        (s.value == best->value && (s.agent == incumbent || (best->agent != incumbent && s.agent < best->agent))))
      best = &s;
  }
  return best->agent;
}

inline GroupState adapt_group(const Population& pop, const Landscape& ls, const GroupState& previous) {
  GroupState next{std::vector<AgentId>(static_cast<std::size_t>(pop.subtasks)), previous.last_strategy};
  for (int m = 0; m < pop.subtasks; ++m) {
    std::optional<AgentId> incumbent;
    if (!previous.members.empty()) incumbent = previous.members[static_cast<std::size_t>(m)];
    next.members[static_cast<std::size_t>(m)] =
        select_member(collect_signals(pop, ls, m, previous.last_strategy), incumbent);
  }
  return next;
}

}  // namespace nkgroups
