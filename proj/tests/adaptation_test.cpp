#include <gtest/gtest.h>

#include <algorithm>

#include "nkgroups/adaptation.hpp"
#include "oracles.hpp"

using namespace nkgroups;

TEST(Schedule, AdaptsAtFirstPeriodThenEveryGap) {
  const auto ten = Schedule::every(10);
  for (int t = 1; t <= 100; ++t) EXPECT_EQ(should_adapt(ten, t), t % 10 == 1) << t;
  for (int t = 1; t <= 50; ++t) EXPECT_TRUE(should_adapt(Schedule::every(1), t));
  EXPECT_TRUE(should_adapt(Schedule::never(), 1));
  for (int t = 2; t <= 100; ++t) EXPECT_FALSE(should_adapt(Schedule::never(), t));
  EXPECT_THROW(should_adapt(ten, 0), std::invalid_argument);
}

TEST(Schedule, ParsesAndPrints) {
  EXPECT_EQ(Schedule::parse("never"), Schedule::never());
  EXPECT_EQ(Schedule::parse("10"), Schedule::every(10));
  EXPECT_EQ(Schedule::parse("10").to_string(), "10");
  EXPECT_EQ(Schedule::never().to_string(), "never");
  for (const char* bad : {"", "0", "-1", "1.5", "sometimes"}) EXPECT_THROW(Schedule::parse(bad), std::invalid_argument) << bad;
  EXPECT_LT(Schedule::never(), Schedule::every(1));
  EXPECT_LT(Schedule::every(1), Schedule::every(10));
}

TEST(Signals, EqualBestKnownUtility) {
  const auto ls = build_landscape(build_matrix(Pattern::Dependent, 12, 3), 44);
  auto pop = init_population(30, 3, 4, 8);
  for (std::size_t i = 0; i < pop.agents.size(); ++i) pop.agents[i].insert(static_cast<SubtaskSolution>((i * 7) % 16));
  const std::uint32_t prev = 0xA5C;
  for (int m = 0; m < 3; ++m) {
    const auto signals = collect_signals(pop, ls, m, Solution(prev, 12));
    ASSERT_EQ(signals.size(), pop.per_subtask[static_cast<std::size_t>(m)].size());
    for (const Signal& s : signals) {
      double expected = -1.0;
      for (SubtaskSolution c : pop.agents[static_cast<std::size_t>(s.agent)].known)
        expected = std::max(expected, oracle::utility(ls, m, c, prev));
      EXPECT_NEAR(s.value, expected, 1e-12);
    }
  }
}

TEST(Selection, HighestSignalWins) {
  EXPECT_EQ(select_member({{3, 0.4}, {5, 0.7}, {9, 0.6}}, std::nullopt), 5);
  EXPECT_EQ(select_member({{3, 0.4}, {5, 0.7}, {9, 0.6}}, 3), 5);
}

TEST(Selection, TiesKeepIncumbentThenLowestId) {
  EXPECT_EQ(select_member({{3, 0.7}, {5, 0.7}, {9, 0.7}}, 9), 9);
  EXPECT_EQ(select_member({{9, 0.7}, {5, 0.7}, {3, 0.7}}, std::nullopt), 3);
  EXPECT_EQ(select_member({{9, 0.7}, {5, 0.7}, {3, 0.1}}, 3), 5);
  EXPECT_THROW(select_member({}, std::nullopt), std::logic_error);
}

TEST(Selection, InvariantToScalingTheLandscape) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ls = build_landscape(build_matrix(Pattern::Random, 12, 5, seed), seed);
    auto tables = ls.tables();
    for (auto& row : tables)
      for (double& v : row) v *= 0.37;
    const auto scaled = Landscape::from_tables(ls.matrix(), tables);
    auto pop = init_population(30, 3, 4, seed + 100);
    for (std::size_t i = 0; i < pop.agents.size(); ++i)
      for (SubtaskSolution c = 0; c < 16; c += 5) pop.agents[i].insert((c + static_cast<SubtaskSolution>(i)) % 16);
    const GroupState start{{}, Solution(static_cast<std::uint32_t>(seed * 331 % 4096), 12)};
    EXPECT_EQ(adapt_group(pop, ls, start).members, adapt_group(pop, scaled, start).members);
  }
}

TEST(Selection, AdaptGroupPicksOneExpertPerSubtask) {
  const auto ls = build_landscape(build_matrix(Pattern::Block, 12, 3), 2);
  const auto pop = init_population(30, 3, 4, 5);
  const GroupState g = adapt_group(pop, ls, GroupState{{}, Solution(0, 12)});
  ASSERT_EQ(g.members.size(), 3u);
  for (int m = 0; m < 3; ++m) EXPECT_EQ(pop.agents[static_cast<std::size_t>(g.members[static_cast<std::size_t>(m)])].expertise, m);
  // re-running with the winners as incumbents is a fixed point
  EXPECT_EQ(adapt_group(pop, ls, g).members, g.members);
}
