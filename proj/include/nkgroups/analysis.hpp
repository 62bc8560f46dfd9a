#pragma once

// Aggregation of run records into factor cells, partial dependence by
// exact marginalization over a saturated grid, figure tables and a paired
// bootstrap for contrasts between cell groups.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "nkgroups/adaptation.hpp"
#include "nkgroups/engine.hpp"
#include "nkgroups/landscape.hpp"
#include "nkgroups/rng.hpp"

namespace nkgroups {

enum class Factor { K, Pattern, Tau, LearnProb };

inline constexpr std::array<Factor, 4> kAllFactors = {Factor::K, Factor::Pattern, Factor::Tau, Factor::LearnProb};

inline std::string_view to_string(Factor f) {
  switch (f) {
    case Factor::K: return "k";
    case Factor::Pattern: return "pattern";
    case Factor::Tau: return "tau";
    case Factor::LearnProb: return "learn_prob";
  }
  return "?";
}

inline Factor parse_factor(std::string_view name) {
  for (Factor f : kAllFactors)
    if (to_string(f) == name) return f;
  throw std::invalid_argument("unknown factor '" + std::string(name) + "' (expected k, pattern, tau or learn_prob)");
}

/// One cell of the factorial grid.
struct FactorLevels {
  int k = 0;
  Pattern pattern = Pattern::Block;
  Schedule tau = Schedule::never();
  double learn_prob = 0.0;

  static FactorLevels of(const ScenarioConfig& c) { return {c.k, c.pattern, c.tau, c.learn_prob}; }

  friend std::strong_ordering operator<=>(const FactorLevels& a, const FactorLevels& b) {
    if (auto c = a.k <=> b.k; c != 0) return c;
    if (auto c = a.pattern <=> b.pattern; c != 0) return c;
    if (auto c = a.tau <=> b.tau; c != 0) return c;
    if (a.learn_prob < b.learn_prob) return std::strong_ordering::less;
    if (b.learn_prob < a.learn_prob) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const FactorLevels& a, const FactorLevels& b) { return (a <=> b) == 0; }

  std::string text(Factor f) const {
    switch (f) {
      case Factor::K: return std::to_string(k);
      case Factor::Pattern: return std::string(to_string(pattern));
      case Factor::Tau: return tau.to_string();
      case Factor::LearnProb: return format_probability(learn_prob);
    }
    return {};
  }
};

namespace detail {

/// Copies the listed factors of `from` into a default cell, so cells that
/// agree on those factors compare equal.
inline FactorLevels project(const FactorLevels& from, std::span<const Factor> factors) {
  FactorLevels out;
  for (Factor f : factors) {
    switch (f) {
      case Factor::K: out.k = from.k; break;
      case Factor::Pattern: out.pattern = from.pattern; break;
      case Factor::Tau: out.tau = from.tau; break;
      case Factor::LearnProb: out.learn_prob = from.learn_prob; break;
    }
  }
  return out;
}

inline std::vector<Factor> complement(std::span<const Factor> scope) {
  std::vector<Factor> out;
  for (Factor f : kAllFactors)
    if (std::find(scope.begin(), scope.end(), f) == scope.end()) out.push_back(f);
  return out;
}

inline std::string describe(const FactorLevels& l) { return levels_key(l.k, l.pattern, l.tau, l.learn_prob); }

}  // namespace detail

struct CellSummary {
  FactorLevels levels;
  std::uint64_t scenario_id = 0;
  double mean_normalized = 0.0;
  /// Standard error of the mean of per-replication means.
  double std_error = 0.0;
  std::size_t n_obs = 0;
  /// Mean normalized performance of each replication, in replication order.
  std::vector<double> replication_means;
};

/// Streaming aggregation; feed records in canonical order for bit-stable sums.
class Summarizer {
 public:
  void add(const FactorLevels& levels, std::uint64_t scenario_id, std::span<const RunRecord> records) {
    Cell& cell = cells_[levels];
    cell.id = scenario_id;
    for (const RunRecord& r : records) {
      auto& rep = cell.replications[r.replication];
      rep.first += r.normalized;
      ++rep.second;
      cell.sum += r.normalized;
      ++cell.n;
    }
  }

  bool empty() const { return cells_.empty(); }

  /// Cells in ascending level order.
  std::vector<CellSummary> finish() const {
    if (cells_.empty()) throw std::invalid_argument("no records to summarize");
    std::vector<CellSummary> out;
    out.reserve(cells_.size());
    for (const auto& [levels, cell] : cells_) {
      CellSummary s{levels, cell.id, cell.sum / static_cast<double>(cell.n), 0.0, cell.n, {}};
      for (const auto& [rep, acc] : cell.replications) s.replication_means.push_back(acc.first / static_cast<double>(acc.second));
      const auto reps = s.replication_means.size();
      if (reps > 1) {
        double mean = 0.0;
        for (double m : s.replication_means) mean += m;
        mean /= static_cast<double>(reps);
        double ss = 0.0;
        for (double m : s.replication_means) ss += (m - mean) * (m - mean);
        s.std_error = std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));
      }
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  struct Cell {
    std::uint64_t id = 0;
    std::map<int, std::pair<double, std::size_t>> replications;
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<FactorLevels, Cell> cells_;
};

struct LabeledRecord {
  FactorLevels levels;
  RunRecord record;
};

inline std::vector<CellSummary> summarize(std::span<const LabeledRecord> records) {
  Summarizer s;
  for (const LabeledRecord& r : records) s.add(r.levels, r.record.scenario_id, std::span(&r.record, 1));
  return s.finish();
}

/// Raised when a marginal mean would silently average an unbalanced grid.
class MissingCellsError : public std::invalid_argument {
 public:
  MissingCellsError(const std::string& what, std::vector<FactorLevels> missing)
      : std::invalid_argument(what), missing_(std::move(missing)) {}
  const std::vector<FactorLevels>& missing() const { return missing_; }

 private:
  std::vector<FactorLevels> missing_;
};

struct PdRow {
  /// Only the scope factors are meaningful.
  FactorLevels levels;
  double value = 0.0;
  std::size_t cells = 0;
};

struct PartialDependenceTable {
  std::vector<Factor> scope;
  std::vector<PdRow> rows;

  /// Value at the row whose scope levels match `levels`.
  double at(const FactorLevels& levels) const {
    const FactorLevels key = detail::project(levels, scope);
    for (const PdRow& r : rows)
      if (r.levels == key) return r.value;
    throw std::out_of_range("no partial dependence row for " + detail::describe(levels));
  }
};

using CellFilter = std::function<bool(const FactorLevels&)>;

/// Unweighted mean of cell means over every complementary cell, for each
/// combination of the `keys` factors among cells passing `filter`. Rows
/// are ordered by the keys in the order given.
inline PartialDependenceTable marginal_table(std::span<const CellSummary> cells, std::vector<Factor> keys,
                                             const CellFilter& filter = {}) {
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = i + 1; j < keys.size(); ++j)
      if (keys[i] == keys[j]) throw std::invalid_argument("factor listed twice in scope");
  const std::vector<Factor> comp = detail::complement(keys);

  std::map<FactorLevels, const CellSummary*> by_levels;
  std::vector<FactorLevels> scope_levels;
  std::vector<FactorLevels> comp_levels;
  for (const CellSummary& c : cells) {
    if (filter && !filter(c.levels)) continue;
    if (!by_levels.emplace(c.levels, &c).second)
      throw std::invalid_argument("duplicate cell " + detail::describe(c.levels));
    scope_levels.push_back(detail::project(c.levels, keys));
    comp_levels.push_back(detail::project(c.levels, comp));
  }
  if (by_levels.empty()) throw std::invalid_argument("no cells match the requested table");
  for (auto* v : {&scope_levels, &comp_levels}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }

  auto merge = [&](const FactorLevels& s, const FactorLevels& c) {
    FactorLevels full = c;
    for (Factor f : keys) {
      switch (f) {
        case Factor::K: full.k = s.k; break;
        case Factor::Pattern: full.pattern = s.pattern; break;
        case Factor::Tau: full.tau = s.tau; break;
        case Factor::LearnProb: full.learn_prob = s.learn_prob; break;
      }
    }
    return full;
  };

  PartialDependenceTable table{keys, {}};
  std::vector<FactorLevels> missing;
  for (const FactorLevels& s : scope_levels) {
    double sum = 0.0;
    for (const FactorLevels& c : comp_levels) {
      const auto it = by_levels.find(merge(s, c));
      if (it == by_levels.end()) missing.push_back(merge(s, c));
      else sum += it->second->mean_normalized;
    }
    table.rows.push_back({s, sum / static_cast<double>(comp_levels.size()), comp_levels.size()});
  }
  if (!missing.empty()) {
    std::string msg = "incomplete complementary grid: " + std::to_string(missing.size()) + " missing cell(s), e.g. " +
                      detail::describe(missing.front());
    throw MissingCellsError(msg, std::move(missing));
  }

  std::sort(table.rows.begin(), table.rows.end(), [&](const PdRow& a, const PdRow& b) {
    for (Factor f : keys) {
      const FactorLevels pa = detail::project(a.levels, std::span(&f, 1));
      const FactorLevels pb = detail::project(b.levels, std::span(&f, 1));
      if (pa != pb) return pa < pb;
    }
    return false;
  });
  return table;
}

/// Partial dependence on one or two factors.
inline PartialDependenceTable partial_dependence(std::span<const CellSummary> cells, std::vector<Factor> scope) {
  if (scope.empty() || scope.size() > 2) throw std::invalid_argument("partial dependence scope must hold one or two factors");
  return marginal_table(cells, std::move(scope));
}

struct FigureTable {
  std::string name;
  PartialDependenceTable table;
};

enum class FigureKind { Overview, Learning, Structure, Surfaces };

inline std::string_view to_string(FigureKind k) {
  switch (k) {
    case FigureKind::Overview: return "overview";
    case FigureKind::Learning: return "learning";
    case FigureKind::Structure: return "structure";
    case FigureKind::Surfaces: return "surfaces";
  }
  return "?";
}

inline FigureKind parse_figure_kind(std::string_view s) {
  for (FigureKind k : {FigureKind::Overview, FigureKind::Learning, FigureKind::Structure, FigureKind::Surfaces})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown figure table '" + std::string(s) +
                              "' (expected overview, learning, structure or surfaces)");
}

/// Tables for one figure kind:
///  - overview: pd_tau, pd_learn_prob, pd_k, pd_pattern;
///  - learning: block cells only, keyed (k, tau, learn_prob);
///  - structure: learn_prob = 0 cells only, keyed (k, tau, pattern);
///  - surfaces: every cell, keyed (k, tau, pattern, learn_prob).
inline std::vector<FigureTable> figure_tables(std::span<const CellSummary> cells, FigureKind kind) {
  auto has = [&](const CellFilter& f) { return std::any_of(cells.begin(), cells.end(), [&](const CellSummary& c) { return f(c.levels); }); };
  switch (kind) {
    case FigureKind::Overview: {
      std::vector<FigureTable> out;
      for (Factor f : {Factor::Tau, Factor::LearnProb, Factor::K, Factor::Pattern})
        out.push_back({"pd_" + std::string(to_string(f)), partial_dependence(cells, {f})});
      return out;
    }
    case FigureKind::Learning: {
      const CellFilter block = [](const FactorLevels& l) { return l.pattern == Pattern::Block; };
      if (!has(block)) throw std::invalid_argument("learning table requires pattern=block cells");
      return {{"pd_learning", marginal_table(cells, {Factor::K, Factor::Tau, Factor::LearnProb}, block)}};
    }
    case FigureKind::Structure: {
      const CellFilter no_learning = [](const FactorLevels& l) { return l.learn_prob == 0.0; };
      if (!has(no_learning)) throw std::invalid_argument("structure table requires learn_prob=0 cells");
      return {{"pd_structure", marginal_table(cells, {Factor::K, Factor::Tau, Factor::Pattern}, no_learning)}};
    }
    case FigureKind::Surfaces:
      return {{"pd_surfaces", marginal_table(cells, {Factor::K, Factor::Tau, Factor::Pattern, Factor::LearnProb})}};
  }
  return {};
}

inline std::vector<FigureTable> figure_tables(std::span<const CellSummary> cells) {
  std::vector<FigureTable> out;
  for (FigureKind k : {FigureKind::Overview, FigureKind::Learning, FigureKind::Structure, FigureKind::Surfaces}) {
    auto part = figure_tables(cells, k);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contrasts and the paired bootstrap

/// Linear combination of cell means: sum of weight * mean over cells.
struct Contrast {
  std::vector<std::pair<std::size_t, double>> weights;

  double estimate(std::span<const CellSummary> cells) const {
    double v = 0.0;
    for (const auto& [i, w] : weights) v += w * cells[i].mean_normalized;
    return v;
  }
};

/// mean over cells in `lhs` minus mean over cells in `rhs`.
inline Contrast contrast_between(std::span<const CellSummary> cells, const CellFilter& lhs, const CellFilter& rhs) {
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (lhs(cells[i].levels)) a.push_back(i);
    if (rhs(cells[i].levels)) b.push_back(i);
  }
  if (a.empty() || b.empty()) throw std::invalid_argument("contrast side selects no cells");
  Contrast c;
  for (std::size_t i : a) c.weights.push_back({i, 1.0 / static_cast<double>(a.size())});
  for (std::size_t i : b) c.weights.push_back({i, -1.0 / static_cast<double>(b.size())});
  return c;
}

struct Interval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  bool excludes_zero() const { return lower > 0.0 || upper < 0.0; }
};

/// Percentile bootstrap over replications. One resample of replication
/// indices is shared by every cell, which keeps the pairing that common
/// seeds induce between scenarios.
inline Interval bootstrap_interval(std::span<const CellSummary> cells, const Contrast& contrast, int resamples = 2000,
                                   double confidence = 0.95, std::uint64_t seed = 12345) {
  if (contrast.weights.empty()) throw std::invalid_argument("empty contrast");
  if (resamples < 1) throw std::invalid_argument("need at least one bootstrap resample");
  const std::size_t reps = cells[contrast.weights.front().first].replication_means.size();
  for (const auto& [i, w] : contrast.weights)
    if (cells[i].replication_means.size() != reps)
      throw std::invalid_argument("bootstrap needs equal replication counts in every cell");

  Rng rng = make_rng(seed);
  std::vector<std::size_t> draw(reps);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    for (auto& d : draw) d = uniform_below(rng, reps);
    double v = 0.0;
    for (const auto& [i, w] : contrast.weights) {
      double m = 0.0;
      for (std::size_t d : draw) m += cells[i].replication_means[d];
      v += w * m / static_cast<double>(reps);
    }
    stats.push_back(v);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - confidence) / 2.0;
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  return {contrast.estimate(cells), quantile(alpha), quantile(1.0 - alpha)};
}

}  // namespace nkgroups
