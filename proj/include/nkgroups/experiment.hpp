#pragma once

// Experiment specification, grid expansion, config files and CSV/JSON output.
//
// Config files are flat `key = value` lines; list-valued keys take comma
// separated levels, and numeric lists also accept `start:step:stop`.
// `#` starts a comment. See configs/table1.conf for the full grid.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "nkgroups/adaptation.hpp"
#include "nkgroups/analysis.hpp"
#include "nkgroups/engine.hpp"
#include "nkgroups/landscape.hpp"

namespace nkgroups {

inline constexpr std::string_view kVersion = "0.1.0";

struct ExperimentSpec {
  std::vector<int> k_levels = {3, 5};
  std::vector<Pattern> patterns = {kAllPatterns.begin(), kAllPatterns.end()};
  std::vector<Schedule> taus = {Schedule::never(), Schedule::every(1), Schedule::every(10)};
  std::vector<double> learn_probs = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  int n = 12;
  int m_subtasks = 3;
  int p_agents = 30;
  int horizon = 100;
  int replications = 1500;
  std::uint64_t base_seed = 20210601;
  LearningScope learners = LearningScope::AllAgents;

  std::filesystem::path out_dir = "results";
  int parallelism = 1;
  bool emit_records = false;
  /// Empty: every figure table whose required levels are present.
  std::vector<FigureKind> figures;

  /// One scenario, five replications, ten periods.
  static ExperimentSpec smoke() {
    ExperimentSpec s;
    s.k_levels = {3};
    s.patterns = {Pattern::Block};
    s.taus = {Schedule::every(10)};
    s.learn_probs = {0.1};
    s.horizon = 10;
    s.replications = 5;
    return s;
  }

  std::size_t grid_size() const { return k_levels.size() * patterns.size() * taus.size() * learn_probs.size(); }
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

/// Snaps grid arithmetic such as 3 * 0.1 onto the nearest decimal literal.
inline double snap(double v) { return std::round(v * 1e9) / 1e9; }

inline std::vector<double> parse_real_levels(std::string_view text, std::string_view key) {
  std::vector<double> out;
  for (auto item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_number<double>(parts[0], key));
    } else if (parts.size() == 3) {
      const double lo = parse_number<double>(parts[0], key);
      const double step = parse_number<double>(parts[1], key);
      const double hi = parse_number<double>(parts[2], key);
      if (!(step > 0.0) || hi < lo) throw ConfigError("invalid range '" + std::string(item) + "' for " + std::string(key));
      const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
      for (int i = 0; i <= count; ++i) out.push_back(snap(lo + i * step));
    } else {
      throw ConfigError("invalid level '" + std::string(item) + "' for " + std::string(key));
    }
  }
  return out;
}

inline std::vector<int> parse_int_levels(std::string_view text, std::string_view key) {
  std::vector<int> out;
  for (double v : parse_real_levels(text, key)) {
    if (v != std::floor(v)) throw ConfigError(std::string(key) + " levels must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline bool parse_bool(std::string_view text, std::string_view key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

inline std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string hex_id(std::uint64_t id) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id));
  return buf;
}

}  // namespace detail

/// Applies `key = value` lines on top of `base`. Errors carry the line number.
inline ExperimentSpec parse_config(std::string_view text, ExperimentSpec spec = {}) {
  int line_no = 0;
  for (auto raw : detail::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    try {
      if (value.empty()) throw ConfigError("missing value for " + key);
      if (key == "k") spec.k_levels = detail::parse_int_levels(value, key);
      else if (key == "pattern") {
        spec.patterns.clear();
        for (auto p : detail::split(value, ',')) spec.patterns.push_back(parse_pattern(p));
      } else if (key == "tau") {
        spec.taus.clear();
        for (auto t : detail::split(value, ',')) spec.taus.push_back(Schedule::parse(t));
      } else if (key == "learn_prob") {
        spec.learn_probs = detail::parse_real_levels(value, key);
        for (double v : spec.learn_probs)
          if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("learn_prob levels must lie in [0,1]");
      }
      else if (key == "n") spec.n = detail::parse_number<int>(value, key);
      else if (key == "m") spec.m_subtasks = detail::parse_number<int>(value, key);
      else if (key == "p") spec.p_agents = detail::parse_number<int>(value, key);
      else if (key == "horizon") spec.horizon = detail::parse_number<int>(value, key);
      else if (key == "replications") spec.replications = detail::parse_number<int>(value, key);
      else if (key == "seed") spec.base_seed = detail::parse_number<std::uint64_t>(value, key);
      else if (key == "parallelism") spec.parallelism = detail::parse_number<int>(value, key);
      else if (key == "out") spec.out_dir = std::string(value);
      else if (key == "emit_records") spec.emit_records = detail::parse_bool(value, key);
      else if (key == "learners") {
        if (value == "all") spec.learners = LearningScope::AllAgents;
        else if (value == "members") spec.learners = LearningScope::MembersOnly;
        else throw ConfigError("learners must be 'all' or 'members'");
      } else if (key == "figures") {
        spec.figures.clear();
        for (auto f : detail::split(value, ',')) spec.figures.push_back(parse_figure_kind(f));
      } else throw ConfigError("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return spec;
}

inline ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec spec = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), std::move(spec));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// One config per factor combination, ordered k, pattern, tau, learn_prob
/// (outermost first) with levels in the order they were listed.
inline std::vector<ScenarioConfig> expand_grid(const ExperimentSpec& spec) {
  if (spec.k_levels.empty() || spec.patterns.empty() || spec.taus.empty() || spec.learn_probs.empty())
    throw ConfigError("every factor needs at least one level");
  if (spec.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  std::vector<ScenarioConfig> out;
  out.reserve(spec.grid_size());
  for (int k : spec.k_levels)
    for (Pattern p : spec.patterns)
      for (Schedule tau : spec.taus)
        for (double lp : spec.learn_probs) {
          ScenarioConfig c{spec.n, spec.m_subtasks, spec.p_agents, k, p, tau, lp,
                           spec.horizon, spec.replications, spec.base_seed, spec.learners};
          try {
            c.validate();
            build_matrix(p, c.n, k, 0, c.m_subtasks);
          } catch (const std::invalid_argument& e) {
            throw ConfigError("scenario " + levels_key(k, p, tau, lp) + ": " + e.what());
          }
          out.push_back(c);
        }
  std::vector<FactorLevels> seen;
  for (const auto& c : out) seen.push_back(FactorLevels::of(c));
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) throw ConfigError("factor levels contain duplicates");
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string records_header(int m_subtasks) {
  std::string h = "scenario_id,k,pattern,tau,learn_prob,replication,t,raw,normalized,adapted";
  for (int m = 1; m <= m_subtasks; ++m) h += ",m" + std::to_string(m);
  return h;
}

inline void write_record_rows(std::ostream& out, const ScenarioConfig& c, std::span<const RunRecord> records) {
  const std::string prefix = detail::hex_id(scenario_id(c)) + "," + std::to_string(c.k) + "," +
                             std::string(to_string(c.pattern)) + "," + c.tau.to_string() + "," +
                             format_probability(c.learn_prob) + ",";
  for (const RunRecord& r : records) {
    out << prefix << r.replication << ',' << r.t << ',' << detail::format_real(r.raw) << ','
        << detail::format_real(r.normalized) << ',' << (r.adapted ? 1 : 0);
    for (AgentId a : r.members) out << ',' << a;
    out << '\n';
  }
}

inline constexpr std::string_view kCellsHeader =
    "scenario_id,k,pattern,tau,learn_prob,mean_normalized,stderr,n_obs,n_replications";

inline void write_cells(std::ostream& out, std::span<const CellSummary> cells) {
  out << kCellsHeader << '\n';
  for (const CellSummary& c : cells) {
    out << detail::hex_id(c.scenario_id) << ',' << c.levels.k << ',' << to_string(c.levels.pattern) << ','
        << c.levels.tau.to_string() << ',' << format_probability(c.levels.learn_prob) << ','
        << detail::format_real(c.mean_normalized) << ',' << detail::format_real(c.std_error) << ',' << c.n_obs << ','
        << c.replication_means.size() << '\n';
  }
}

/// Key columns in scope order, then `pd` and `n_cells`.
inline void write_pd_table(std::ostream& out, const PartialDependenceTable& t) {
  for (Factor f : t.scope) out << to_string(f) << ',';
  out << "pd,n_cells\n";
  for (const PdRow& r : t.rows) {
    for (Factor f : t.scope) out << r.levels.text(f) << ',';
    out << detail::format_real(r.value) << ',' << r.cells << '\n';
  }
}

// ---------------------------------------------------------------------------
// Orchestration

struct ExperimentResult {
  std::vector<CellSummary> cells;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> skipped_tables;
  double wall_seconds = 0.0;
};

namespace detail {

/// Files are written under a temporary name and renamed only once the whole
/// experiment succeeds; on failure every temporary is removed.
class StagedFiles {
 public:
  explicit StagedFiles(std::filesystem::path dir) : dir_(std::move(dir)) {}
  StagedFiles(const StagedFiles&) = delete;
  StagedFiles& operator=(const StagedFiles&) = delete;
  ~StagedFiles() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : staged_) std::filesystem::remove(tmp(f), ec);
  }

  std::ofstream open(const std::string& name) {
    staged_.push_back(dir_ / name);
    std::ofstream out(tmp(staged_.back()), std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp(staged_.back()).string());
    return out;
  }

  std::vector<std::filesystem::path> commit() {
    for (const auto& f : staged_) std::filesystem::rename(tmp(f), f);
    committed_ = true;
    return staged_;
  }

 private:
  static std::filesystem::path tmp(const std::filesystem::path& p) { return p.string() + ".tmp"; }
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> staged_;
  bool committed_ = false;
};

inline void check_stream(const std::ofstream& out, const std::string& name) {
  if (!out) throw std::runtime_error("I/O error while writing " + name);
}

}  // namespace detail

inline nlohmann::json spec_to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["k"] = s.k_levels;
  for (Pattern p : s.patterns) j["pattern"].push_back(std::string(to_string(p)));
  for (Schedule t : s.taus) j["tau"].push_back(t.to_string());
  j["learn_prob"] = s.learn_probs;
  j["n"] = s.n;
  j["m"] = s.m_subtasks;
  j["p"] = s.p_agents;
  j["horizon"] = s.horizon;
  j["replications"] = s.replications;
  j["seed"] = s.base_seed;
  j["learners"] = s.learners == LearningScope::AllAgents ? "all" : "members";
  j["parallelism"] = s.parallelism;
  j["emit_records"] = s.emit_records;
  return j;
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const ScenarioConfig&)>;

/// Runs the whole grid and writes records.csv (optional), cells.csv, the
/// pd_*.csv figure tables and manifest.json into spec.out_dir.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto scenarios = expand_grid(spec);
  std::filesystem::create_directories(spec.out_dir);

  detail::StagedFiles staged(spec.out_dir);
  std::ofstream records;
  if (spec.emit_records) {
    records = staged.open("records.csv");
    records << records_header(spec.m_subtasks) << '\n';
  }

  Summarizer summarizer;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const ScenarioConfig& c = scenarios[i];
    const FactorLevels levels = FactorLevels::of(c);
    const std::uint64_t id = scenario_id(c);
    run_scenario(c, spec.parallelism, [&](std::span<const RunRecord> recs) {
      summarizer.add(levels, id, recs);
      if (spec.emit_records) {
        write_record_rows(records, c, recs);
        detail::check_stream(records, "records.csv");
      }
    });
    if (progress) progress(i + 1, scenarios.size(), c);
  }
  if (spec.emit_records) {
    records.close();
    detail::check_stream(records, "records.csv");
  }

  ExperimentResult result;
  result.cells = summarizer.finish();
  {
    auto out = staged.open("cells.csv");
    write_cells(out, result.cells);
    out.close();
    detail::check_stream(out, "cells.csv");
  }

  std::vector<FigureKind> kinds = spec.figures;
  const bool explicit_request = !kinds.empty();
  if (!explicit_request) kinds = {FigureKind::Overview, FigureKind::Learning, FigureKind::Structure, FigureKind::Surfaces};
  for (FigureKind kind : kinds) {
    std::vector<FigureTable> tables;
    try {
      tables = figure_tables(result.cells, kind);
    } catch (const std::invalid_argument& e) {
      if (explicit_request) throw;
      result.skipped_tables.push_back(std::string(to_string(kind)) + ": " + e.what());
      continue;
    }
    for (const FigureTable& t : tables) {
      auto out = staged.open(t.name + ".csv");
      write_pd_table(out, t.table);
      out.close();
      detail::check_stream(out, t.name + ".csv");
    }
  }

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json manifest;
  manifest["spec"] = spec_to_json(spec);
  manifest["seed"] = spec.base_seed;
  manifest["version"] = std::string(kVersion);
  manifest["scenarios"] = scenarios.size();
  manifest["wall_seconds"] = result.wall_seconds;
  manifest["skipped_tables"] = result.skipped_tables;
  {
    auto out = staged.open("manifest.json");
    out << manifest.dump(2) << '\n';
    out.close();
    detail::check_stream(out, "manifest.json");
  }
  result.files = staged.commit();
  return result;
}

}  // namespace nkgroups
