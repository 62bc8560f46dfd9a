#pragma once

// NK task environment: interdependence matrices, contribution tables,
// evaluation and exhaustive search for the global optimum.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nkgroups/rng.hpp"

namespace nkgroups {

/// Exhaustive enumeration is required for normalization, so n is capped.
inline constexpr int kEnumerationCap = 24;

enum class Pattern { Block, Centralised, Dependent, Hierarchical, Local, Random };

inline constexpr std::array<Pattern, 6> kAllPatterns = {
    Pattern::Block, Pattern::Centralised, Pattern::Dependent,
    Pattern::Hierarchical, Pattern::Local, Pattern::Random};

inline std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Block: return "block";
    case Pattern::Centralised: return "centralised";
    case Pattern::Dependent: return "dependent";
    case Pattern::Hierarchical: return "hierarchical";
    case Pattern::Local: return "local";
    case Pattern::Random: return "random";
  }
  return "?";
}

inline Pattern parse_pattern(std::string_view name) {
  for (Pattern p : kAllPatterns)
    if (to_string(p) == name) return p;
  throw std::invalid_argument("unknown interdependence pattern '" + std::string(name) +
                              "' (expected block, centralised, dependent, hierarchical, local or random)");
}

/// Decision vector of length n. Decision i is stored in bit i of `bits()`;
/// "lowest bitstring value" everywhere means the smallest `bits()`.
class Solution {
 public:
  Solution() = default;
  Solution(std::uint32_t bits, int n) : bits_(bits), n_(n) {
    if (n < 1 || n > kEnumerationCap) throw std::invalid_argument("solution length out of range");
    if (n < 32 && (bits >> n) != 0) throw std::invalid_argument("solution has bits beyond its length");
  }

  /// Parses "0110..." with character i giving decision i.
  static Solution from_string(std::string_view s) {
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') bits |= std::uint32_t{1} << i;
      else if (s[i] != '0') throw std::invalid_argument("solution string must be binary");
    }
    return Solution(bits, static_cast<int>(s.size()));
  }

  std::uint32_t bits() const { return bits_; }
  int size() const { return n_; }
  bool operator[](int i) const { return (bits_ >> i) & 1u; }

  std::uint32_t segment(int start, int len) const {
    return (bits_ >> start) & ((std::uint32_t{1} << len) - 1);
  }
  Solution with_segment(int start, int len, std::uint32_t value) const {
    const std::uint32_t mask = ((std::uint32_t{1} << len) - 1) << start;
    return Solution((bits_ & ~mask) | ((value << start) & mask), n_);
  }
  Solution flipped(int i) const { return Solution(bits_ ^ (std::uint32_t{1} << i), n_); }

  std::string to_string() const {
    std::string s(static_cast<std::size_t>(n_), '0');
    for (int i = 0; i < n_; ++i)
      if ((*this)[i]) s[static_cast<std::size_t>(i)] = '1';
    return s;
  }

  friend bool operator==(const Solution&, const Solution&) = default;

 private:
  std::uint32_t bits_ = 0;
  int n_ = 0;
};

struct InterdependenceMatrix {
  int n = 0;
  int k = 0;
  Pattern pattern = Pattern::Block;
  /// rows[i] lists the k decisions, other than i, that contribution i depends on.
  std::vector<std::vector<int>> rows;

  bool depends(int row, int col) const {
    if (row == col) return true;
    const auto& r = rows[static_cast<std::size_t>(row)];
    return std::find(r.begin(), r.end(), col) != r.end();
  }

  /// N x N grid, 'x' where contribution (row) depends on decision (column).
  std::string to_grid() const {
    std::string out;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) out += depends(r, c) ? 'x' : '-';
      out += '\n';
    }
    return out;
  }

  void validate() const {
    if (n < 1 || k < 0 || k >= n) throw std::invalid_argument("matrix requires 0 <= k < n");
    if (static_cast<int>(rows.size()) != n) throw std::invalid_argument("matrix must have n rows");
    for (int r = 0; r < n; ++r) {
      auto row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != k)
        throw std::invalid_argument("matrix row " + std::to_string(r) + " does not have k entries");
      std::sort(row.begin(), row.end());
      if (std::adjacent_find(row.begin(), row.end()) != row.end())
        throw std::invalid_argument("matrix row " + std::to_string(r) + " repeats an index");
      for (int c : row)
        if (c < 0 || c >= n || c == r)
          throw std::invalid_argument("matrix row " + std::to_string(r) + " has an invalid index");
    }
  }
};

namespace detail {

inline std::vector<int> range_without(int lo, int hi, int self) {
  std::vector<int> out;
  for (int i = lo; i < hi; ++i)
    if (i != self) out.push_back(i);
  return out;
}

[[noreturn]] inline void undefined_pattern(Pattern p, int n, int k, const char* why) {
  throw std::invalid_argument("pattern '" + std::string(to_string(p)) + "' is undefined for n=" +
                              std::to_string(n) + ", k=" + std::to_string(k) + ": " + why);
}

}  // namespace detail

/// Builds the interdependence matrix for a pattern. Non-random patterns
/// ignore `seed`. Dependent and hierarchical are defined for the
/// three-agent n = 12 task with k in {3, 5}; block needs `subtasks` to
/// place its squares when k+1 exceeds the subtask length.
inline InterdependenceMatrix build_matrix(Pattern pattern, int n, int k, std::uint64_t seed = 0, int subtasks = 3) {
  if (n < 1 || n > kEnumerationCap) throw std::invalid_argument("n must lie in [1, 24]");
  if (k < 0 || k >= n) throw std::invalid_argument("k must satisfy 0 <= k < n");

  InterdependenceMatrix m{n, k, pattern, std::vector<std::vector<int>>(static_cast<std::size_t>(n))};
  auto row = [&](int r) -> std::vector<int>& { return m.rows[static_cast<std::size_t>(r)]; };

  switch (pattern) {
    case Pattern::Block: {
      if (subtasks < 1 || n % subtasks != 0) detail::undefined_pattern(pattern, n, k, "subtasks must divide n");
      const int len = n / subtasks;
      if (k + 1 <= len) {
        // squares of side k+1 along the diagonal
        const int size = k + 1;
        if (n % size != 0) detail::undefined_pattern(pattern, n, k, "block size k+1 must divide n");
        for (int r = 0; r < n; ++r) {
          const int start = (r / size) * size;
          row(r) = detail::range_without(start, start + size, r);
        }
      } else {
        // one square per subtask; the k+1-len extra links reach alternately
        // into the tail of the previous and the head of the next subtask
        const int extra = k + 1 - len;
        if (extra > n - len) detail::undefined_pattern(pattern, n, k, "not enough decisions outside a subtask");
        for (int r = 0; r < n; ++r) {
          const int start = (r / len) * len;
          row(r) = detail::range_without(start, start + len, r);
          for (int j = 0; j < extra; ++j)
            row(r).push_back(j % 2 == 0 ? ((start - 1 - j / 2) % n + n) % n : (start + len + j / 2) % n);
        }
      }
      break;
    }
    case Pattern::Centralised: {
      for (int r = 0; r < n; ++r)
        row(r) = r <= k ? detail::range_without(0, k + 1, r) : detail::range_without(0, k, -1);
      break;
    }
    case Pattern::Dependent: {
      if (n != 12 || (k != 3 && k != 5)) detail::undefined_pattern(pattern, n, k, "requires n=12, k in {3,5}");
      for (int r = 0; r < 8; ++r) {
        const int start = (r / 4) * 4;
        row(r) = detail::range_without(start, start + 4, r);
        if (k == 5) {
          // two indices from the other upstream block, wrapping inside it
          const int other = 4 - start;
          row(r).push_back(other + (r % 4));
          row(r).push_back(other + ((r + 1) % 4));
        }
      }
      for (int r = 8; r < 12; ++r) {
        if (k == 3) row(r) = r < 10 ? std::vector<int>{0, 1, 4} : std::vector<int>{2, 4, 5};
        else row(r) = {0, 1, 2, 4, 5};
      }
      break;
    }
    case Pattern::Hierarchical: {
      if (n != 12 || (k != 3 && k != 5)) detail::undefined_pattern(pattern, n, k, "requires n=12, k in {3,5}");
      if (k == 3) {
        for (int r = 0; r < 4; ++r) row(r) = detail::range_without(0, 4, r);
        for (int r = 4; r < 12; ++r) row(r) = {1, 2, 3};
      } else {
        for (int r = 0; r < 8; ++r) {
          auto candidates = detail::range_without(0, 8, r);
          row(r).assign(candidates.begin(), candidates.begin() + 5);
        }
        for (int r = 8; r < 12; ++r) row(r) = {0, 1, 2, 4, 5};
      }
      break;
    }
    case Pattern::Local: {
      for (int r = 0; r < n; ++r)
        for (int j = 1; j <= k; ++j) row(r).push_back(((r - j) % n + n) % n);
      break;
    }
    case Pattern::Random: {
      Rng rng = make_rng(seed);
      for (int r = 0; r < n; ++r) {
        auto pool = detail::range_without(0, n, r);
        // partial Fisher-Yates: the first k slots are a uniform k-subset
        for (int j = 0; j < k; ++j) {
          const auto pick = static_cast<std::size_t>(j) +
                            static_cast<std::size_t>(uniform_below(rng, pool.size() - static_cast<std::size_t>(j)));
          std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
        }
        row(r).assign(pool.begin(), pool.begin() + k);
      }
      break;
    }
  }
  m.validate();
  return m;
}

/// One task instance: contribution tables over a fixed matrix, with the
/// global optimum cached. Immutable after construction.
class Landscape {
 public:
  /// tables[i] has 2^(k+1) entries. Entry index: bit 0 is decision i, bit
  /// j (1 <= j <= k) is decision rows[i][j-1].
  static Landscape from_tables(InterdependenceMatrix matrix, std::vector<std::vector<double>> tables,
                               int subtasks = 3) {
    matrix.validate();
    if (matrix.n > kEnumerationCap) throw std::invalid_argument("n exceeds enumeration cap");
    if (subtasks < 1 || matrix.n % subtasks != 0)
      throw std::invalid_argument("subtask count must divide n");
    if (static_cast<int>(tables.size()) != matrix.n)
      throw std::invalid_argument("need one contribution table per decision");
    const std::size_t width = std::size_t{1} << (matrix.k + 1);
    for (const auto& t : tables) {
      if (t.size() != width) throw std::invalid_argument("contribution table has wrong size");
      for (double c : t)
        if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("contribution outside [0,1]");
    }
    Landscape ls;
    ls.matrix_ = std::move(matrix);
    ls.tables_ = std::move(tables);
    ls.subtasks_ = subtasks;
    ls.find_global_optimum();
    return ls;
  }

  int n() const { return matrix_.n; }
  int k() const { return matrix_.k; }
  int subtasks() const { return subtasks_; }
  int subtask_length() const { return matrix_.n / subtasks_; }
  const InterdependenceMatrix& matrix() const { return matrix_; }
  const std::vector<std::vector<double>>& tables() const { return tables_; }
  double global_max() const { return global_max_; }
  Solution global_argmax() const { return Solution(global_argmax_, matrix_.n); }

  double contribution(int decision, std::uint32_t bits) const {
    const auto i = static_cast<std::size_t>(decision);
    std::uint32_t idx = (bits >> decision) & 1u;
    const auto& deps = matrix_.rows[i];
    for (std::size_t j = 0; j < deps.size(); ++j)
      idx |= ((bits >> deps[j]) & 1u) << (j + 1);
    return tables_[i][idx];
  }

  double performance(const Solution& s) const {
    check(s);
    return performance_bits(s.bits());
  }

  /// Mean of the contributions of the decisions belonging to `subtask`.
  double subtask_performance(const Solution& s, int subtask) const {
    check(s);
    if (subtask < 0 || subtask >= subtasks_) throw std::out_of_range("subtask index out of range");
    return subtask_performance_bits(s.bits(), subtask);
  }

  double performance_bits(std::uint32_t bits) const {
    double sum = 0.0;
    for (int i = 0; i < matrix_.n; ++i) sum += contribution(i, bits);
    return sum / matrix_.n;
  }

  double subtask_performance_bits(std::uint32_t bits, int subtask) const {
    const int len = subtask_length();
    double sum = 0.0;
    for (int i = subtask * len; i < (subtask + 1) * len; ++i) sum += contribution(i, bits);
    return sum / len;
  }

  /// Solutions strictly better than all n single-bit neighbours.
  std::size_t count_local_optima() const {
    const std::uint32_t total = std::uint32_t{1} << matrix_.n;
    std::vector<double> perf(total);
    for (std::uint32_t b = 0; b < total; ++b) perf[b] = performance_bits(b);
    std::size_t count = 0;
    for (std::uint32_t b = 0; b < total; ++b) {
      bool peak = true;
      for (int i = 0; i < matrix_.n && peak; ++i) peak = perf[b] > perf[b ^ (std::uint32_t{1} << i)];
      count += peak ? 1 : 0;
    }
    return count;
  }

 private:
  Landscape() = default;

  void check(const Solution& s) const {
    if (s.size() != matrix_.n) throw std::invalid_argument("solution length does not match landscape");
  }

  void find_global_optimum() {
    const std::uint32_t total = std::uint32_t{1} << matrix_.n;
    global_max_ = -1.0;
    for (std::uint32_t b = 0; b < total; ++b) {
      const double p = performance_bits(b);
      if (p > global_max_) {  // strict: ties keep the lowest bitstring
        global_max_ = p;
        global_argmax_ = b;
      }
    }
    if (!(global_max_ > 0.0)) throw std::invalid_argument("landscape global maximum must be positive");
  }

  InterdependenceMatrix matrix_;
  std::vector<std::vector<double>> tables_;
  int subtasks_ = 3;
  double global_max_ = 0.0;
  std::uint32_t global_argmax_ = 0;
};

/// Fills the tables i.i.d. U(0,1) from the seeded stream, decision by
/// decision, entry by entry.
inline Landscape build_landscape(InterdependenceMatrix matrix, std::uint64_t seed, int subtasks = 3) {
  matrix.validate();
  if (matrix.n > kEnumerationCap) throw std::invalid_argument("n exceeds enumeration cap");
  Rng rng = make_rng(seed);
  const std::size_t width = std::size_t{1} << (matrix.k + 1);
  std::vector<std::vector<double>> tables(static_cast<std::size_t>(matrix.n), std::vector<double>(width));
  for (auto& t : tables)
    for (double& c : t) c = uniform01(rng);
  return Landscape::from_tables(std::move(matrix), std::move(tables), subtasks);
}

}  // namespace nkgroups
