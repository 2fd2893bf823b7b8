#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "lvs/embedding_store.hpp"

namespace lvs {

// All indices in this API are 0-based. The weight formulas are written for
// 1-based frame numbers; only index differences enter them, so the two agree.

enum class backtrace_mode {
  min_end,   // best subset ending anywhere; the true minimizer of the objective
  faithful,  // last frame pinned to n-1, as in the reference pseudocode
};

enum class penalty_position {
  index,      // i / n
  timestamp,  // t_i / duration_s
};

struct target_count {
  std::size_t k = 0;
};

struct keep_ratio {
  double ratio = 0.25;
};

struct selector_config {
  double lambda = 10.0;
  double beta = 0.3;
  std::variant<target_count, keep_ratio> target = keep_ratio{0.25};
  backtrace_mode mode = backtrace_mode::min_end;
  penalty_position position = penalty_position::index;
};

// k = target_count, or max(1, round(ratio * n)). Throws if k falls outside [1, n].
std::size_t resolve_k(const selector_config & cfg, std::size_t n);

// Cosine similarity of rows i and j.
double similarity(const embedding_sequence & seq, std::size_t i, std::size_t j);

// -lambda * |i/n - j/n|^beta
double penalty(std::size_t i, std::size_t j, std::size_t n, double lambda, double beta);

// Symmetric pairwise weights, stored as the strict upper triangle packed by
// column so that the predecessor scan in select_dp reads contiguous memory.
class weight_matrix {
 public:
  explicit weight_matrix(std::size_t n);

  template <typename Fn>
  static weight_matrix from_function(std::size_t n, Fn && fn) {
    weight_matrix w(n);
    for (std::size_t j = 1; j < n; ++j) {
      for (std::size_t i = 0; i < j; ++i) w.set(i, j, fn(i, j));
    }
    return w;
  }

  std::size_t size() const noexcept { return n_; }
  double at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double value);

  // Entries i < j of column j, i.e. W(0, j) .. W(j-1, j).
  const double * column(std::size_t j) const noexcept { return values_.data() + offset(j); }

  const std::optional<selector_config> & config() const noexcept { return config_; }
  void set_config(const selector_config & cfg) { config_ = cfg; }

  // One "i,j,value" line per stored entry.
  void write_csv(std::ostream & out) const;

 private:
  static std::size_t offset(std::size_t j) noexcept { return j * (j - 1) / 2; }

  std::size_t n_;
  std::vector<double> values_;
  std::optional<selector_config> config_;
};

weight_matrix build_weights(const embedding_sequence & seq, const selector_config & cfg);

enum class selection_method { dp_min_end, dp_faithful, bruteforce, uniform };

struct selection_result {
  std::vector<std::size_t> indices;  // strictly increasing
  double objective = 0.0;            // sum of W over consecutive selected pairs
  selection_method method = selection_method::dp_min_end;
};

// Sum of weights over consecutive indices, accumulated left to right.
double objective_of(const weight_matrix & w, const std::vector<std::size_t> & indices);

// O(n^2 k) time, O(n k) memory. Ties prefer the smaller predecessor and, in
// min_end mode, the smaller end frame.
selection_result select_dp(const weight_matrix & w, std::size_t k, backtrace_mode mode);

inline constexpr uint64_t k_bruteforce_limit = 10'000'000;

// Exhaustive enumeration; ties resolve to the lexicographically smallest set.
// Throws error_code::instance_too_large when C(n, k) exceeds k_bruteforce_limit.
selection_result select_bruteforce(const weight_matrix & w, std::size_t k);

// Center-of-cell pick round((j - 0.5) * n / k) for j = 1..k (1-based), pushed
// apart where rounding collides. The objective is NaN unless weights are given.
selection_result select_uniform(std::size_t n, std::size_t k, const weight_matrix * weights = nullptr);

// Normalizes, builds weights and runs the DP in the configured mode.
selection_result select_frames(const embedding_sequence & seq, const selector_config & cfg);

uint64_t binomial_capped(std::size_t n, std::size_t k, uint64_t cap);

}  // namespace lvs
