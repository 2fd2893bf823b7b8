#include "lvs/selector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>

#include "lvs/error.hpp"

namespace lvs {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();

double row_norm(std::span<const double> row) {
  double sq = 0.0;
  for (double v : row) sq += v * v;
  return std::sqrt(sq);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

void check_k(std::size_t k, std::size_t n) {
  if (k < 1) {
    throw error(error_code::invalid_argument, "k must be at least 1");
  }
  if (k > n) {
    throw error(error_code::out_of_range,
                "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  }
}

}  // namespace

std::size_t resolve_k(const selector_config & cfg, std::size_t n) {
  std::size_t k = 0;
  if (const auto * count = std::get_if<target_count>(&cfg.target)) {
    k = count->k;
  } else {
    const double ratio = std::get<keep_ratio>(cfg.target).ratio;
    if (!(ratio > 0.0) || ratio > 1.0) {
      throw error(error_code::invalid_argument, "keep ratio must lie in (0, 1]");
    }
    k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
  }
  check_k(k, n);
  return k;
}

double similarity(const embedding_sequence & seq, std::size_t i, std::size_t j) {
  if (i >= seq.n || j >= seq.n) {
    throw error(error_code::out_of_range, "frame index outside sequence");
  }
  const auto a = seq.row(i);
  const auto b = seq.row(j);
  const double na = row_norm(a);
  const double nb = row_norm(b);
  if (!(na > 0.0)) throw error(error_code::zero_norm, "zero-norm embedding", static_cast<int64_t>(i));
  if (!(nb > 0.0)) throw error(error_code::zero_norm, "zero-norm embedding", static_cast<int64_t>(j));
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double penalty(std::size_t i, std::size_t j, std::size_t n, double lambda, double beta) {
  if (n < 1 || i >= n || j >= n) {
    throw error(error_code::out_of_range, "penalty indices outside [0, n)");
  }
  const double gap = std::fabs(static_cast<double>(i) - static_cast<double>(j)) / static_cast<double>(n);
  if (gap == 0.0 || lambda == 0.0) return 0.0;
  return -lambda * std::pow(gap, beta);
}

weight_matrix::weight_matrix(std::size_t n) : n_(n), values_(n > 1 ? n * (n - 1) / 2 : 0, 0.0) {}

double weight_matrix::at(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (i == j || j >= n_) {
    throw error(error_code::out_of_range, "weight_matrix holds only i != j within [0, n)");
  }
  return values_[offset(j) + i];
}

void weight_matrix::set(std::size_t i, std::size_t j, double value) {
  if (i > j) std::swap(i, j);
  if (i == j || j >= n_) {
    throw error(error_code::out_of_range, "weight_matrix holds only i != j within [0, n)");
  }
  values_[offset(j) + i] = value;
}

void weight_matrix::write_csv(std::ostream & out) const {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "i,j,value\n";
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) out << i << ',' << j << ',' << at(i, j) << '\n';
  }
  out.precision(old_precision);
}

weight_matrix build_weights(const embedding_sequence & seq, const selector_config & cfg) {
  if (!(cfg.lambda >= 0.0) || !(cfg.beta > 0.0)) {
    throw error(error_code::invalid_argument, "need lambda >= 0 and beta > 0");
  }
  const std::size_t n = seq.n;
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = row_norm(seq.row(i));
    if (!(norms[i] > 0.0)) throw error(error_code::zero_norm, "zero-norm embedding", static_cast<int64_t>(i));
  }

  std::vector<double> positions(n);
  for (std::size_t i = 0; i < n; ++i) {
    positions[i] = cfg.position == penalty_position::index
                       ? static_cast<double>(i + 1) / static_cast<double>(n)
                       : seq.timestamps_s[i] / seq.duration_s;
  }

  weight_matrix w(n);
  for (std::size_t j = 1; j < n; ++j) {
    const auto ej = seq.row(j);
    for (std::size_t i = 0; i < j; ++i) {
      const double s = std::clamp(dot(seq.row(i), ej) / (norms[i] * norms[j]), -1.0, 1.0);
      double p = 0.0;
      if (cfg.position == penalty_position::index) {
        p = penalty(i, j, n, cfg.lambda, cfg.beta);
      } else if (cfg.lambda != 0.0) {
        p = -cfg.lambda * std::pow(std::fabs(positions[j] - positions[i]), cfg.beta);
      }
      w.set(i, j, s + p);
    }
  }
  w.set_config(cfg);
  return w;
}

double objective_of(const weight_matrix & w, const std::vector<std::size_t> & indices) {
  double total = 0.0;
  for (std::size_t t = 1; t < indices.size(); ++t) total += w.at(indices[t - 1], indices[t]);
  return total;
}

selection_result select_dp(const weight_matrix & w, std::size_t k, backtrace_mode mode) {
  const std::size_t n = w.size();
  check_k(k, n);

  // Frames are numbered 1..n here; row 0 is the virtual start whose weight to
  // every frame is zero, so the first pick is free.
  const std::size_t stride = n + 1;
  std::vector<double> dp((k + 1) * stride, k_inf);
  std::vector<int32_t> trace((k + 1) * stride, -1);
  dp[0] = 0.0;

  for (std::size_t j = 1; j <= k; ++j) {
    const double * prev = dp.data() + (j - 1) * stride;
    double * cur = dp.data() + j * stride;
    int32_t * cur_trace = trace.data() + j * stride;
    for (std::size_t i = j; i <= n; ++i) {
      // W(p, i) for real frames p lives in column i-1, entry p-1.
      const double * col = i >= 2 ? w.column(i - 1) : nullptr;
      double best = cur[i];
      int32_t arg = -1;
      for (std::size_t p = j - 1; p < i; ++p) {
        const double cand = prev[p] + (p == 0 ? 0.0 : col[p - 1]);
        if (cand < best) {
          best = cand;
          arg = static_cast<int32_t>(p);
        }
      }
      cur[i] = best;
      cur_trace[i] = arg;
    }
  }

  std::size_t end = n;
  if (mode == backtrace_mode::min_end) {
    const double * last = dp.data() + k * stride;
    for (std::size_t i = k; i <= n; ++i) {
      if (last[i] < last[end] || (last[i] == last[end] && i < end)) end = i;
    }
  }

  selection_result result;
  result.method = mode == backtrace_mode::min_end ? selection_method::dp_min_end : selection_method::dp_faithful;
  result.objective = dp[k * stride + end];
  result.indices.resize(k);
  std::size_t i = end;
  for (std::size_t j = k; j > 0; --j) {
    result.indices[j - 1] = i - 1;
    i = static_cast<std::size_t>(trace[j * stride + i]);
  }
  return result;
}

uint64_t binomial_capped(std::size_t n, std::size_t k, uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // C(n, i) = C(n, i-1) * (n - i + 1) / i stays integral at every step.
  unsigned __int128 c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * (n - i + 1) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<uint64_t>(c);
}

selection_result select_bruteforce(const weight_matrix & w, std::size_t k) {
  const std::size_t n = w.size();
  check_k(k, n);
  if (binomial_capped(n, k, k_bruteforce_limit) > k_bruteforce_limit) {
    throw error(error_code::instance_too_large,
                "C(" + std::to_string(n) + ", " + std::to_string(k) + ") exceeds the enumeration limit");
  }

  std::vector<std::size_t> combo(k);
  for (std::size_t t = 0; t < k; ++t) combo[t] = t;

  selection_result best;
  best.method = selection_method::bruteforce;
  best.objective = k_inf;
  while (true) {
    const double value = objective_of(w, combo);
    if (value < best.objective) {
      best.objective = value;
      best.indices = combo;
    }
    // Advance to the next combination in lexicographic order.
    std::size_t t = k;
    while (t > 0 && combo[t - 1] == n - k + (t - 1)) --t;
    if (t == 0) break;
    ++combo[t - 1];
    for (std::size_t u = t; u < k; ++u) combo[u] = combo[u - 1] + 1;
  }
  return best;
}

selection_result select_uniform(std::size_t n, std::size_t k, const weight_matrix * weights) {
  check_k(k, n);
  selection_result result;
  result.method = selection_method::uniform;
  result.indices.resize(k);
  const double cell = static_cast<double>(n) / static_cast<double>(k);
  for (std::size_t j = 1; j <= k; ++j) {
    const auto one_based = static_cast<std::size_t>(std::llround((static_cast<double>(j) - 0.5) * cell));
    result.indices[j - 1] = std::clamp<std::size_t>(one_based, 1, n) - 1;
  }
  for (std::size_t t = 1; t < k; ++t) {
    result.indices[t] = std::max(result.indices[t], result.indices[t - 1] + 1);
  }
  for (std::size_t t = k; t-- > 0;) {
    const std::size_t cap = n - (k - t);
    result.indices[t] = std::min(result.indices[t], cap);
    if (t + 1 < k) result.indices[t] = std::min(result.indices[t], result.indices[t + 1] - 1);
  }
  result.objective = weights ? objective_of(*weights, result.indices) : std::numeric_limits<double>::quiet_NaN();
  return result;
}

selection_result select_frames(const embedding_sequence & seq, const selector_config & cfg) {
  const std::size_t k = resolve_k(cfg, seq.n);
  const auto w = build_weights(normalize(seq), cfg);
  return select_dp(w, k, cfg.mode);
}

}  // namespace lvs
