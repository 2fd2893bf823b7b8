#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvs/embedding_store.hpp"
#include "lvs/selector.hpp"

namespace lvs {

struct time_window {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const noexcept { return end_s - start_s; }
  bool operator==(const time_window &) const = default;
};

// Half-open [start_s, end_s), except the last segment of a partition which is
// closed at the video duration.
struct segment {
  std::size_t index = 0;
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const noexcept { return end_s - start_s; }
  time_window window() const noexcept { return {start_s, end_s}; }
  bool operator==(const segment &) const = default;
};

struct keyframe {
  std::size_t index = 0;  // position in the stage-1 uniform grid
  double t_s = 0.0;
  bool operator==(const keyframe &) const = default;
};

struct budget_summary {
  std::size_t stage1_frames = 0;
  std::size_t stage2_frames = 0;
  std::size_t total_frames = 0;
  double sd_full_video = 0.0;  // total_frames / duration_s
  double sd_dense = 0.0;       // stage2_frames / selected duration
  bool operator==(const budget_summary &) const = default;
};

enum class plan_mode { rhs, oracle, uniform };

struct sampling_plan {
  std::string video_id;
  plan_mode mode = plan_mode::rhs;
  double duration_s = 0.0;
  double stage1_rate_fpm = 0.0;
  std::vector<keyframe> stage1_keyframes;
  std::vector<segment> segments;
  std::vector<std::size_t> selected;
  double stage2_rate_fps = 0.0;
  std::vector<double> stage2_timestamps;
  budget_summary budget;

  bool operator==(const sampling_plan &) const = default;
};

struct stage1_result {
  std::vector<double> grid;  // initial uniform sample times
  std::vector<keyframe> keyframes;
  std::vector<segment> segments;
};

// Boundaries at midpoints between consecutive keyframes; the first segment
// starts at 0 and the last ends at duration_s.
std::vector<segment> partition_segments(std::span<const double> keyframe_times, double duration_s);

// Segment containing t under the half-open convention, or nullopt.
std::optional<std::size_t> segment_of(std::span<const segment> segments, double t_s);

// Uniform grid at initial_rate, thinned by the DP selector to round(keep_ratio * n)
// frames when keep_ratio < 1. The selector config supplies lambda, beta and the
// backtrace mode; its target is replaced by keep_ratio.
stage1_result plan_stage1(double duration_s, rate initial_rate, double keep_ratio,
                          const embedding_sequence * seq, const selector_config & selector = {});

// Center-of-cell samples at `dense_rate` inside each selected segment, in
// temporal order.
std::vector<double> plan_stage2(std::span<const segment> segments, std::span<const std::size_t> selected,
                                rate dense_rate);

budget_summary compute_budget(const sampling_plan & plan, double duration_s);

inline double sampling_density(std::size_t frames, double duration_s) {
  return duration_s > 0.0 ? static_cast<double>(frames) / duration_s : 0.0;
}

// Minimal uniform rate that puts a sample inside every window for any phase:
// 1 / shortest window length.
double estimate_nsd(std::span<const time_window> cue_windows);

sampling_plan assemble_plan(std::string video_id, double duration_s, rate stage1_rate, stage1_result stage1,
                            std::vector<std::size_t> selected, rate dense_rate);

// Dense sampling of the target segment alone; the segment is the whole input,
// so densities are taken over its length.
sampling_plan plan_oracle(std::string video_id, time_window target, rate dense_rate);

// Fixed-count uniform baseline over the whole video.
sampling_plan plan_uniform(std::string video_id, double duration_s, std::size_t frames);

std::string_view to_string(plan_mode mode) noexcept;

// Canonical JSON: sorted keys, two-space indent, trailing newline.
std::string plan_to_json(const sampling_plan & plan);
sampling_plan plan_from_json(std::string_view text);

}  // namespace lvs
