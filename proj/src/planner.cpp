#include "lvs/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "lvs/error.hpp"

namespace lvs {

namespace {

using json = nlohmann::json;

void check_selected(std::span<const segment> segments, std::span<const std::size_t> selected) {
  for (std::size_t s : selected) {
    if (s >= segments.size()) {
      throw error(error_code::out_of_range, "unknown segment index " + std::to_string(s));
    }
  }
}

}  // namespace

std::vector<segment> partition_segments(std::span<const double> keyframe_times, double duration_s) {
  if (keyframe_times.empty()) {
    throw error(error_code::invalid_argument, "partition needs at least one keyframe");
  }
  for (std::size_t i = 0; i < keyframe_times.size(); ++i) {
    const double t = keyframe_times[i];
    if (!std::isfinite(t) || t < 0.0 || t > duration_s) {
      throw error(error_code::out_of_range, "keyframe outside [0, duration]", static_cast<int64_t>(i));
    }
    if (i > 0 && !(t > keyframe_times[i - 1])) {
      throw error(error_code::non_monotone_timestamps, "keyframe times must strictly increase",
                  static_cast<int64_t>(i));
    }
  }
  std::vector<segment> out(keyframe_times.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].index = i;
    out[i].start_s = i == 0 ? 0.0 : 0.5 * (keyframe_times[i - 1] + keyframe_times[i]);
    out[i].end_s = i + 1 == out.size() ? duration_s : 0.5 * (keyframe_times[i] + keyframe_times[i + 1]);
  }
  return out;
}

std::optional<std::size_t> segment_of(std::span<const segment> segments, double t_s) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const bool last = i + 1 == segments.size();
    if (t_s >= segments[i].start_s && (t_s < segments[i].end_s || (last && t_s == segments[i].end_s))) {
      return i;
    }
  }
  return std::nullopt;
}

stage1_result plan_stage1(double duration_s, rate initial_rate, double keep, const embedding_sequence * seq,
                          const selector_config & selector) {
  if (!(keep > 0.0) || keep > 1.0) {
    throw error(error_code::invalid_argument, "keep ratio must lie in (0, 1]");
  }
  stage1_result out;
  out.grid = uniform_timestamps(duration_s, initial_rate);
  if (out.grid.empty()) {
    // Shorter than one stage-1 interval: a single keyframe at the center.
    out.grid.push_back(0.5 * duration_s);
  }

  std::vector<std::size_t> kept;
  if (keep < 1.0) {
    if (seq == nullptr) {
      throw error(error_code::invalid_argument, "keep ratio below 1 requires embeddings");
    }
    if (seq->n != out.grid.size()) {
      throw error(error_code::dimension_mismatch,
                  "expected " + std::to_string(out.grid.size()) + " embeddings for the stage-1 grid, got " +
                      std::to_string(seq->n));
    }
    selector_config cfg = selector;
    cfg.target = keep_ratio{keep};
    kept = select_frames(*seq, cfg).indices;
  } else {
    kept.resize(out.grid.size());
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  }

  std::vector<double> times;
  times.reserve(kept.size());
  for (std::size_t i : kept) {
    out.keyframes.push_back({i, out.grid[i]});
    times.push_back(out.grid[i]);
  }
  out.segments = partition_segments(times, duration_s);
  return out;
}

std::vector<double> plan_stage2(std::span<const segment> segments, std::span<const std::size_t> selected,
                                rate dense_rate) {
  if (!(dense_rate.fps() > 0.0)) {
    throw error(error_code::invalid_argument, "dense rate must be positive");
  }
  check_selected(segments, selected);
  std::vector<std::size_t> order(selected.begin(), selected.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return segments[a].start_s < segments[b].start_s;
  });
  order.erase(std::unique(order.begin(), order.end()), order.end());

  const double interval = dense_rate.interval_s();
  std::vector<double> out;
  for (std::size_t s : order) {
    const auto & seg = segments[s];
    const std::size_t count = dense_rate.frames_in(seg.length());
    for (std::size_t m = 0; m < count; ++m) {
      out.push_back(seg.start_s + (static_cast<double>(m) + 0.5) * interval);
    }
  }
  return out;
}

budget_summary compute_budget(const sampling_plan & plan, double duration_s) {
  budget_summary b;
  b.stage1_frames = plan.stage1_keyframes.size();
  b.stage2_frames = plan.stage2_timestamps.size();
  b.total_frames = b.stage1_frames + b.stage2_frames;
  b.sd_full_video = sampling_density(b.total_frames, duration_s);
  double dense_span = 0.0;
  std::vector<std::size_t> sel(plan.selected);
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
  for (std::size_t s : sel) {
    if (s < plan.segments.size()) dense_span += plan.segments[s].length();
  }
  b.sd_dense = sampling_density(b.stage2_frames, dense_span);
  return b;
}

double estimate_nsd(std::span<const time_window> cue_windows) {
  if (cue_windows.empty()) {
    throw error(error_code::invalid_argument, "need at least one cue window");
  }
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cue_windows.size(); ++i) {
    const double len = cue_windows[i].length();
    if (!(len > 0.0)) {
      throw error(error_code::invalid_argument, "cue window must have positive length", static_cast<int64_t>(i));
    }
    shortest = std::min(shortest, len);
  }
  return 1.0 / shortest;
}

sampling_plan assemble_plan(std::string video_id, double duration_s, rate stage1_rate, stage1_result stage1,
                            std::vector<std::size_t> selected, rate dense_rate) {
  sampling_plan plan;
  plan.video_id = std::move(video_id);
  plan.mode = plan_mode::rhs;
  plan.duration_s = duration_s;
  plan.stage1_rate_fpm = stage1_rate.fpm();
  plan.stage1_keyframes = std::move(stage1.keyframes);
  plan.segments = std::move(stage1.segments);
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  plan.stage2_timestamps = plan_stage2(plan.segments, selected, dense_rate);
  plan.selected = std::move(selected);
  plan.stage2_rate_fps = dense_rate.fps();
  plan.budget = compute_budget(plan, duration_s);
  return plan;
}

sampling_plan plan_oracle(std::string video_id, time_window target, rate dense_rate) {
  if (!(target.length() > 0.0) || target.start_s < 0.0) {
    throw error(error_code::invalid_argument, "target segment must have positive length");
  }
  sampling_plan plan;
  plan.video_id = std::move(video_id);
  plan.mode = plan_mode::oracle;
  plan.duration_s = target.length();
  plan.segments = {segment{0, target.start_s, target.end_s}};
  plan.selected = {0};
  plan.stage2_rate_fps = dense_rate.fps();
  plan.stage2_timestamps = plan_stage2(plan.segments, plan.selected, dense_rate);
  plan.budget = compute_budget(plan, plan.duration_s);
  return plan;
}

sampling_plan plan_uniform(std::string video_id, double duration_s, std::size_t frames) {
  if (!(duration_s > 0.0) || frames == 0) {
    throw error(error_code::invalid_argument, "uniform plan needs a positive duration and frame count");
  }
  sampling_plan plan;
  plan.video_id = std::move(video_id);
  plan.mode = plan_mode::uniform;
  plan.duration_s = duration_s;
  plan.stage1_rate_fpm = 60.0 * static_cast<double>(frames) / duration_s;
  const double cell = duration_s / static_cast<double>(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    plan.stage1_keyframes.push_back({i, (static_cast<double>(i) + 0.5) * cell});
  }
  plan.budget = compute_budget(plan, duration_s);
  return plan;
}

std::string_view to_string(plan_mode mode) noexcept {
  switch (mode) {
    case plan_mode::rhs: return "rhs";
    case plan_mode::oracle: return "oracle";
    case plan_mode::uniform: return "uniform";
  }
  return "rhs";
}

std::string plan_to_json(const sampling_plan & plan) {
  json j;
  j["video_id"] = plan.video_id;
  j["mode"] = std::string(to_string(plan.mode));
  j["duration_s"] = plan.duration_s;

  json keyframes = json::array();
  for (const auto & kf : plan.stage1_keyframes) keyframes.push_back({{"index", kf.index}, {"t_s", kf.t_s}});
  j["stage1"] = {{"rate_fpm", plan.stage1_rate_fpm}, {"keyframes", keyframes}};

  json segments = json::array();
  for (const auto & s : plan.segments) {
    segments.push_back({{"index", s.index}, {"start_s", s.start_s}, {"end_s", s.end_s}});
  }
  j["segments"] = segments;
  j["selected"] = plan.selected;
  j["stage2"] = {{"rate_fps", plan.stage2_rate_fps}, {"timestamps", plan.stage2_timestamps}};
  j["budget"] = {
      {"stage1_frames", plan.budget.stage1_frames}, {"stage2_frames", plan.budget.stage2_frames},
      {"total_frames", plan.budget.total_frames},   {"sd_full_video", plan.budget.sd_full_video},
      {"sd_dense", plan.budget.sd_dense},
  };
  return j.dump(2) + "\n";
}

sampling_plan plan_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    sampling_plan plan;
    plan.video_id = j.at("video_id").get<std::string>();
    const auto mode = j.value("mode", std::string("rhs"));
    if (mode == "rhs") {
      plan.mode = plan_mode::rhs;
    } else if (mode == "oracle") {
      plan.mode = plan_mode::oracle;
    } else if (mode == "uniform") {
      plan.mode = plan_mode::uniform;
    } else {
      throw error(error_code::parse_error, "unknown plan mode '" + mode + "'");
    }
    plan.duration_s = j.at("duration_s").get<double>();
    plan.stage1_rate_fpm = j.at("stage1").at("rate_fpm").get<double>();
    for (const auto & kf : j.at("stage1").at("keyframes")) {
      plan.stage1_keyframes.push_back({kf.at("index").get<std::size_t>(), kf.at("t_s").get<double>()});
    }
    for (const auto & s : j.at("segments")) {
      plan.segments.push_back(
          {s.at("index").get<std::size_t>(), s.at("start_s").get<double>(), s.at("end_s").get<double>()});
    }
    plan.selected = j.at("selected").get<std::vector<std::size_t>>();
    plan.stage2_rate_fps = j.at("stage2").at("rate_fps").get<double>();
    plan.stage2_timestamps = j.at("stage2").at("timestamps").get<std::vector<double>>();
    const auto & b = j.at("budget");
    plan.budget.stage1_frames = b.at("stage1_frames").get<std::size_t>();
    plan.budget.stage2_frames = b.at("stage2_frames").get<std::size_t>();
    plan.budget.total_frames = b.at("total_frames").get<std::size_t>();
    plan.budget.sd_full_video = b.at("sd_full_video").get<double>();
    plan.budget.sd_dense = b.at("sd_dense").get<double>();
    return plan;
  } catch (const json::exception & e) {
    throw error(error_code::parse_error, std::string("malformed plan JSON: ") + e.what());
  }
}

}  // namespace lvs
