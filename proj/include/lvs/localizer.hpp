#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lvs/planner.hpp"

namespace lvs {

struct localization_keyframe {
  std::size_t segment = 0;
  double t_s = 0.0;
  std::string frame_ref;  // path to an extracted image, may be empty
};

struct localization_request {
  std::string question;
  std::vector<std::string> options;  // forwarded only when include_options is set
  bool include_options = false;
  std::vector<localization_keyframe> keyframes;
  std::vector<segment> segments;  // bounds for the keyframes' segment indices
  std::size_t max_selected = 2;
};

struct localization_result {
  std::vector<std::size_t> selected;  // ascending
  std::string rationale;
  double latency_ms = 0.0;
};

void validate(const localization_request & req);

// One keyframe per stage-1 segment. frame_refs, when non-empty, is parallel to
// the keyframes.
localization_request make_request(const stage1_result & stage1, std::string question,
                                  std::vector<std::string> options, std::size_t max_selected,
                                  const std::vector<std::string> & frame_refs = {});

class localizer {
 public:
  virtual ~localizer() = default;
  virtual std::string_view name() const noexcept = 0;
  virtual localization_result localize(const localization_request & req) = 0;
};

// Validates the request, runs the implementation and checks the result
// invariants (non-empty, within max_selected, subset of request segments).
localization_result localize(localizer & impl, const localization_request & req);

// Integers following "segment"/"segments" (any case), separated by commas or
// "and". Throws error_code::parse_error when nothing matches.
std::set<std::size_t> parse_segment_reply(std::string_view text);

// Segment number mentioned most often as "Frame <i>", ties to the smallest.
std::optional<std::size_t> most_mentioned_frame(std::string_view text);

// Reply text to a selection for `req`: parse, fall back to the most mentioned
// keyframe, drop unknown segments and keep the lowest max_selected indices.
std::vector<std::size_t> selection_from_reply(std::string_view text, const localization_request & req);

inline constexpr std::string_view k_prompt_version = "localize-v1";

// Instruction text sent with every remote request.
std::string render_prompt(const localization_request & req);

// Replays a fixed reply through the same parsing path as the remote client.
// With no reply it names the middle segment.
class mock_localizer : public localizer {
 public:
  explicit mock_localizer(std::string reply = {}) : reply_(std::move(reply)) {}
  std::string_view name() const noexcept override { return "mock"; }
  localization_result localize(const localization_request & req) override;

 private:
  std::string reply_;
};

// Every segment with positive overlap with the ground-truth target. Fails with
// capacity_exceeded if that is more than max_selected.
class oracle_localizer : public localizer {
 public:
  explicit oracle_localizer(time_window target) : target_(target) {}
  std::string_view name() const noexcept override { return "oracle"; }
  localization_result localize(const localization_request & req) override;

 private:
  time_window target_;
};

// min(max_selected, #segments) distinct segments, seeded by (seed, question).
class random_localizer : public localizer {
 public:
  explicit random_localizer(uint64_t seed) : seed_(seed) {}
  std::string_view name() const noexcept override { return "random"; }
  localization_result localize(const localization_request & req) override;

 private:
  uint64_t seed_;
};

struct remote_config {
  std::string url = "http://127.0.0.1:8000/v1/localize";
  std::string model = "qwen2.5-vl-7b-instruct";
  int timeout_ms = 60'000;
  int max_in_flight = 4;
  int attempts = 3;
  bool embed_images = false;  // base64 payloads instead of file:// URIs

  // LVS_LOCALIZER_URL, LVS_LOCALIZER_MODEL, LVS_LOCALIZER_TIMEOUT_MS,
  // LVS_LOCALIZER_MAX_IN_FLIGHT, LVS_LOCALIZER_ATTEMPTS override `base`.
  static remote_config from_env(remote_config base);
};

// JSON body {model, question, frames, instruction} -> {text}. Transport and
// timeout failures are retried; each attempt is parsed on its own.
class remote_localizer : public localizer {
 public:
  explicit remote_localizer(remote_config cfg);
  std::string_view name() const noexcept override { return "remote"; }
  localization_result localize(const localization_request & req) override;

  std::string request_body(const localization_request & req) const;

 private:
  std::string exchange(const std::string & body);

  remote_config cfg_;
  std::string base_url_;
  std::string path_;
  std::mutex gate_mutex_;
  std::condition_variable gate_cv_;
  int in_flight_ = 0;
};

std::string base64_encode(std::string_view bytes);

// FNV-1a, used wherever a stable string hash seeds an RNG.
uint64_t stable_hash(std::string_view text, uint64_t seed = 0);

}  // namespace lvs
