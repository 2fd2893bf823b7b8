#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvs/planner.hpp"

namespace lvs {

struct qa_record {
  std::string id;
  std::string video_id;
  std::string question;
  std::array<std::string, 4> options;  // A..D
  char answer = 'A';
  time_window target;
  double duration_s = 0.0;
};

void validate(const qa_record & rec);

// One JSON object per line:
// {"id","video_id","question","options":{"A".."D"},"answer","target":{"start_s","end_s"},"duration_s"}
std::vector<qa_record> parse_qa_jsonl(std::string_view text);
std::vector<qa_record> load_qa_jsonl(const std::filesystem::path & path);
std::string qa_to_jsonl(std::span<const qa_record> records);

// {"id","reply_text"} per line, keyed by id.
std::map<std::string, std::string> parse_replies_jsonl(std::string_view text);
std::map<std::string, std::string> load_replies_jsonl(const std::filesystem::path & path);
std::string replies_to_jsonl(const std::map<std::string, std::string> & replies);

// First A-D label, trying in order: "(B)", "Answer: B" / "answer is B", and a
// leading "B" followed by '.', ')', ':' or whitespace or end of text.
std::optional<char> parse_choice(std::string_view reply);

// |(union of predicted) ∩ gt| / |gt|.
double coverage_rate(std::span<const time_window> predicted, time_window gt);

// Segments the plan densely samples; empty for uniform plans.
std::vector<time_window> predicted_windows(const sampling_plan & plan);

struct eval_row {
  std::string id;
  std::string video_id;
  char answer = 'A';
  std::optional<char> predicted;  // nullopt: unparsable, scored incorrect
  bool correct = false;
  std::optional<std::size_t> total_frames;
  std::optional<double> sd;
  std::optional<double> coverage;
};

struct eval_report {
  std::size_t n_items = 0;
  std::size_t n_correct = 0;
  std::size_t n_unparsable = 0;
  double accuracy = 0.0;
  // Means over the items that have a plan (frames, SD) or a localized plan
  // (coverage); zero when there are none.
  std::size_t n_with_plans = 0;
  std::size_t n_with_coverage = 0;
  double mean_total_frames = 0.0;
  double mean_sd = 0.0;
  double mean_coverage = 0.0;
  std::vector<eval_row> rows;  // sorted by id
};

// Plans are keyed by QA id. Throws missing_reply listing every id without a
// reply, and id_mismatch for replies or plans whose id is not a record.
eval_report evaluate(std::span<const qa_record> records, const std::map<std::string, std::string> & replies,
                     const std::map<std::string, sampling_plan> & plans);

std::string report_to_json(const eval_report & report);
std::string report_table(const eval_report & report);

// SVG timeline: axis, stage-1 ticks, shaded selected segments, stage-2 ticks
// and an optional ground-truth band. Ticks are <line class="tick ..."/>.
std::string render_timeline_svg(const sampling_plan & plan, std::optional<time_window> gt);
void emit_timeline(const sampling_plan & plan, std::optional<time_window> gt, const std::filesystem::path & out);

}  // namespace lvs
