#include "lvs/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lvs/error.hpp"

namespace lvs {

namespace {

using json = nlohmann::json;

std::string read_text(const std::filesystem::path & path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(error_code::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename Fn>
void for_each_json_line(std::string_view text, Fn && fn) {
  std::istringstream in{std::string(text)};
  std::string line;
  int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      ++row;
      continue;
    }
    try {
      fn(json::parse(line), row);
    } catch (const json::exception & e) {
      throw error(error_code::parse_error, std::string("bad JSON line: ") + e.what(), row);
    }
    ++row;
  }
}

std::string join_ids(const std::vector<std::string> & ids) {
  std::string out;
  for (const auto & id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

json optional_json(const std::optional<double> & v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void validate(const qa_record & rec) {
  if (rec.id.empty()) throw error(error_code::invalid_argument, "QA record without id");
  if (rec.answer < 'A' || rec.answer > 'D') {
    throw error(error_code::invalid_argument, "answer of " + rec.id + " is not one of A-D");
  }
  if (!(rec.target.start_s >= 0.0) || !(rec.target.end_s > rec.target.start_s) ||
      rec.target.end_s > rec.duration_s) {
    throw error(error_code::out_of_range, "target of " + rec.id + " must satisfy 0 <= start < end <= duration");
  }
}

std::vector<qa_record> parse_qa_jsonl(std::string_view text) {
  std::vector<qa_record> out;
  std::set<std::string> seen;
  for_each_json_line(text, [&](const json & j, int64_t row) {
    qa_record rec;
    rec.id = j.at("id").get<std::string>();
    rec.video_id = j.at("video_id").get<std::string>();
    rec.question = j.at("question").get<std::string>();
    const auto & options = j.at("options");
    if (options.size() != 4) {
      throw error(error_code::invalid_argument, "record " + rec.id + " needs exactly 4 options", row);
    }
    for (int i = 0; i < 4; ++i) {
      rec.options[static_cast<std::size_t>(i)] = options.at(std::string(1, static_cast<char>('A' + i))).get<std::string>();
    }
    const auto answer = j.at("answer").get<std::string>();
    if (answer.size() != 1) throw error(error_code::invalid_argument, "answer must be one label", row);
    rec.answer = answer[0];
    rec.target = {j.at("target").at("start_s").get<double>(), j.at("target").at("end_s").get<double>()};
    rec.duration_s = j.at("duration_s").get<double>();
    validate(rec);
    if (!seen.insert(rec.id).second) throw error(error_code::id_mismatch, "duplicate QA id " + rec.id, row);
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<qa_record> load_qa_jsonl(const std::filesystem::path & path) { return parse_qa_jsonl(read_text(path)); }

std::string qa_to_jsonl(std::span<const qa_record> records) {
  std::string out;
  for (const auto & rec : records) {
    json j = {
        {"id", rec.id},
        {"video_id", rec.video_id},
        {"question", rec.question},
        {"options", {{"A", rec.options[0]}, {"B", rec.options[1]}, {"C", rec.options[2]}, {"D", rec.options[3]}}},
        {"answer", std::string(1, rec.answer)},
        {"target", {{"start_s", rec.target.start_s}, {"end_s", rec.target.end_s}}},
        {"duration_s", rec.duration_s},
    };
    out += j.dump() + "\n";
  }
  return out;
}

std::map<std::string, std::string> parse_replies_jsonl(std::string_view text) {
  std::map<std::string, std::string> out;
  for_each_json_line(text, [&](const json & j, int64_t row) {
    auto id = j.at("id").get<std::string>();
    if (!out.emplace(id, j.at("reply_text").get<std::string>()).second) {
      throw error(error_code::id_mismatch, "duplicate reply id " + id, row);
    }
  });
  return out;
}

std::map<std::string, std::string> load_replies_jsonl(const std::filesystem::path & path) {
  return parse_replies_jsonl(read_text(path));
}

std::string replies_to_jsonl(const std::map<std::string, std::string> & replies) {
  std::string out;
  for (const auto & [id, text] : replies) out += json{{"id", id}, {"reply_text", text}}.dump() + "\n";
  return out;
}

std::optional<char> parse_choice(std::string_view reply) {
  static const std::regex k_parenthesized(R"(\(([A-D])\))");
  static const std::regex k_answer_prefix(R"([Aa][Nn][Ss][Ww][Ee][Rr]\s*(?:[Ii][Ss]\s*)?:?\s*([A-D])(?![A-Za-z0-9]))");
  static const std::regex k_leading(R"(^\s*([A-D])(?:[.):\s]|$))");
  const std::string text(reply);
  std::smatch m;
  for (const auto * pattern : {&k_parenthesized, &k_answer_prefix, &k_leading}) {
    if (std::regex_search(text, m, *pattern)) return m.str(1)[0];
  }
  return std::nullopt;
}

double coverage_rate(std::span<const time_window> predicted, time_window gt) {
  if (!(gt.length() > 0.0)) {
    throw error(error_code::invalid_argument, "ground-truth segment must have positive length");
  }
  std::vector<time_window> clipped;
  for (const auto & w : predicted) {
    const double a = std::max(w.start_s, gt.start_s);
    const double b = std::min(w.end_s, gt.end_s);
    if (b > a) clipped.push_back({a, b});
  }
  std::sort(clipped.begin(), clipped.end(), [](const auto & x, const auto & y) { return x.start_s < y.start_s; });
  double covered = 0.0;
  double cur_start = 0.0;
  double cur_end = -1.0;
  bool open = false;
  for (const auto & w : clipped) {
    if (open && w.start_s <= cur_end) {
      cur_end = std::max(cur_end, w.end_s);
      continue;
    }
    if (open) covered += cur_end - cur_start;
    cur_start = w.start_s;
    cur_end = w.end_s;
    open = true;
  }
  if (open) covered += cur_end - cur_start;
  return std::clamp(covered / gt.length(), 0.0, 1.0);
}

std::vector<time_window> predicted_windows(const sampling_plan & plan) {
  std::vector<time_window> out;
  if (plan.mode == plan_mode::uniform) return out;
  for (std::size_t s : plan.selected) {
    if (s < plan.segments.size()) out.push_back(plan.segments[s].window());
  }
  return out;
}

eval_report evaluate(std::span<const qa_record> records, const std::map<std::string, std::string> & replies,
                     const std::map<std::string, sampling_plan> & plans) {
  std::map<std::string, const qa_record *> by_id;
  for (const auto & rec : records) {
    if (!by_id.emplace(rec.id, &rec).second) throw error(error_code::id_mismatch, "duplicate QA id " + rec.id);
  }
  std::vector<std::string> missing;
  for (const auto & [id, rec] : by_id) {
    if (!replies.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) throw error(error_code::missing_reply, "no reply for ids: " + join_ids(missing));
  std::vector<std::string> unknown;
  for (const auto & [id, text] : replies) {
    if (!by_id.contains(id)) unknown.push_back(id);
  }
  for (const auto & [id, plan] : plans) {
    if (!by_id.contains(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) throw error(error_code::id_mismatch, "ids not in the QA set: " + join_ids(unknown));

  eval_report report;
  double frames_sum = 0.0;
  double sd_sum = 0.0;
  double coverage_sum = 0.0;
  // by_id iterates in id order, so the result does not depend on record order.
  for (const auto & [id, rec] : by_id) {
    eval_row row;
    row.id = id;
    row.video_id = rec->video_id;
    row.answer = rec->answer;
    row.predicted = parse_choice(replies.at(id));
    row.correct = row.predicted && *row.predicted == rec->answer;
    if (!row.predicted) ++report.n_unparsable;
    if (row.correct) ++report.n_correct;

    if (auto it = plans.find(id); it != plans.end()) {
      const auto & plan = it->second;
      row.total_frames = plan.budget.total_frames;
      row.sd = plan.budget.sd_full_video;
      frames_sum += static_cast<double>(*row.total_frames);
      sd_sum += *row.sd;
      ++report.n_with_plans;
      if (plan.mode != plan_mode::uniform) {
        const auto windows = predicted_windows(plan);
        row.coverage = coverage_rate(windows, rec->target);
        coverage_sum += *row.coverage;
        ++report.n_with_coverage;
      }
    }
    report.rows.push_back(std::move(row));
  }
  report.n_items = report.rows.size();
  report.accuracy = report.n_items ? static_cast<double>(report.n_correct) / static_cast<double>(report.n_items) : 0.0;
  if (report.n_with_plans) {
    report.mean_total_frames = frames_sum / static_cast<double>(report.n_with_plans);
    report.mean_sd = sd_sum / static_cast<double>(report.n_with_plans);
  }
  if (report.n_with_coverage) report.mean_coverage = coverage_sum / static_cast<double>(report.n_with_coverage);
  return report;
}

std::string report_to_json(const eval_report & report) {
  json rows = json::array();
  for (const auto & row : report.rows) {
    rows.push_back({
        {"id", row.id},
        {"video_id", row.video_id},
        {"answer", std::string(1, row.answer)},
        {"predicted", row.predicted ? json(std::string(1, *row.predicted)) : json(nullptr)},
        {"correct", row.correct},
        {"total_frames", row.total_frames ? json(*row.total_frames) : json(nullptr)},
        {"sd", optional_json(row.sd)},
        {"coverage", optional_json(row.coverage)},
    });
  }
  json j = {
      {"n_items", report.n_items},
      {"n_correct", report.n_correct},
      {"n_unparsable", report.n_unparsable},
      {"accuracy", report.accuracy},
      {"n_with_plans", report.n_with_plans},
      {"n_with_coverage", report.n_with_coverage},
      {"mean_total_frames", report.mean_total_frames},
      {"mean_sd", report.mean_sd},
      {"mean_coverage", report.mean_coverage},
      {"rows", rows},
  };
  return j.dump(2) + "\n";
}

std::string report_table(const eval_report & report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-10s %8s %10s %10s %10s\n", "items", "acc(%)", "frames", "SD(f/s)", "coverage");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-10zu %8.1f %10.1f %10.3f %10.3f\n", report.n_items, 100.0 * report.accuracy,
                report.mean_total_frames, report.mean_sd, report.mean_coverage);
  out += buf;
  std::snprintf(buf, sizeof(buf), "correct %zu, unparsable %zu, with plans %zu\n", report.n_correct,
                report.n_unparsable, report.n_with_plans);
  out += buf;
  return out;
}

}  // namespace lvs
