#pragma once

#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lvs/cli/config.hpp"
#include "lvs/eval.hpp"
#include "lvs/localizer.hpp"
#include "lvs/planner.hpp"

namespace lvs::cli {

// Everything needed to plan one question on one video.
struct plan_job {
  std::string id;
  std::string video_id;
  double duration_s = 0.0;
  std::string question;
  std::vector<std::string> options;
  std::optional<time_window> target;  // ground truth, required by the oracle localizer
  std::optional<embedding_sequence> embeddings;
  std::optional<std::filesystem::path> video_path;
  std::filesystem::path frames_dir;  // where extracted frames go
};

plan_job job_from_record(const qa_record & rec);

// Instantiates the configured localizer for one job. `default_kind` applies
// when the configuration does not name one.
std::unique_ptr<localizer> make_localizer(const run_config & cfg, const plan_job & job,
                                          const std::string & default_kind);

// Stage 1, localization, stage 2 and budget for one job.
sampling_plan plan_rhs(const run_config & cfg, const plan_job & job, localizer & impl);

// Runs the extraction template for one timestamp. Placeholders are replaced by
// single-quoted shell words.
void extract_frame(const std::string & cmd_template, const std::filesystem::path & video, double t_s,
                   const std::filesystem::path & out);

// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path & path, const std::string & content);

// Calls fn(i) for i in [0, count) on at most `jobs` threads. Returns the
// exception thrown by each item, or null.
std::vector<std::exception_ptr> run_pool(std::size_t count, int jobs, const std::function<void(std::size_t)> & fn);

// `<dir>/<video_id>.emb`, else `<dir>/<video_id>.csv`, else nullopt.
std::optional<std::filesystem::path> find_embeddings(const std::filesystem::path & dir, const std::string & video_id);

}  // namespace lvs::cli
