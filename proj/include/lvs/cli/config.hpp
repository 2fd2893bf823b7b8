#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lvs/localizer.hpp"
#include "lvs/selector.hpp"

namespace lvs::cli {

// Run-level settings. Defaults are the reference operating point: 4 frames per
// minute, keep 1 in 4 with lambda 10 and beta 0.3, then 1 frame per second.
struct run_config {
  std::filesystem::path embeddings_dir;
  std::filesystem::path qa_file;
  std::filesystem::path plans_dir;
  std::filesystem::path reports_dir;

  double lambda = 10.0;
  double beta = 0.3;
  double keep_ratio = 0.25;
  backtrace_mode mode = backtrace_mode::min_end;
  penalty_position position = penalty_position::index;

  double stage1_fpm = 4.0;
  double stage2_fps = 1.0;

  std::optional<std::string> localizer;  // mock | oracle | random | remote
  remote_config remote;
  std::size_t max_selected = 2;
  bool include_options = false;

  int jobs = 1;
  uint64_t seed = 0;

  // Shell template with {video_path}, {t_s} and {out_path} placeholders.
  std::string extract_cmd;

  selector_config selector() const;
  // Throws error_code::invalid_argument on the first bad field.
  void validate() const;
};

// Defaults, then the JSON config file (if any), then LVS_* environment
// variables. Command-line flags are applied on top by the caller.
run_config load_config(const std::optional<std::filesystem::path> & file);

backtrace_mode parse_backtrace_mode(const std::string & text);
penalty_position parse_penalty_position(const std::string & text);
std::string_view to_string(backtrace_mode mode) noexcept;

}  // namespace lvs::cli
