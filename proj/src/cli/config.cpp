#include "lvs/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "lvs/error.hpp"

namespace lvs::cli {

namespace {

using json = nlohmann::json;

std::optional<std::string> env(const char * name) {
  const char * v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <typename T>
void env_number(const char * name, T & target) {
  const auto v = env(name);
  if (!v) return;
  try {
    std::size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      target = static_cast<T>(std::stod(*v, &used));
    } else {
      target = static_cast<T>(std::stoull(*v, &used));
    }
    if (used != v->size()) throw std::invalid_argument(*v);
  } catch (const std::exception &) {
    throw error(error_code::invalid_argument, std::string(name) + " has an invalid value '" + *v + "'");
  }
}

template <typename T>
void json_field(const json & j, const char * key, T & target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

void apply_file(run_config & cfg, const std::filesystem::path & path) {
  std::ifstream in(path);
  if (!in) throw error(error_code::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
    json_field(j, "lambda", cfg.lambda);
    json_field(j, "beta", cfg.beta);
    json_field(j, "keep_ratio", cfg.keep_ratio);
    if (j.contains("backtrace_mode")) cfg.mode = parse_backtrace_mode(j.at("backtrace_mode").get<std::string>());
    if (j.contains("penalty_position")) {
      cfg.position = parse_penalty_position(j.at("penalty_position").get<std::string>());
    }
    json_field(j, "stage1_fpm", cfg.stage1_fpm);
    json_field(j, "stage2_fps", cfg.stage2_fps);
    if (j.contains("localizer")) cfg.localizer = j.at("localizer").get<std::string>();
    json_field(j, "max_selected", cfg.max_selected);
    json_field(j, "include_options", cfg.include_options);
    json_field(j, "jobs", cfg.jobs);
    json_field(j, "seed", cfg.seed);
    json_field(j, "extract_cmd", cfg.extract_cmd);
    if (j.contains("paths")) {
      const auto & p = j.at("paths");
      if (p.contains("embeddings_dir")) cfg.embeddings_dir = p.at("embeddings_dir").get<std::string>();
      if (p.contains("qa_file")) cfg.qa_file = p.at("qa_file").get<std::string>();
      if (p.contains("plans_dir")) cfg.plans_dir = p.at("plans_dir").get<std::string>();
      if (p.contains("reports_dir")) cfg.reports_dir = p.at("reports_dir").get<std::string>();
    }
    if (j.contains("remote")) {
      const auto & r = j.at("remote");
      json_field(r, "url", cfg.remote.url);
      json_field(r, "model", cfg.remote.model);
      json_field(r, "timeout_ms", cfg.remote.timeout_ms);
      json_field(r, "max_in_flight", cfg.remote.max_in_flight);
      json_field(r, "attempts", cfg.remote.attempts);
      json_field(r, "embed_images", cfg.remote.embed_images);
    }
  } catch (const json::exception & e) {
    throw error(error_code::invalid_argument, "bad config " + path.string() + ": " + e.what());
  }
}

void apply_env(run_config & cfg) {
  env_number("LVS_LAMBDA", cfg.lambda);
  env_number("LVS_BETA", cfg.beta);
  env_number("LVS_KEEP_RATIO", cfg.keep_ratio);
  if (auto v = env("LVS_BACKTRACE_MODE")) cfg.mode = parse_backtrace_mode(*v);
  if (auto v = env("LVS_PENALTY_POSITION")) cfg.position = parse_penalty_position(*v);
  env_number("LVS_STAGE1_FPM", cfg.stage1_fpm);
  env_number("LVS_STAGE2_FPS", cfg.stage2_fps);
  if (auto v = env("LVS_LOCALIZER")) cfg.localizer = *v;
  env_number("LVS_MAX_SELECTED", cfg.max_selected);
  env_number("LVS_JOBS", cfg.jobs);
  env_number("LVS_SEED", cfg.seed);
  if (auto v = env("LVS_EXTRACT_CMD")) cfg.extract_cmd = *v;
  if (auto v = env("LVS_EMBEDDINGS_DIR")) cfg.embeddings_dir = *v;
  if (auto v = env("LVS_QA_FILE")) cfg.qa_file = *v;
  if (auto v = env("LVS_PLANS_DIR")) cfg.plans_dir = *v;
  if (auto v = env("LVS_REPORTS_DIR")) cfg.reports_dir = *v;
  cfg.remote = remote_config::from_env(cfg.remote);
}

}  // namespace

backtrace_mode parse_backtrace_mode(const std::string & text) {
  if (text == "min-end" || text == "min_end") return backtrace_mode::min_end;
  if (text == "faithful") return backtrace_mode::faithful;
  throw error(error_code::invalid_argument, "backtrace mode must be min-end or faithful, got '" + text + "'");
}

penalty_position parse_penalty_position(const std::string & text) {
  if (text == "index") return penalty_position::index;
  if (text == "timestamp") return penalty_position::timestamp;
  throw error(error_code::invalid_argument, "penalty position must be index or timestamp, got '" + text + "'");
}

std::string_view to_string(backtrace_mode mode) noexcept {
  return mode == backtrace_mode::min_end ? "min-end" : "faithful";
}

selector_config run_config::selector() const {
  selector_config cfg;
  cfg.lambda = lambda;
  cfg.beta = beta;
  cfg.target = lvs::keep_ratio{keep_ratio};
  cfg.mode = mode;
  cfg.position = position;
  return cfg;
}

void run_config::validate() const {
  const auto fail = [](const std::string & msg) { throw error(error_code::invalid_argument, msg); };
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(beta > 0.0)) fail("beta must be > 0");
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) fail("keep ratio must lie in (0, 1]");
  if (!(stage1_fpm > 0.0)) fail("stage-1 rate must be positive");
  if (!(stage2_fps > 0.0)) fail("stage-2 rate must be positive");
  if (jobs < 1) fail("jobs must be at least 1");
  if (max_selected < 1) fail("max_selected must be at least 1");
  if (localizer && *localizer != "mock" && *localizer != "oracle" && *localizer != "random" && *localizer != "remote") {
    fail("localizer must be one of mock, oracle, random, remote");
  }
}

run_config load_config(const std::optional<std::filesystem::path> & file) {
  run_config cfg;
  if (file) apply_file(cfg, *file);
  apply_env(cfg);
  return cfg;
}

}  // namespace lvs::cli
