#include "lvs/cli/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "lvs/error.hpp"

namespace lvs::cli {

namespace {

std::string shell_quote(const std::string & text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

void replace_all(std::string & text, const std::string & from, const std::string & to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

std::string format_time(double t_s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", t_s);
  return buf;
}

}  // namespace

plan_job job_from_record(const qa_record & rec) {
  plan_job job;
  job.id = rec.id;
  job.video_id = rec.video_id;
  job.duration_s = rec.duration_s;
  job.question = rec.question;
  job.options.assign(rec.options.begin(), rec.options.end());
  job.target = rec.target;
  return job;
}

std::unique_ptr<localizer> make_localizer(const run_config & cfg, const plan_job & job,
                                          const std::string & default_kind) {
  const std::string kind = cfg.localizer.value_or(default_kind);
  if (kind == "mock") return std::make_unique<mock_localizer>();
  if (kind == "oracle") {
    if (!job.target) {
      throw error(error_code::invalid_argument, "oracle localizer needs a ground-truth target for " + job.id);
    }
    return std::make_unique<oracle_localizer>(*job.target);
  }
  if (kind == "random") return std::make_unique<random_localizer>(cfg.seed);
  if (kind == "remote") return std::make_unique<remote_localizer>(cfg.remote);
  throw error(error_code::invalid_argument, "unknown localizer '" + kind + "'");
}

sampling_plan plan_rhs(const run_config & cfg, const plan_job & job, localizer & impl) {
  const rate stage1_rate = rate::per_minute(cfg.stage1_fpm);
  const rate dense_rate = rate::per_second(cfg.stage2_fps);
  const embedding_sequence * seq = job.embeddings ? &*job.embeddings : nullptr;
  auto stage1 = plan_stage1(job.duration_s, stage1_rate, cfg.keep_ratio, seq, cfg.selector());

  std::vector<std::string> frame_refs;
  if (job.video_path && !cfg.extract_cmd.empty()) {
    std::filesystem::create_directories(job.frames_dir);
    for (const auto & kf : stage1.keyframes) {
      char name[64];
      std::snprintf(name, sizeof(name), "stage1_%05zu.jpg", kf.index);
      const auto out = job.frames_dir / name;
      extract_frame(cfg.extract_cmd, *job.video_path, kf.t_s, out);
      frame_refs.push_back(out.string());
    }
  }

  // The oracle may select every segment that overlaps the target, so its cap
  // is the segment count.
  const std::size_t cap = impl.name() == "oracle" ? stage1.segments.size() : cfg.max_selected;
  auto request = make_request(stage1, job.question, job.options, cap, frame_refs);
  request.include_options = cfg.include_options;
  const auto located = localize(impl, request);

  auto plan = assemble_plan(job.video_id, job.duration_s, stage1_rate, std::move(stage1), located.selected,
                            dense_rate);

  if (job.video_path && !cfg.extract_cmd.empty()) {
    for (std::size_t i = 0; i < plan.stage2_timestamps.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "stage2_%05zu.jpg", i);
      extract_frame(cfg.extract_cmd, *job.video_path, plan.stage2_timestamps[i], job.frames_dir / name);
    }
  }
  return plan;
}

void extract_frame(const std::string & cmd_template, const std::filesystem::path & video, double t_s,
                   const std::filesystem::path & out) {
  std::string cmd = cmd_template;
  replace_all(cmd, "{video_path}", shell_quote(video.string()));
  replace_all(cmd, "{t_s}", format_time(t_s));
  replace_all(cmd, "{out_path}", shell_quote(out.string()));
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    throw error(error_code::io, "frame extraction failed (status " + std::to_string(status) + "): " + cmd);
  }
}

void write_atomic(const std::filesystem::path & path, const std::string & content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw error(error_code::io, "cannot write " + tmp.string());
    out << content;
    if (!out) throw error(error_code::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw error(error_code::io, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::vector<std::exception_ptr> run_pool(std::size_t count, int jobs, const std::function<void(std::size_t)> & fn) {
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
  if (threads <= 1) {
    worker();
    return failures;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  return failures;
}

std::optional<std::filesystem::path> find_embeddings(const std::filesystem::path & dir, const std::string & video_id) {
  for (const char * ext : {".emb", ".csv"}) {
    auto p = dir / (video_id + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace lvs::cli
