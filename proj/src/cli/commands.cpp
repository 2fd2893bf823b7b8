#include "lvs/cli/commands.hpp"

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lvs/cli/config.hpp"
#include "lvs/cli/pipeline.hpp"
#include "lvs/error.hpp"
#include "lvs/eval.hpp"
#include "lvs/synthetic.hpp"

namespace lvs::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

time_window parse_window(const std::string & text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw error(error_code::invalid_argument, "expected START:END, got '" + text + "'");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception &) {
    throw error(error_code::invalid_argument, "expected START:END, got '" + text + "'");
  }
}

std::string read_text(const fs::path & path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(error_code::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit(const std::string & content, const std::string & out_path, std::ostream & out) {
  if (out_path.empty() || out_path == "-") {
    out << content;
  } else {
    write_atomic(out_path, content);
  }
}

fs::path plan_file(const fs::path & dir, const std::string & id) { return dir / (id + ".plan.json"); }

// Rethrows the first failure after reporting all of them.
void report_failures(const std::vector<std::exception_ptr> & failures, const std::vector<std::string> & ids,
                     std::ostream & err) {
  std::exception_ptr first;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    if (!first) first = failures[i];
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception & e) {
      err << ids[i] << ": " << e.what() << "\n";
    }
  }
  if (first) std::rethrow_exception(first);
}

struct global_flags {
  std::optional<std::string> config;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<double> keep_ratio;
  std::optional<std::string> backtrace_mode;
  std::optional<std::string> penalty_position;
  std::optional<double> stage1_fpm;
  std::optional<double> stage2_fps;
  std::optional<std::string> localizer;
  std::optional<std::string> localizer_url;
  std::optional<std::string> localizer_model;
  std::optional<int> localizer_timeout_ms;
  std::optional<std::size_t> max_selected;
  bool include_options = false;
  std::optional<std::string> extract_cmd;

  void attach(CLI::App & app) {
    app.add_option("--config", config, "JSON config file");
    app.add_option("--seed", seed, "Seed for random localizers and synthetic fixtures");
    app.add_option("--jobs", jobs, "Worker threads for batch work");
    app.add_option("--lambda", lambda, "Temporal penalty magnitude");
    app.add_option("--beta", beta, "Temporal penalty exponent");
    app.add_option("--keep-ratio", keep_ratio, "Fraction of stage-1 frames kept by the selector");
    app.add_option("--backtrace-mode", backtrace_mode, "min-end or faithful");
    app.add_option("--penalty-position", penalty_position, "index or timestamp");
    app.add_option("--stage1-fpm", stage1_fpm, "Stage-1 uniform rate, frames per minute");
    app.add_option("--stage2-fps", stage2_fps, "Stage-2 dense rate, frames per second");
    app.add_option("--localizer", localizer, "mock, oracle, random or remote");
    app.add_option("--localizer-url", localizer_url, "Remote localizer endpoint");
    app.add_option("--localizer-model", localizer_model, "Model name sent to the endpoint");
    app.add_option("--localizer-timeout-ms", localizer_timeout_ms, "Per-request timeout");
    app.add_option("--max-selected", max_selected, "Most segments the localizer may pick");
    app.add_flag("--include-options", include_options, "Send answer options to the localizer");
    app.add_option("--extract-cmd", extract_cmd, "Frame extraction template ({video_path} {t_s} {out_path})");
  }

  run_config resolve() const {
    run_config cfg = load_config(config ? std::optional<fs::path>(*config) : std::nullopt);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (lambda) cfg.lambda = *lambda;
    if (beta) cfg.beta = *beta;
    if (keep_ratio) cfg.keep_ratio = *keep_ratio;
    if (backtrace_mode) cfg.mode = parse_backtrace_mode(*backtrace_mode);
    if (penalty_position) cfg.position = parse_penalty_position(*penalty_position);
    if (stage1_fpm) cfg.stage1_fpm = *stage1_fpm;
    if (stage2_fps) cfg.stage2_fps = *stage2_fps;
    if (localizer) cfg.localizer = *localizer;
    if (localizer_url) cfg.remote.url = *localizer_url;
    if (localizer_model) cfg.remote.model = *localizer_model;
    if (localizer_timeout_ms) cfg.remote.timeout_ms = *localizer_timeout_ms;
    if (max_selected) cfg.max_selected = *max_selected;
    if (include_options) cfg.include_options = true;
    if (extract_cmd) cfg.extract_cmd = *extract_cmd;
    cfg.validate();
    return cfg;
  }
};

// ---- select ----

struct select_args {
  std::string embeddings;
  std::optional<std::size_t> k;
  std::optional<double> ratio;
  std::string out;
  std::string weights_csv;
};

int cmd_select(const run_config & cfg, const select_args & args, std::ostream & out) {
  if (args.k && args.ratio) throw error(error_code::invalid_argument, "give --k or --ratio, not both");
  const auto seq = load_embeddings(args.embeddings);
  selector_config sel = cfg.selector();
  if (args.k) {
    sel.target = target_count{*args.k};
  } else if (args.ratio) {
    sel.target = lvs::keep_ratio{*args.ratio};
  }
  const std::size_t k = resolve_k(sel, seq.n);
  const auto weights = build_weights(normalize(seq), sel);
  if (!args.weights_csv.empty()) {
    std::ostringstream csv;
    weights.write_csv(csv);
    write_atomic(args.weights_csv, csv.str());
  }
  const auto result = select_dp(weights, k, sel.mode);

  std::vector<double> times;
  for (std::size_t i : result.indices) times.push_back(seq.timestamps_s[i]);
  json j = {
      {"video_id", seq.video_id},
      {"k", k},
      {"mode", std::string(to_string(sel.mode))},
      {"lambda", sel.lambda},
      {"beta", sel.beta},
      {"indices", result.indices},
      {"timestamps", times},
      {"objective", result.objective},
  };
  emit(j.dump(2) + "\n", args.out, out);
  return k_exit_ok;
}

// ---- plan ----

struct plan_args {
  // single item
  std::string embeddings;
  std::optional<double> duration;
  std::string video_id;
  std::string id;
  std::string question;
  std::vector<std::string> options;
  std::string gt;
  std::string out;
  std::string timeline;
  std::string plan_mode = "rhs";
  std::size_t uniform_frames = 256;
  std::string video;
  std::string frames_dir;
  // batch
  std::string qa;
  std::string embeddings_dir;
  std::string out_dir;
  std::string timelines_dir;
};

sampling_plan plan_one(const run_config & cfg, const plan_job & job, const std::string & mode,
                       std::size_t uniform_frames) {
  if (mode == "oracle") {
    if (!job.target) throw error(error_code::invalid_argument, "oracle plans need a target segment");
    return plan_oracle(job.video_id, *job.target, rate::per_second(cfg.stage2_fps));
  }
  if (mode == "uniform") return plan_uniform(job.video_id, job.duration_s, uniform_frames);
  if (mode != "rhs") throw error(error_code::invalid_argument, "plan mode must be rhs, oracle or uniform");
  auto impl = make_localizer(cfg, job, "mock");
  return plan_rhs(cfg, job, *impl);
}

int cmd_plan_batch(const run_config & cfg, const plan_args & args, std::ostream & out, std::ostream & err) {
  const fs::path qa_path = args.qa.empty() ? cfg.qa_file : fs::path(args.qa);
  const fs::path out_dir = args.out_dir.empty() ? cfg.plans_dir : fs::path(args.out_dir);
  const fs::path emb_dir = args.embeddings_dir.empty() ? cfg.embeddings_dir : fs::path(args.embeddings_dir);
  if (out_dir.empty()) throw error(error_code::invalid_argument, "batch planning needs --out-dir");
  const auto records = load_qa_jsonl(qa_path);

  const bool needs_embeddings = args.plan_mode == "rhs" && cfg.keep_ratio < 1.0;
  std::vector<std::optional<fs::path>> emb_paths(records.size());
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!emb_dir.empty()) emb_paths[i] = find_embeddings(emb_dir, records[i].video_id);
    if (needs_embeddings && !emb_paths[i]) missing.push_back(records[i].id);
  }
  if (!missing.empty()) {
    std::string ids;
    for (const auto & id : missing) ids += (ids.empty() ? "" : ", ") + id;
    throw error(error_code::invalid_argument, "keep ratio < 1 needs embeddings; none found for " + ids);
  }

  std::vector<std::string> ids;
  for (const auto & rec : records) ids.push_back(rec.id);
  const auto failures = run_pool(records.size(), cfg.jobs, [&](std::size_t i) {
    auto job = job_from_record(records[i]);
    if (needs_embeddings) job.embeddings = load_embeddings(*emb_paths[i]);
    const auto plan = plan_one(cfg, job, args.plan_mode, args.uniform_frames);
    write_atomic(plan_file(out_dir, job.id), plan_to_json(plan));
    if (!args.timelines_dir.empty()) {
      write_atomic(fs::path(args.timelines_dir) / (job.id + ".svg"), render_timeline_svg(plan, job.target));
    }
  });
  report_failures(failures, ids, err);
  out << "planned " << records.size() << " items into " << out_dir.string() << "\n";
  return k_exit_ok;
}

int cmd_plan(const run_config & cfg, const plan_args & args, std::ostream & out, std::ostream & err) {
  if (!args.qa.empty() || (!cfg.qa_file.empty() && args.out.empty())) return cmd_plan_batch(cfg, args, out, err);

  plan_job job;
  if (!args.embeddings.empty()) job.embeddings = load_embeddings(args.embeddings);
  if (args.duration) {
    job.duration_s = *args.duration;
  } else if (job.embeddings) {
    job.duration_s = job.embeddings->duration_s;
  } else {
    throw error(error_code::invalid_argument, "give --duration or --embeddings");
  }
  job.video_id = !args.video_id.empty() ? args.video_id : job.embeddings ? job.embeddings->video_id : "video";
  job.id = args.id.empty() ? job.video_id : args.id;
  job.question = args.question;
  job.options = args.options;
  if (!args.gt.empty()) job.target = parse_window(args.gt);
  if (!args.video.empty()) {
    job.video_path = args.video;
    job.frames_dir = args.frames_dir.empty() ? fs::path(job.id + "_frames") : fs::path(args.frames_dir);
  }

  const auto plan = plan_one(cfg, job, args.plan_mode, args.uniform_frames);
  emit(plan_to_json(plan), args.out, out);
  if (!args.timeline.empty()) write_atomic(args.timeline, render_timeline_svg(plan, job.target));
  return k_exit_ok;
}

// ---- partition / nsd / timeline ----

int cmd_partition(const std::vector<double> & keyframes, double duration, const std::string & out_path,
                  std::ostream & out) {
  json segments = json::array();
  for (const auto & s : partition_segments(keyframes, duration)) {
    segments.push_back({{"index", s.index}, {"start_s", s.start_s}, {"end_s", s.end_s}});
  }
  emit(json{{"segments", segments}}.dump(2) + "\n", out_path, out);
  return k_exit_ok;
}

int cmd_nsd(const std::vector<std::string> & windows, std::ostream & out) {
  std::vector<time_window> parsed;
  for (const auto & w : windows) parsed.push_back(parse_window(w));
  const double nsd = estimate_nsd(parsed);
  out << json{{"nsd_fps", nsd}, {"interval_s", 1.0 / nsd}}.dump(2) << "\n";
  return k_exit_ok;
}

int cmd_timeline(const std::string & plan_path, const std::string & gt, const std::string & out_path,
                 std::ostream & out) {
  const auto plan = plan_from_json(read_text(plan_path));
  std::optional<time_window> window;
  if (!gt.empty()) window = parse_window(gt);
  emit(render_timeline_svg(plan, window), out_path, out);
  return k_exit_ok;
}

// ---- evaluate ----

std::map<std::string, sampling_plan> load_plans(const fs::path & dir) {
  std::map<std::string, sampling_plan> plans;
  if (dir.empty()) return plans;
  if (!fs::is_directory(dir)) throw error(error_code::io, "no plans directory " + dir.string());
  constexpr std::string_view k_suffix = ".plan.json";
  std::vector<fs::path> files;
  for (const auto & entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto & path : files) {
    const std::string name = path.filename().string();
    if (name.size() <= k_suffix.size() || name.compare(name.size() - k_suffix.size(), k_suffix.size(), k_suffix) != 0) {
      continue;
    }
    plans.emplace(name.substr(0, name.size() - k_suffix.size()), plan_from_json(read_text(path)));
  }
  return plans;
}

void write_report(const eval_report & report, const fs::path & reports_dir, std::ostream & out) {
  if (!reports_dir.empty()) {
    write_atomic(reports_dir / "report.json", report_to_json(report));
    write_atomic(reports_dir / "report.txt", report_table(report));
  }
  out << report_table(report);
}

int cmd_evaluate(const run_config & cfg, const std::string & qa, const std::string & replies,
                 const std::string & plans_dir, const std::string & out_dir, std::ostream & out) {
  const auto records = load_qa_jsonl(qa.empty() ? cfg.qa_file : fs::path(qa));
  if (replies.empty()) throw error(error_code::invalid_argument, "evaluate needs --replies");
  const auto reply_map = load_replies_jsonl(replies);
  const auto plans = load_plans(plans_dir.empty() ? cfg.plans_dir : fs::path(plans_dir));
  const auto report = evaluate(records, reply_map, plans);
  write_report(report, out_dir.empty() ? cfg.reports_dir : fs::path(out_dir), out);
  return k_exit_ok;
}

// ---- simulate ----

struct simulate_args {
  std::string out_dir;
  std::size_t items = 50;
  double duration_min = 45.39;
  std::string answerer = "correct";
  std::size_t dim = 16;
  bool timelines = false;
};

int cmd_simulate(const run_config & cfg, const simulate_args & args, std::ostream & out, std::ostream & err) {
  if (args.out_dir.empty()) throw error(error_code::invalid_argument, "simulate needs --out-dir");
  if (args.items == 0) throw error(error_code::invalid_argument, "simulate needs at least one item");
  if (!(args.duration_min > 0.0)) throw error(error_code::invalid_argument, "duration must be positive");
  synthetic::answerer answerer;
  if (args.answerer == "correct") {
    answerer = synthetic::answerer::correct;
  } else if (args.answerer == "random") {
    answerer = synthetic::answerer::random;
  } else {
    throw error(error_code::invalid_argument, "answerer must be correct or random");
  }

  const fs::path root = args.out_dir;
  const double duration_s = args.duration_min * 60.0;
  std::vector<qa_record> records;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < args.items; ++i) {
    records.push_back(synthetic::make_record(i, cfg.seed, duration_s));
    ids.push_back(records.back().id);
  }
  write_atomic(root / "qa.jsonl", qa_to_jsonl(records));

  const auto grid = uniform_timestamps(duration_s, rate::per_minute(cfg.stage1_fpm));
  std::vector<std::optional<sampling_plan>> plans(records.size());
  const auto failures = run_pool(records.size(), cfg.jobs, [&](std::size_t i) {
    auto job = job_from_record(records[i]);
    if (cfg.keep_ratio < 1.0) {
      const fs::path emb_path = root / "embeddings" / (job.video_id + ".emb");
      fs::create_directories(emb_path.parent_path());
      save_embeddings(synthetic::make_embeddings(job.video_id, grid, duration_s, args.dim, cfg.seed), emb_path,
                      embedding_format::binary);
      job.embeddings = load_embeddings(emb_path);
    }
    auto impl = make_localizer(cfg, job, "oracle");
    plans[i] = plan_rhs(cfg, job, *impl);
    write_atomic(plan_file(root / "plans", job.id), plan_to_json(*plans[i]));
    if (args.timelines) {
      write_atomic(root / "timelines" / (job.id + ".svg"), render_timeline_svg(*plans[i], job.target));
    }
  });
  report_failures(failures, ids, err);

  std::map<std::string, std::string> replies;
  std::map<std::string, sampling_plan> plan_map;
  for (std::size_t i = 0; i < records.size(); ++i) {
    replies.emplace(records[i].id, synthetic::make_reply(answerer, records[i], cfg.seed));
    plan_map.emplace(records[i].id, *plans[i]);
  }
  write_atomic(root / "replies.jsonl", replies_to_jsonl(replies));
  write_report(evaluate(records, replies, plan_map), root, out);
  return k_exit_ok;
}

}  // namespace

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err) {
  CLI::App app{"Two-stage frame sampling for long videos", "lvs"};
  app.require_subcommand(1);
  app.fallthrough();
  global_flags flags;
  flags.attach(app);

  select_args sel;
  auto * select = app.add_subcommand("select", "Pick k frames from an embedding file with the DP selector");
  select->add_option("--embeddings", sel.embeddings, "Embedding file (.emb or .csv)")->required();
  select->add_option("--k", sel.k, "Number of frames to keep");
  select->add_option("--ratio", sel.ratio, "Fraction of frames to keep");
  select->add_option("--out", sel.out, "Output JSON (default stdout)");
  select->add_option("--weights-csv", sel.weights_csv, "Also dump the weight matrix as CSV");

  plan_args pl;
  auto * plan = app.add_subcommand("plan", "Build a two-stage sampling plan");
  plan->add_option("--embeddings", pl.embeddings, "Stage-1 grid embeddings");
  plan->add_option("--duration", pl.duration, "Video duration in seconds");
  plan->add_option("--video-id", pl.video_id);
  plan->add_option("--id", pl.id, "Question id");
  plan->add_option("--question", pl.question);
  plan->add_option("--option", pl.options, "Answer option (repeat for A-D)");
  plan->add_option("--gt", pl.gt, "Ground-truth target START:END in seconds");
  plan->add_option("--out", pl.out, "Plan JSON (default stdout)");
  plan->add_option("--timeline", pl.timeline, "Also write an SVG timeline");
  plan->add_option("--plan-mode", pl.plan_mode, "rhs, oracle or uniform");
  plan->add_option("--uniform-frames", pl.uniform_frames, "Frame count for uniform plans");
  plan->add_option("--video", pl.video, "Video file handed to --extract-cmd");
  plan->add_option("--frames-dir", pl.frames_dir, "Directory for extracted frames");
  plan->add_option("--qa", pl.qa, "Plan every record of a QA JSONL file");
  plan->add_option("--embeddings-dir", pl.embeddings_dir, "Directory of <video_id>.emb files");
  plan->add_option("--out-dir", pl.out_dir, "Directory for <id>.plan.json files");
  plan->add_option("--timelines-dir", pl.timelines_dir, "Directory for <id>.svg timelines");

  std::vector<double> part_keyframes;
  double part_duration = 0.0;
  std::string part_out;
  auto * partition = app.add_subcommand("partition", "Split a video at keyframe midpoints");
  partition->add_option("--keyframes", part_keyframes, "Keyframe times, comma separated")->required()->delimiter(',');
  partition->add_option("--duration", part_duration, "Video duration in seconds")->required();
  partition->add_option("--out", part_out);

  std::vector<std::string> nsd_windows;
  auto * nsd = app.add_subcommand("nsd", "Necessary sampling density of a set of cue windows");
  nsd->add_option("--window", nsd_windows, "Cue window START:END (repeatable)")->required();

  std::string ev_qa, ev_replies, ev_plans, ev_out;
  auto * evaluate_cmd = app.add_subcommand("evaluate", "Score replies and aggregate plan statistics");
  evaluate_cmd->add_option("--qa", ev_qa, "QA JSONL");
  evaluate_cmd->add_option("--replies", ev_replies, "Replies JSONL");
  evaluate_cmd->add_option("--plans-dir", ev_plans, "Directory of <id>.plan.json files");
  evaluate_cmd->add_option("--out-dir", ev_out, "Directory for report.json and report.txt");

  std::string tl_plan, tl_gt, tl_out;
  auto * timeline = app.add_subcommand("timeline", "Render a plan as an SVG timeline");
  timeline->add_option("--plan", tl_plan)->required();
  timeline->add_option("--gt", tl_gt, "Ground-truth START:END");
  timeline->add_option("--out", tl_out);

  simulate_args sim;
  auto * simulate = app.add_subcommand("simulate", "End-to-end run on synthetic fixtures");
  simulate->add_option("--out-dir", sim.out_dir)->required();
  simulate->add_option("--items", sim.items);
  simulate->add_option("--duration-min", sim.duration_min, "Synthetic video length in minutes");
  simulate->add_option("--answerer", sim.answerer, "correct or random");
  simulate->add_option("--dim", sim.dim, "Synthetic embedding dimension");
  simulate->add_flag("--timelines", sim.timelines, "Write an SVG per item");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    return app.exit(e, out, err) == 0 ? k_exit_ok : k_exit_usage;
  }

  try {
    const run_config cfg = flags.resolve();
    if (*select) return cmd_select(cfg, sel, out);
    if (*plan) return cmd_plan(cfg, pl, out, err);
    if (*partition) return cmd_partition(part_keyframes, part_duration, part_out, out);
    if (*nsd) return cmd_nsd(nsd_windows, out);
    if (*evaluate_cmd) return cmd_evaluate(cfg, ev_qa, ev_replies, ev_plans, ev_out, out);
    if (*timeline) return cmd_timeline(tl_plan, tl_gt, tl_out, out);
    if (*simulate) return cmd_simulate(cfg, sim, out, err);
  } catch (const error & e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? k_exit_usage : k_exit_runtime;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return k_exit_runtime;
  }
  return k_exit_usage;
}

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err) {
  std::vector<const char *> argv{"lvs"};
  for (const auto & a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lvs::cli
