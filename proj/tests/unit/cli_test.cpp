#include "lvs/cli/commands.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lvs/cli/config.hpp"
#include "lvs/cli/pipeline.hpp"
#include "lvs/error.hpp"
#include "lvs/eval.hpp"
#include "lvs/synthetic.hpp"
#include "test_util.hpp"

namespace lvs::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct outcome {
  int code;
  std::string out;
  std::string err;
};

outcome run_cli(const std::vector<std::string> & args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Scene-structured embeddings for the 4 FPM grid of a `duration_s` video.
fs::path write_synthetic(const fs::path & dir, const std::string & video_id, double duration_s, uint64_t seed = 1) {
  const auto grid = uniform_timestamps(duration_s, rate::per_minute(4));
  const auto seq = synthetic::make_embeddings(video_id, grid, duration_s, 16, seed);
  const auto path = dir / (video_id + ".emb");
  save_embeddings(seq, path, embedding_format::binary);
  return path;
}

fs::path write_constant(const fs::path & dir, const std::string & video_id, double duration_s) {
  embedding_sequence seq;
  seq.video_id = video_id;
  seq.timestamps_s = uniform_timestamps(duration_s, rate::per_minute(4));
  seq.n = seq.timestamps_s.size();
  seq.d = 2;
  seq.duration_s = duration_s;
  for (std::size_t i = 0; i < seq.n; ++i) {
    seq.vectors.push_back(1.0);
    seq.vectors.push_back(0.0);
  }
  const auto path = dir / (video_id + ".emb");
  save_embeddings(seq, path, embedding_format::binary);
  return path;
}

TEST(CliSelectTest, RatioAndK) {
  test::temp_dir dir;
  const auto emb = write_synthetic(dir.path(), "v", 2700.0);

  const auto quarter = run_cli({"select", "--embeddings", emb.string(), "--ratio", "0.25"});
  ASSERT_EQ(quarter.code, 0) << quarter.err;
  const auto j = json::parse(quarter.out);
  EXPECT_EQ(j.at("indices").size(), 45u);
  EXPECT_EQ(j.at("timestamps").size(), 45u);
  EXPECT_EQ(j.at("lambda"), 10.0);
  EXPECT_EQ(j.at("beta"), 0.3);
  EXPECT_EQ(j.at("mode"), "min-end");

  // Objective recomputed from the definition of W on the selected indices.
  const auto seq = normalize(load_embeddings(emb));
  const auto idx = j.at("indices").get<std::vector<std::size_t>>();
  double objective = 0.0;
  for (std::size_t t = 1; t < idx.size(); ++t) {
    objective += test::cosine(seq.row(idx[t - 1]), seq.row(idx[t])) -
                 10.0 * std::pow(static_cast<double>(idx[t] - idx[t - 1]) / 180.0, 0.3);
  }
  EXPECT_NEAR(j.at("objective").get<double>(), objective, 1e-9);

  const auto all = run_cli({"select", "--embeddings", emb.string(), "--ratio", "1"});
  ASSERT_EQ(all.code, 0);
  const auto every = json::parse(all.out).at("indices").get<std::vector<std::size_t>>();
  ASSERT_EQ(every.size(), 180u);
  for (std::size_t i = 0; i < every.size(); ++i) EXPECT_EQ(every[i], i);

  const auto csv = dir.path() / "w.csv";
  const auto three = run_cli({"select", "--embeddings", emb.string(), "--k", "3", "--out",
                              (dir.path() / "sel.json").string(), "--weights-csv", csv.string()});
  ASSERT_EQ(three.code, 0);
  EXPECT_EQ(json::parse(test::read_file(dir.path() / "sel.json")).at("k"), 3);
  const auto csv_text = test::read_file(csv);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv_text.begin(), csv_text.end(), '\n')), 1u + 180u * 179u / 2u);
}

TEST(CliSelectTest, ErrorsAndExitCodes) {
  test::temp_dir dir;
  const auto emb = write_synthetic(dir.path(), "v", 600.0);
  EXPECT_EQ(run_cli({"select", "--embeddings", emb.string(), "--k", "0"}).code, k_exit_usage);
  EXPECT_EQ(run_cli({"select", "--embeddings", emb.string(), "--k", "2", "--ratio", "0.5"}).code, k_exit_usage);
  EXPECT_EQ(run_cli({"select", "--embeddings", (dir.path() / "none.emb").string()}).code, k_exit_runtime);
  EXPECT_EQ(run_cli({"select"}).code, k_exit_usage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, k_exit_usage);
  EXPECT_EQ(run_cli({"--help"}).code, k_exit_ok);
  EXPECT_EQ(run_cli({"--lambda", "-1", "select", "--embeddings", emb.string()}).code, k_exit_usage);
  test::write_file(dir.path() / "bad.csv", "x,y\n1,2\n");
  EXPECT_EQ(run_cli({"select", "--embeddings", (dir.path() / "bad.csv").string()}).code, k_exit_usage);
}

TEST(CliPlanTest, OracleLocalizerCoversTheTarget) {
  const auto r = run_cli({"--localizer", "oracle", "--keep-ratio", "1", "plan", "--duration", "2723.4", "--gt",
                          "500:680", "--question", "q"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto plan = plan_from_json(r.out);
  std::vector<time_window> windows;
  for (std::size_t s : plan.selected) windows.push_back(plan.segments[s].window());
  EXPECT_EQ(coverage_rate(windows, {500, 680}), 1.0);
  for (std::size_t s : plan.selected) {
    EXPECT_GT(std::min(plan.segments[s].end_s, 680.0) - std::max(plan.segments[s].start_s, 500.0), 0.0);
  }
  EXPECT_EQ(plan.stage1_keyframes.size(), 181u);
}

TEST(CliPlanTest, FortyFiveMinuteDefaultsGiveTheFullBudget) {
  test::temp_dir dir;
  const auto emb = write_constant(dir.path(), "v45", 2700.0);

  // Find three consecutive segments spanning exactly 180 s under the default
  // selector, then hand their union to the oracle as the target.
  const auto seq = load_embeddings(emb);
  const auto s1 = plan_stage1(2700.0, rate::per_minute(4), 0.25, &seq);
  ASSERT_EQ(s1.keyframes.size(), 45u);
  std::optional<time_window> target;
  for (std::size_t i = 1; i + 3 < s1.segments.size() && !target; ++i) {
    const double len = s1.segments[i + 2].end_s - s1.segments[i].start_s;
    if (len == 180.0) target = time_window{s1.segments[i].start_s, s1.segments[i + 2].end_s};
  }
  ASSERT_TRUE(target.has_value());

  char gt[64];
  std::snprintf(gt, sizeof(gt), "%.17g:%.17g", target->start_s, target->end_s);
  const auto r = run_cli({"--localizer", "oracle", "plan", "--embeddings", emb.string(), "--gt", gt, "--timeline",
                          (dir.path() / "t.svg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto plan = plan_from_json(r.out);
  EXPECT_EQ(plan.selected.size(), 3u);
  EXPECT_EQ(plan.budget.stage1_frames, 45u);
  EXPECT_EQ(plan.budget.stage2_frames, 180u);
  EXPECT_EQ(plan.budget.total_frames, 225u);
  EXPECT_TRUE(fs::exists(dir.path() / "t.svg"));
}

TEST(CliPlanTest, MockLocalizerAndUniformMode) {
  test::temp_dir dir;
  const auto emb = write_synthetic(dir.path(), "v", 2700.0);
  const auto mock = run_cli({"plan", "--embeddings", emb.string(), "--question", "q", "--out",
                             (dir.path() / "p.json").string()});
  ASSERT_EQ(mock.code, 0) << mock.err;
  const auto plan = plan_from_json(test::read_file(dir.path() / "p.json"));
  EXPECT_EQ(plan.selected, (std::vector<std::size_t>{22}));
  EXPECT_EQ(plan.video_id, "v");

  const auto uni = run_cli({"plan", "--plan-mode", "uniform", "--duration", "2723.4", "--uniform-frames", "256"});
  ASSERT_EQ(uni.code, 0);
  EXPECT_NEAR(plan_from_json(uni.out).budget.sd_full_video, 0.094, 0.001);

  const auto oracle = run_cli({"plan", "--plan-mode", "oracle", "--duration", "2723.4", "--gt", "500:680"});
  ASSERT_EQ(oracle.code, 0);
  EXPECT_EQ(plan_from_json(oracle.out).budget.total_frames, 180u);
  EXPECT_EQ(plan_from_json(oracle.out).budget.sd_full_video, 1.0);
}

TEST(CliPlanTest, MissingEmbeddingsIsAValidationError) {
  EXPECT_EQ(run_cli({"plan", "--duration", "2700"}).code, k_exit_usage);

  test::temp_dir dir;
  const std::vector<qa_record> recs{synthetic::make_record(0, 1, 2700.0)};
  test::write_file(dir.path() / "qa.jsonl", qa_to_jsonl(recs));
  const auto r = run_cli({"plan", "--qa", (dir.path() / "qa.jsonl").string(), "--embeddings-dir",
                          dir.path().string(), "--out-dir", (dir.path() / "plans").string()});
  EXPECT_EQ(r.code, k_exit_usage);
  EXPECT_NE(r.err.find(recs[0].id), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.path() / "plans"));
}

TEST(CliPlanTest, LocalizerFailureWritesNoPlan) {
  test::temp_dir dir;
  const auto out = dir.path() / "p.json";
  const auto r = run_cli({"--localizer", "remote", "--localizer-url", "http://127.0.0.1:9/v1/localize",
                          "--localizer-timeout-ms", "200", "--keep-ratio", "1", "plan", "--duration", "600",
                          "--out", out.string()});
  EXPECT_EQ(r.code, k_exit_runtime);
  EXPECT_FALSE(fs::exists(out));
}

TEST(CliPlanTest, ExtractCommandReceivesEveryFrame) {
  test::temp_dir dir;
  const auto frames = dir.path() / "frames";
  const auto r = run_cli({"--keep-ratio", "1", "--extract-cmd", "echo {t_s} > {out_path}", "plan", "--duration",
                          "300", "--video", (dir.path() / "it's.mp4").string(), "--frames-dir", frames.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto plan = plan_from_json(r.out);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto & e : fs::directory_iterator(frames)) ++files;
  EXPECT_EQ(files, plan.stage1_keyframes.size() + plan.stage2_timestamps.size());
  EXPECT_EQ(test::read_file(frames / "stage1_00000.jpg"), "7.500\n");
}

TEST(CliEvaluateTest, HandCountedAccuracy) {
  test::temp_dir dir;
  std::vector<qa_record> recs;
  for (std::size_t i = 0; i < 4; ++i) recs.push_back(synthetic::make_record(i, 5, 2700.0));
  test::write_file(dir.path() / "qa.jsonl", qa_to_jsonl(recs));
  std::map<std::string, std::string> replies;
  replies[recs[0].id] = std::string("(") + recs[0].answer + ")";
  replies[recs[1].id] = std::string("The answer is ") + recs[1].answer;
  replies[recs[2].id] = "I am not sure.";
  replies[recs[3].id] = recs[3].answer == 'A' ? "B" : "A";
  test::write_file(dir.path() / "replies.jsonl", replies_to_jsonl(replies));

  const auto r = run_cli({"evaluate", "--qa", (dir.path() / "qa.jsonl").string(), "--replies",
                          (dir.path() / "replies.jsonl").string(), "--out-dir", (dir.path() / "rep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(test::read_file(dir.path() / "rep" / "report.json"));
  EXPECT_EQ(report.at("n_correct"), 2);
  EXPECT_EQ(report.at("n_unparsable"), 1);
  EXPECT_EQ(report.at("accuracy"), 0.5);
  EXPECT_EQ(test::read_file(dir.path() / "rep" / "report.txt"), r.out);

  test::write_file(dir.path() / "empty.jsonl", "");
  const auto empty = run_cli({"evaluate", "--qa", (dir.path() / "qa.jsonl").string(), "--replies",
                              (dir.path() / "empty.jsonl").string()});
  EXPECT_NE(empty.code, 0);
  EXPECT_NE(empty.err.find(recs[0].id), std::string::npos);

  replies["stray"] = "(A)";
  test::write_file(dir.path() / "extra.jsonl", replies_to_jsonl(replies));
  const auto extra = run_cli({"evaluate", "--qa", (dir.path() / "qa.jsonl").string(), "--replies",
                              (dir.path() / "extra.jsonl").string()});
  EXPECT_NE(extra.code, 0);
  EXPECT_NE(extra.err.find("stray"), std::string::npos);
}

TEST(CliEvaluateTest, OraclePlansCoverEveryTarget) {
  test::temp_dir dir;
  std::vector<qa_record> recs;
  std::map<std::string, std::string> replies;
  fs::create_directories(dir.path() / "emb");
  for (std::size_t i = 0; i < 6; ++i) {
    recs.push_back(synthetic::make_record(i, 9, 2723.4));
    write_synthetic(dir.path() / "emb", recs.back().video_id, 2723.4, i);
    replies[recs.back().id] = "(A)";
  }
  test::write_file(dir.path() / "qa.jsonl", qa_to_jsonl(recs));
  test::write_file(dir.path() / "replies.jsonl", replies_to_jsonl(replies));

  const auto planned = run_cli({"--localizer", "oracle", "--jobs", "3", "plan", "--qa",
                                (dir.path() / "qa.jsonl").string(), "--embeddings-dir",
                                (dir.path() / "emb").string(), "--out-dir", (dir.path() / "plans").string()});
  ASSERT_EQ(planned.code, 0) << planned.err;
  const auto r = run_cli({"evaluate", "--qa", (dir.path() / "qa.jsonl").string(), "--replies",
                          (dir.path() / "replies.jsonl").string(), "--plans-dir", (dir.path() / "plans").string(),
                          "--out-dir", (dir.path() / "rep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(test::read_file(dir.path() / "rep" / "report.json"));
  EXPECT_EQ(report.at("n_with_coverage"), 6);
  EXPECT_EQ(report.at("mean_coverage"), 1.0);
}

TEST(CliMiscTest, PartitionNsdAndTimeline) {
  const auto part = run_cli({"partition", "--keyframes", "30,90,150", "--duration", "180"});
  ASSERT_EQ(part.code, 0);
  const auto segs = json::parse(part.out).at("segments");
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[1].at("start_s"), 60.0);
  EXPECT_EQ(segs[2].at("end_s"), 180.0);
  EXPECT_EQ(run_cli({"partition", "--keyframes", "90,30", "--duration", "180"}).code, k_exit_usage);

  const auto nsd = run_cli({"nsd", "--window", "10:12", "--window", "40:50"});
  ASSERT_EQ(nsd.code, 0);
  EXPECT_EQ(json::parse(nsd.out).at("nsd_fps"), 0.5);
  EXPECT_EQ(run_cli({"nsd", "--window", "ten"}).code, k_exit_usage);

  test::temp_dir dir;
  const auto plan_path = dir.path() / "p.json";
  ASSERT_EQ(run_cli({"--keep-ratio", "1", "plan", "--duration", "600", "--out", plan_path.string()}).code, 0);
  const auto tl = run_cli({"timeline", "--plan", plan_path.string(), "--gt", "100:200"});
  ASSERT_EQ(tl.code, 0);
  EXPECT_EQ(tl.out.rfind("<svg", 0), 0u);
  EXPECT_NE(tl.out.find("class=\"gt\""), std::string::npos);
}

TEST(CliConfigTest, FlagsOverrideEnvironmentOverrideFile) {
  test::temp_dir dir;
  const auto emb = write_synthetic(dir.path(), "v", 600.0);
  const auto cfg_path = dir.path() / "cfg.json";
  test::write_file(cfg_path, R"({"lambda": 3, "beta": 0.7, "remote": {"timeout_ms": 10}})");
  const auto lambda_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"--config", cfg_path.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), {"select", "--embeddings", emb.string()});
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return json::parse(r.out);
  };

  EXPECT_EQ(lambda_of({}).at("lambda"), 3.0);
  EXPECT_EQ(lambda_of({}).at("beta"), 0.7);
  ::setenv("LVS_LAMBDA", "4", 1);
  EXPECT_EQ(lambda_of({}).at("lambda"), 4.0);
  EXPECT_EQ(lambda_of({"--lambda", "5"}).at("lambda"), 5.0);
  ::unsetenv("LVS_LAMBDA");

  const auto file_only = load_config(cfg_path);
  EXPECT_EQ(file_only.remote.timeout_ms, 10);
  EXPECT_EQ(file_only.stage1_fpm, 4.0);
  const auto defaults = load_config(std::nullopt);
  EXPECT_EQ(defaults.lambda, 10.0);
  EXPECT_EQ(defaults.beta, 0.3);
  EXPECT_EQ(defaults.keep_ratio, 0.25);
  EXPECT_EQ(defaults.stage2_fps, 1.0);
  EXPECT_EQ(defaults.max_selected, 2u);

  test::write_file(cfg_path, R"({"jobs": 0})");
  EXPECT_THROW(load_config(cfg_path).validate(), error);
  test::write_file(cfg_path, "{");
  EXPECT_THROW(load_config(cfg_path), error);
}

TEST(CliSimulateTest, SameSeedSameBytes) {
  test::temp_dir a;
  test::temp_dir b;
  test::temp_dir c;
  const std::vector<std::string> common{"--seed", "7", "--jobs", "4", "simulate", "--items", "6", "--timelines"};
  auto args = common;
  args.insert(args.end(), {"--out-dir", a.path().string()});
  ASSERT_EQ(run_cli(args).code, 0);
  args = common;
  args.insert(args.end(), {"--out-dir", b.path().string()});
  ASSERT_EQ(run_cli(args).code, 0);

  std::size_t compared = 0;
  for (const auto & entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a.path());
    EXPECT_EQ(test::read_file(entry.path()), test::read_file(b.path() / rel)) << rel;
    ++compared;
  }
  // qa, embeddings with sidecars, plans, timelines, replies, report pair
  EXPECT_EQ(compared, 1u + 12u + 6u + 6u + 1u + 2u);

  ASSERT_EQ(run_cli({"--seed", "8", "simulate", "--items", "6", "--out-dir", c.path().string()}).code, 0);
  EXPECT_NE(test::read_file(a.path() / "qa.jsonl"), test::read_file(c.path() / "qa.jsonl"));
  const auto report = json::parse(test::read_file(a.path() / "report.json"));
  EXPECT_EQ(report.at("accuracy"), 1.0);
  EXPECT_EQ(report.at("mean_coverage"), 1.0);
}

}  // namespace
}  // namespace lvs::cli
