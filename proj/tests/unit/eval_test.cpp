#include "lvs/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "lvs/error.hpp"
#include "test_util.hpp"

namespace lvs {
namespace {

error_code code_of(const std::function<void()> & fn) {
  try {
    fn();
  } catch (const error & e) {
    return e.code();
  }
  ADD_FAILURE() << "no lvs::error thrown";
  return error_code::io;
}

qa_record record(std::string id, char answer, time_window target = {100, 280}) {
  qa_record r;
  r.id = std::move(id);
  r.video_id = "vid-" + r.id;
  r.question = "What is shown?";
  r.options = {"one", "two", "three", "four"};
  r.answer = answer;
  r.target = target;
  r.duration_s = 2700.0;
  return r;
}

sampling_plan plan_with_frames(std::size_t stage1, std::size_t stage2) {
  sampling_plan p;
  p.video_id = "v";
  p.duration_s = 2700.0;
  p.stage1_keyframes.resize(stage1);
  p.stage2_timestamps.resize(stage2);
  p.segments = {{0, 0, 100}, {1, 100, 2700}};
  p.budget = compute_budget(p, p.duration_s);
  return p;
}

// Coverage by elementary intervals between all endpoints, a different
// algorithm from the interval merge under test.
double coverage_oracle(const std::vector<time_window> & pred, time_window gt) {
  std::vector<double> cuts{gt.start_s, gt.end_s};
  for (const auto & w : pred) {
    cuts.push_back(std::clamp(w.start_s, gt.start_s, gt.end_s));
    cuts.push_back(std::clamp(w.end_s, gt.start_s, gt.end_s));
  }
  std::sort(cuts.begin(), cuts.end());
  double covered = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const bool in = std::any_of(pred.begin(), pred.end(), [&](const auto & w) { return w.start_s <= mid && mid <= w.end_s; });
    if (in) covered += cuts[i + 1] - cuts[i];
  }
  return covered / gt.length();
}

TEST(ParseChoiceTest, Patterns) {
  EXPECT_EQ(parse_choice("(B)"), 'B');
  EXPECT_EQ(parse_choice("The answer is (B)."), 'B');
  EXPECT_EQ(parse_choice("C"), 'C');
  EXPECT_FALSE(parse_choice("I am not sure.").has_value());
  EXPECT_EQ(parse_choice("I think it is (C) because A is wrong"), 'C');
  EXPECT_EQ(parse_choice("The answer is D."), 'D');
  EXPECT_EQ(parse_choice("Answer: A"), 'A');
  EXPECT_EQ(parse_choice("answer:B"), 'B');
  EXPECT_EQ(parse_choice("B. The man leaves."), 'B');
  EXPECT_EQ(parse_choice("  C"), 'C');
  EXPECT_EQ(parse_choice("D) because"), 'D');
  EXPECT_EQ(parse_choice("A"), 'A');
  EXPECT_EQ(parse_choice("Both (A) and answer is B"), 'A');
  EXPECT_EQ(parse_choice("A man walks in"), 'A');
  EXPECT_FALSE(parse_choice("Because the answer is unclear").has_value());
  EXPECT_FALSE(parse_choice("E.").has_value());
  EXPECT_FALSE(parse_choice("").has_value());
  EXPECT_FALSE(parse_choice("Banana").has_value());
}

TEST(CoverageTest, Examples) {
  const time_window gt{30, 90};
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<time_window>{{0, 60}}, gt), 0.5);
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<time_window>{{100, 200}, {300, 400}}, time_window{150, 350}), 0.5);
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<time_window>{{30, 60}, {40, 90}}, gt), 1.0);
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<time_window>{{100, 200}}, gt), 0.0);
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<time_window>{}, gt), 0.0);
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<time_window>{{0, 1000}}, gt), 1.0);
  EXPECT_EQ(code_of([] { coverage_rate(std::vector<time_window>{}, time_window{5, 5}); }),
            error_code::invalid_argument);
}

TEST(CoverageTest, MatchesOracleAndGrowsWithPredictions) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const double s = test::uniform(rng, 0, 1000);
    const time_window gt{s, s + test::uniform(rng, 1, 300)};
    std::vector<time_window> pred;
    double prev = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double a = test::uniform(rng, s - 200, s + 400);
      pred.push_back({a, a + test::uniform(rng, 0, 150)});
      const double c = coverage_rate(pred, gt);
      EXPECT_NEAR(c, coverage_oracle(pred, gt), 1e-9);
      EXPECT_GE(c, prev - 1e-12);
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
      prev = c;
    }
  }
}

TEST(EvaluateTest, AccuracyFramesAndCoverage) {
  const std::vector<qa_record> recs{record("q1", 'A'), record("q2", 'B'), record("q3", 'C'), record("q4", 'D')};
  const std::map<std::string, std::string> replies{
      {"q1", "(A)"}, {"q2", "The answer is C"}, {"q3", "no idea"}, {"q4", "D."}};
  std::map<std::string, sampling_plan> plans{
      {"q1", plan_with_frames(45, 45)}, {"q2", plan_with_frames(45, 90)}, {"q3", plan_with_frames(45, 180)}};
  plans["q1"].selected = {1};
  plans["q2"].selected = {0};
  plans["q3"].mode = plan_mode::uniform;
  const auto rep = evaluate(recs, replies, plans);
  EXPECT_EQ(rep.n_items, 4u);
  EXPECT_EQ(rep.n_correct, 2u);
  EXPECT_EQ(rep.n_unparsable, 1u);
  EXPECT_DOUBLE_EQ(rep.accuracy, 0.5);
  EXPECT_EQ(rep.n_with_plans, 3u);
  EXPECT_DOUBLE_EQ(rep.mean_total_frames, 150.0);
  EXPECT_NEAR(rep.mean_sd, 150.0 / 2700.0, 1e-12);
  EXPECT_EQ(rep.n_with_coverage, 2u);
  EXPECT_DOUBLE_EQ(rep.mean_coverage, 0.5);  // q1 covers all of [100, 280], q2 none
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_FALSE(rep.rows[2].predicted.has_value());
  EXPECT_FALSE(rep.rows[2].coverage.has_value());
  EXPECT_FALSE(rep.rows[3].total_frames.has_value());

  const auto json_text = report_to_json(rep);
  EXPECT_NE(json_text.find("\"accuracy\": 0.5"), std::string::npos);
  EXPECT_NE(report_table(rep).find("50.0"), std::string::npos);
}

TEST(EvaluateTest, IdMismatches) {
  const std::vector<qa_record> recs{record("q1", 'A'), record("q2", 'B'), record("q3", 'C')};
  try {
    evaluate(recs, {{"q2", "B"}}, {});
    FAIL();
  } catch (const error & e) {
    EXPECT_EQ(e.code(), error_code::missing_reply);
    EXPECT_NE(std::string(e.what()).find("q1, q3"), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { evaluate(recs, {{"q1", "A"}, {"q2", "B"}, {"q3", "C"}, {"q9", "D"}}, {}); }),
            error_code::id_mismatch);
  EXPECT_EQ(code_of([&] {
              evaluate(recs, {{"q1", "A"}, {"q2", "B"}, {"q3", "C"}}, {{"zz", plan_with_frames(1, 1)}});
            }),
            error_code::id_mismatch);
  EXPECT_EQ(code_of([&] {
              const std::vector<qa_record> dup{record("q1", 'A'), record("q1", 'B')};
              evaluate(dup, {{"q1", "A"}}, {});
            }),
            error_code::id_mismatch);
  const auto empty = evaluate(std::vector<qa_record>{}, {}, {});
  EXPECT_EQ(empty.n_items, 0u);
  EXPECT_EQ(empty.accuracy, 0.0);
}

TEST(EvaluateTest, RecordOrderDoesNotMatter) {
  std::mt19937_64 rng(11);
  std::vector<qa_record> recs;
  std::map<std::string, std::string> replies;
  for (int i = 0; i < 40; ++i) {
    const std::string id = "q" + std::to_string(100 + i);
    recs.push_back(record(id, static_cast<char>('A' + rng() % 4)));
    replies[id] = std::string("(") + static_cast<char>('A' + rng() % 4) + ")";
  }
  const auto base = report_to_json(evaluate(recs, replies, {}));
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(recs.begin(), recs.end(), rng);
    EXPECT_EQ(report_to_json(evaluate(recs, replies, {})), base);
  }
}

TEST(QaJsonlTest, RoundTripAndValidation) {
  const std::vector<qa_record> recs{record("a", 'A'), record("b", 'D', {0, 2700})};
  const auto text = qa_to_jsonl(recs);
  const auto back = parse_qa_jsonl(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].answer, 'D');
  EXPECT_EQ(back[1].target, (time_window{0, 2700}));
  EXPECT_EQ(back[0].options[2], "three");
  EXPECT_EQ(qa_to_jsonl(back), text);
  EXPECT_EQ(code_of([&] { parse_qa_jsonl(text + text); }), error_code::id_mismatch);
  EXPECT_EQ(code_of([] { parse_qa_jsonl("{not json}\n"); }), error_code::parse_error);
  auto bad = record("c", 'A', {300, 200});
  EXPECT_EQ(code_of([&] { validate(bad); }), error_code::out_of_range);

  const std::map<std::string, std::string> replies{{"a", "(A)"}, {"b", "line\nbreak"}};
  EXPECT_EQ(parse_replies_jsonl(replies_to_jsonl(replies)), replies);
}

TEST(TimelineTest, TickCountsAndDeterminism) {
  sampling_plan plan;
  plan.video_id = "a<b>&\"c\"";
  plan.duration_s = 2700.0;
  for (std::size_t i = 0; i < 45; ++i) plan.stage1_keyframes.push_back({i * 4, 30.0 + 60.0 * i});
  std::vector<double> kf;
  for (const auto & k : plan.stage1_keyframes) kf.push_back(k.t_s);
  plan.segments = partition_segments(kf, plan.duration_s);
  plan.selected = {3, 4, 5};
  plan.stage2_timestamps = plan_stage2(plan.segments, plan.selected, rate::per_second(1));
  ASSERT_EQ(plan.stage2_timestamps.size(), 180u);

  const auto svg = render_timeline_svg(plan, time_window{200, 380});
  const auto count = [&](std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = svg.find(needle); pos != std::string::npos; pos = svg.find(needle, pos + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count("class=\"tick "), 225u);
  EXPECT_EQ(count("class=\"tick s1\""), 45u);
  EXPECT_EQ(count("class=\"tick s2\""), 180u);
  EXPECT_EQ(count("class=\"sel\""), 3u);
  EXPECT_EQ(count("class=\"gt\""), 1u);
  EXPECT_EQ(count("class=\"axis\""), 1u);
  EXPECT_NE(svg.find("a&lt;b&gt;&amp;&quot;c&quot;"), std::string::npos);
  EXPECT_EQ(render_timeline_svg(plan, time_window{200, 380}), svg);

  test::temp_dir dir;
  emit_timeline(plan, time_window{200, 380}, dir.path() / "t.svg");
  EXPECT_EQ(test::read_file(dir.path() / "t.svg"), svg);

  plan.selected.clear();
  plan.stage2_timestamps.clear();
  const auto bare = render_timeline_svg(plan, std::nullopt);
  EXPECT_EQ(bare.find("class=\"sel\""), std::string::npos);
  EXPECT_EQ(bare.find("class=\"gt\""), std::string::npos);
  EXPECT_EQ(bare.find("tick s2"), std::string::npos);
}

}  // namespace
}  // namespace lvs
