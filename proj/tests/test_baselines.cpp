#include <doctest.h>

#include "morevqa/baselines.hpp"
#include "morevqa/prompt.hpp"
#include "morevqa/replay.hpp"
#include "support.hpp"

using namespace morevqa;

namespace {

QAItem mc(const std::string& q, std::vector<std::string> cands) {
  return QAItem{q, std::move(cands), 0, std::nullopt, std::nullopt};
}

std::size_t caption_lines(const std::string& prompt_text) {
  const auto p = prompt::parse_predict(prompt_text);
  REQUIRE(p.has_value());
  return p->context_lines.size();
}

lang::ProgramFile program(const std::string& text) { return lang::parse_program_file(text); }

const WorldFixture& oracle_video(const std::string& id) { return *support::oracle_corpus()->find(id); }

}  // namespace

TEST_CASE("caption frames follow fps and fraction") {
  const auto v = VideoMeta::make("v", 90, 30.0);
  CHECK(jcef_frames(v, {}).ids() == std::vector<int>{0, 30, 60});
  CHECK(jcef_frames(v, {2.0, 1.0}).ids() == std::vector<int>{0, 15, 30, 45, 60, 75});
  CHECK(jcef_frames(v, {1.0, 0.0}).empty());
  CHECK(jcef_frames(VideoMeta::make("w", 40, 1.0), {1.0, 0.25}).size() == 10);
  CHECK(jcef_frames(VideoMeta::make("short", 5, 30.0), {}).ids() == std::vector<int>{0});
  CHECK_THROWS_AS(jcef_frames(v, {1.0, 1.5}), InvariantError);
}

TEST_CASE("caption-only baseline prompt") {
  ToolSession s(support::mock_of({support::blank_fixture("t", 13)}));
  const auto v = VideoMeta::make("t", 13, 1.0);
  const auto q = mc("what is shown?", {"frame 3", "a cat"});
  auto out = run_jcef(v, q, {}, s);
  CHECK(caption_lines(out.prediction_prompt) == 13);
  CHECK(out.prediction_prompt.find("[frame 5] caption: frame 5 of t") != std::string::npos);
  CHECK(out.stage_records.size() == 1);
  CHECK(out.stage_records[0].tool_calls.size() == 14);

  out = run_jcef(v, q, {1.0, 0.0}, s);
  CHECK(caption_lines(out.prediction_prompt) == 0);
  CHECK(run_llm_only(q, s).prediction_prompt == out.prediction_prompt);
  CHECK(run_jcef(v, q, {}, s).prediction_prompt == run_jcef(v, q, {}, s).prediction_prompt);
}

TEST_CASE("question-only baseline") {
  ToolSession s(support::mock_of({}));
  const auto out = run_llm_only(mc("which?", {"x", "y", "z"}), s);
  REQUIRE(out.mc_index.has_value());
  CHECK(*out.mc_index >= 0);
  CHECK(*out.mc_index < 3);
  const auto open = run_llm_only(QAItem{"which?", {}, std::nullopt, std::vector<std::string>{"x"}, std::nullopt}, s);
  CHECK(open.answer == "unknown");
  CHECK(s.trace().back().request.video_id == std::nullopt);
}

TEST_CASE("degenerate program equals the question-only baseline") {
  const auto& f = oracle_video("oracle-v03");
  ToolSession s(std::make_shared<MockBackend>(support::oracle_corpus()));
  const auto q = mc("why is the dog barking?", {"hungry", "bored", "scared"});
  const auto a = run_single_stage(f.meta(), q, s, program("#mode=extended\nreturn llm_query(question)\n"));
  const auto b = run_llm_only(q, s);
  CHECK(a.answer == b.answer);
  CHECK(a.mc_index == b.mc_index);
  CHECK(a.prediction_prompt == b.prediction_prompt);
  CHECK_FALSE(a.failure.has_value());
}

TEST_CASE("early-frame program grounds on the wrong frames") {
  const auto& f = oracle_video("oracle-v01");
  ToolSession s(std::make_shared<MockBackend>(support::oracle_corpus()));
  const auto file = lang::load_program_file(support::oracle_dir() / "programs" / "early_frame_bias.mvp");
  const auto q = mc("why is the dog lying on its back at the end of the video?", {"sad", "playful", "jealous"});
  const auto out = run_single_stage(f.meta(), q, s, file);
  REQUIRE_FALSE(out.failure.has_value());
  REQUIRE(out.grounded_window.has_value());
  for (int frame : *out.grounded_window) CHECK((frame < 35 || frame > 37));
  CHECK(out.stage_records[0].memory_after.extra.count("steps") == 1);
}

TEST_CASE("program failures are structured") {
  const auto& f = oracle_video("oracle-v02");
  ToolSession s(std::make_shared<MockBackend>(support::oracle_corpus()));
  const auto q = mc("why?", {"a", "b"});

  auto out = run_single_stage(f.meta(), q, s, program("#mode=extended\nreturn vqa(frame, question)\n"));
  REQUIRE(out.failure.has_value());
  CHECK(out.failure->kind == "runtime_error");
  CHECK(out.failure->stage == "single_stage");
  CHECK(out.failure->message.find("unbound_variable") != std::string::npos);
  CHECK_FALSE(out.mc_index.has_value());

  out = run_single_stage(f.meta(), q, s, program("#mode=flat\nnoop()\n"));
  CHECK(out.failure->kind == "parse_error");

  out = run_single_stage(f.meta(), q, s, program("#mode=extended\nx = caption(100000)\n"));
  CHECK(out.failure->kind == "runtime_error");
  CHECK(out.failure->message.find("dispatch_failure") != std::string::npos);

  out = run_single_stage(f.meta(), q, s,
                         program("#mode=extended\nfor a in frames:\n    for b in frames:\n        for c in frames:\n"
                                 "            len(frames)\n"));
  CHECK(out.failure->kind == "runtime_error");
  CHECK(out.failure->message.find("step_budget") != std::string::npos);

  out = run_single_stage(f.meta(), q, s, program("#mode=extended\nfor y in []:\n    x = 4\n"));
  REQUIRE(out.failure.has_value());
  CHECK(out.failure->kind == "no_answer");

  out = run_single_stage(f.meta(), q, s, std::nullopt);
  CHECK(out.failure->kind == "planner_error");
  CHECK(out.stage_records[0].planner_prompt.rfind("#planner:single_stage", 0) == 0);
}

TEST_CASE("program results map onto candidates") {
  const auto& f = oracle_video("oracle-v02");
  ToolSession s(std::make_shared<MockBackend>(support::oracle_corpus()));
  const auto q = mc("why?", {"alpha", "beta", "gamma"});
  CHECK(run_single_stage(f.meta(), q, s, program("#mode=extended\nreturn 2\n")).answer == "gamma");
  CHECK(run_single_stage(f.meta(), q, s, program("#mode=extended\nreturn \"BETA\"\n")).mc_index == 1);
  CHECK(run_single_stage(f.meta(), q, s, program("#mode=extended\nreturn 7\n")).answer == "7");
  CHECK(run_single_stage(f.meta(), q, s, program("#mode=extended\nreturn len(append([1], 2))\n")).answer == "gamma");
}

TEST_CASE("replay misses escape single-stage runs") {
  support::TempDir dir("ss-replay");
  ToolSession live(record_session(std::make_shared<MockBackend>(support::oracle_corpus()), dir / "rec.jsonl"));
  const auto& f = oracle_video("oracle-v04");
  const auto q = mc("why?", {"a", "b"});
  run_single_stage(f.meta(), q, live, program("#mode=extended\nreturn caption(1)\n"));
  ToolSession replay(replay_session(dir / "rec.jsonl"));
  CHECK_NOTHROW(run_single_stage(f.meta(), q, replay, program("#mode=extended\nreturn caption(1)\n")));
  CHECK_THROWS_AS(run_single_stage(f.meta(), q, replay, program("#mode=extended\nreturn caption(2)\n")),
                  ReplayMissError);
}
