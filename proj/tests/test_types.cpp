#include <doctest.h>

#include "morevqa/types.hpp"
#include "oracles.hpp"

using namespace morevqa;

TEST_CASE("uniform_sample picks") {
  CHECK(uniform_sample(10, 10) == FrameWindow::range(0, 9));
  CHECK(uniform_sample(100, 4).ids() == std::vector<int>{12, 37, 62, 87});
  CHECK(uniform_sample(3, 16).ids() == std::vector<int>{0, 1, 2});
  CHECK(uniform_sample(1, 1).ids() == std::vector<int>{0});
  CHECK_THROWS_AS(uniform_sample(0, 3), InvariantError);
  CHECK_THROWS_AS(uniform_sample(5, 0), InvariantError);
}

TEST_CASE("uniform_sample matches the reference sampler") {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int f = oracle::pick(rng, 1, 5000);
    const int n = oracle::pick(rng, 1, 300);
    const auto got = uniform_sample(f, n);
    REQUIRE(got.ids() == oracle::uniform_sample(f, n));
    CHECK(got.size() == static_cast<std::size_t>(std::min(f, n)));
    CHECK(got.within(f));
    CHECK(got == uniform_sample(f, n));
  }
}

TEST_CASE("FrameWindow invariants") {
  CHECK_THROWS_AS(FrameWindow({3, 2}), InvariantError);
  CHECK_THROWS_AS(FrameWindow({1, 1}), InvariantError);
  CHECK_THROWS_AS(FrameWindow({-1, 2}), InvariantError);
  const FrameWindow w({2, 5, 9});
  CHECK(w.middle() == 5);
  CHECK(FrameWindow({2, 5, 9, 11}).middle() == 9);
  CHECK(w.contains(5));
  CHECK_FALSE(w.contains(4));
  CHECK(FrameWindow({5, 9}).subset_of(w));
  CHECK_FALSE(FrameWindow({5, 6}).subset_of(w));
  CHECK(w.within(10));
  CHECK_FALSE(w.within(9));
  CHECK(FrameWindow::range(4, 3).empty());
  CHECK_THROWS_AS(FrameWindow().middle(), InvariantError);
}

TEST_CASE("windows convert to half-open seconds") {
  CHECK(to_seconds(FrameWindow({14, 15, 18}), 2.0) == TimeWindow{7.0, 9.5});
  CHECK(to_seconds(FrameWindow({0}), 1.0) == TimeWindow{0.0, 1.0});
  CHECK_THROWS_AS(to_seconds(FrameWindow(), 1.0), InvariantError);
}

TEST_CASE("VideoMeta") {
  const auto v = VideoMeta::make("v", 80, 4.0);
  CHECK(v.duration_s == doctest::Approx(20.0));
  CHECK(v.frame_at(3.3) == 13);
  CHECK(v.frame_at(99) == 79);
  CHECK(v.frame_at(-1) == 0);
  CHECK_THROWS_AS(VideoMeta::make("v", 0, 1.0), InvariantError);
  CHECK_THROWS_AS(VideoMeta::make("v", 5, 0.0), InvariantError);
}

TEST_CASE("QAItem needs exactly one answer form") {
  QAItem q{"why?", {"a", "b"}, 1, std::nullopt, std::nullopt};
  CHECK_NOTHROW(q.validate());
  q.answer_mc = 2;
  CHECK_THROWS_AS(q.validate(), InvariantError);
  q.answer_open = std::vector<std::string>{"x"};
  q.answer_mc = 0;
  CHECK_THROWS_AS(q.validate(), InvariantError);
  q.answer_mc.reset();
  CHECK_NOTHROW(q.validate());
  q.gt_window_s = TimeWindow{3, 1};
  CHECK_THROWS_AS(q.validate(), InvariantError);
}

TEST_CASE("enum names round-trip") {
  for (auto t : kAllQATypes) CHECK(parse_qa_type(to_string(t)) == t);
  for (auto c : {TemporalConjunction::before, TemporalConjunction::after, TemporalConjunction::while_,
                 TemporalConjunction::none})
    CHECK(parse_conjunction(to_string(c)) == c);
  CHECK(to_string(TemporalConjunction::while_) == "while");
  for (auto r : {TemporalRegion::beginning, TemporalRegion::middle, TemporalRegion::end, TemporalRegion::whole})
    CHECK(parse_region(to_string(r)) == r);
  CHECK_FALSE(parse_qa_type("whom").has_value());
  CHECK_FALSE(parse_stage_name("").has_value());
}

TEST_CASE("RunConfig validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.decode_temperature = 0.5;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = {};
  c.n_context_frames = 0;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = {};
  c.score_threshold = 1.0;
  CHECK_THROWS_AS(c.validate(), InvariantError);
}

TEST_CASE("memory and stage records survive JSON") {
  MemoryState m = MemoryState::initial(VideoMeta::make("v", 12, 1.0), "why is the dog barking?");
  m.event_queue = {"dog barking", "cat running"};
  m.conjunction = TemporalConjunction::while_;
  m.qa_type = QAType::why;
  m.require_ocr = true;
  m.extra["sq_0"] = "what is the dog doing?";
  m.grounded_window = FrameWindow({3, 4});

  StageRecord r;
  r.stage_name = StageName::grounding;
  r.planner_prompt = "#planner:grounding";
  r.emitted_program = "localize(\"dog\")";
  r.parsed_program = "localize(\"dog\")";
  r.tool_calls.push_back({"localize", json{{"phrase", "dog"}}, json::array({3, 4})});
  r.memory_before = MemoryState::initial(VideoMeta::make("v", 12, 1.0), "q");
  r.memory_after = m;

  const json j = r;
  CHECK(j.at("memory_after").at("conjunction") == "while");
  CHECK(j.at("memory_after").at("frame_ids").size() == 12);
  CHECK(j.get<StageRecord>() == r);
  CHECK(json(m).get<MemoryState>() == m);
}
