#include <doctest.h>

#include "morevqa/mock_backend.hpp"
#include "morevqa/planner.hpp"
#include "morevqa/prompt.hpp"
#include "morevqa/text.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace morevqa;

namespace {

WorldFixture ball_fixture() {
  auto f = support::blank_fixture("v1", 10);
  f.frames[5].caption = "a person is throwing a baseball in a field";
  f.frames[5].actions = {"throwing a baseball"};
  for (int i : {2, 3, 7}) f.frames[static_cast<std::size_t>(i)].objects.push_back({"ball", {0.2, 0.2, 0.4, 0.4}});
  f.frames[3].objects.push_back(support::object("catapult"));
  f.frames[4].objects.push_back(support::object("dog"));
  f.frames[4].objects.push_back(support::object("dog"));
  f.frames[4].objects.push_back(support::object("frisbee"));
  f.frames[4].actions = {"dog catching a frisbee"};
  f.frames[6].ocr_text = "exit";
  return f;
}

}  // namespace

TEST_CASE("text normalization") {
  CHECK(text::normalize("  The Dog's  BALL!? ") == "the dog s ball");
  CHECK(text::contains_phrase("pick up the red ball now", "red ball"));
  CHECK_FALSE(text::contains_phrase("a catapult", "cat"));
  CHECK(text::jaccard({"a", "b"}, {"b", "c", "d"}) == doctest::Approx(0.25));
  CHECK(text::jaccard({}, {}) == 0.0);
  CHECK(text::content_tokens("the dog is on a mat") == std::vector<std::string>{"dog", "mat"});
}

TEST_CASE("mock caption, verify and localize read the fixture") {
  const auto f = ball_fixture();
  CHECK(mock_caption(f, 5) == "a person is throwing a baseball in a field");
  CHECK(mock_verify_action(f, 5, "throwing a baseball"));
  CHECK(mock_verify_action(f, 5, "throwing"));
  CHECK(mock_verify_action(f, 5, "a person throwing a baseball hard"));
  CHECK_FALSE(mock_verify_action(f, 4, "throwing"));
  CHECK_FALSE(mock_verify_action(f, 5, ""));

  std::vector<int> all(10);
  for (int i = 0; i < 10; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto hits = mock_localize(f, "ball", all);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].first == 2);
  CHECK(hits[1].first == 3);
  CHECK(hits[2].first == 7);
  CHECK(hits[0].second == BoundingBox{0.2, 0.2, 0.4, 0.4});
  CHECK(mock_localize(f, "ball", {2, 4}).size() == 1);
  CHECK_THROWS_AS(mock_localize(f, "ball", {42}), MockError);
}

TEST_CASE("localize phrase matching is whole-word") {
  const auto f = ball_fixture();
  CHECK(mock_localize(f, "the ball", {2}).size() == 1);
  CHECK(mock_localize(f, "cat", {3}).empty());
  CHECK(mock_localize(f, "catapult", {3}).size() == 1);
  CHECK(mock_localize(f, "baseball", {2}).empty());
}

TEST_CASE("mock score is Jaccard over frame tokens") {
  auto f = support::blank_fixture("s", 3);
  f.frames[0].caption = "red ball";
  f.frames[1].caption = "red ball green cube";
  CHECK(mock_score(f, 0, "red ball") == doctest::Approx(1.0));
  CHECK(mock_score(f, 0, "blue cube") == doctest::Approx(0.0));
  CHECK(mock_score(f, 1, "red ball") == doctest::Approx(0.5));
}

TEST_CASE("mock vqa answers from the frame record") {
  const auto f = ball_fixture();
  CHECK(mock_vqa(f, 4, "how many dogs are there?", false) == "2");
  CHECK(mock_vqa(f, 4, "how many cats are there?", false) == "0");
  CHECK(mock_vqa(f, 4, "what is the dog doing?", false) == "dog catching a frisbee");
  CHECK(mock_vqa(f, 1, "what is the dog doing?", false) == "nothing");
  CHECK(mock_vqa(f, 4, "what is the dog interacting with?", false) == "frisbee");
  CHECK(mock_vqa(f, 5, "where is this?", false) == f.frames[5].caption);
  CHECK(mock_vqa(f, 6, "what does the sign say?", true) == "exit");
  CHECK(mock_vqa(f, 5, "what does the sign say?", true) == "no text");
}

TEST_CASE("prediction prompts round-trip") {
  prompt::PredictPrompt p{"why is the dog sad?", {"hungry", "tired"}, {"[frame 2] caption: a dog", "[frame 4] qa: x -> y"}};
  const auto text = prompt::render(p);
  CHECK(prompt::header_line(text) == "#predict");
  CHECK(prompt::parse_predict(text) == p);
  CHECK_FALSE(prompt::parse_predict("#planner:grounding\n").has_value());
  CHECK(prompt::line_body("[frame 2] caption: a dog") == "a dog");
  CHECK(prompt::line_body("plain") == "plain");

  prompt::PredictPrompt open{"what is shown?", {}, {}};
  CHECK(prompt::parse_predict(prompt::render(open)) == open);
}

TEST_CASE("planner prompts round-trip memory") {
  MemoryState m = MemoryState::initial(VideoMeta::make("v", 8, 1.0), "why?");
  m.event_queue = {"dog barking"};
  m.extra["sq_0"] = "what is the dog doing?";
  prompt::PlannerPrompt p{"grounding", "default", "why?", m};
  const auto back = prompt::parse_planner(prompt::render(p));
  REQUIRE(back.has_value());
  CHECK(back->stage == "grounding");
  CHECK(back->template_id == "default");
  CHECK(back->question == "why?");
  CHECK(back->memory == m);
}

TEST_CASE("overlap picks the best candidate, lowest index on ties") {
  const std::vector<std::string> ctx = {"[frame 1] caption: a red ball", "[frame 2] qa: what? -> the ball is red"};
  CHECK(prompt::overlap("red ball", ctx) == 4);
  CHECK(prompt::best_by_overlap({"green cube", "red ball", "red"}, ctx) == 1);
  CHECK(prompt::best_by_overlap({"cube", "tree"}, ctx) == 0);
  CHECK(prompt::best_by_overlap({"red", "ball"}, ctx) == 0);
}

TEST_CASE("mock complete answers prediction and planner prompts") {
  prompt::PredictPrompt p{"what happened?", {"cat", "dog", "red ball", "tree"}, {"[frame 1] caption: a red ball rolls"}};
  CHECK(mock_complete(prompt::render(p), nullptr) == "red ball");
  p.candidates = {"dog", "tree"};
  CHECK(mock_complete(prompt::render(p), nullptr) == "dog");

  auto f = ball_fixture();
  prompt::PredictPrompt open{"what is thrown?", {}, {"[frame 5] caption: throwing a baseball"}};
  CHECK(mock_complete(prompt::render(open), &f) == "throwing a baseball");
  f.qa_notes = "a fastball; a curveball";
  CHECK(mock_complete(prompt::render(open), &f) == "unknown");
  CHECK(mock_complete(prompt::render(open), nullptr) == "unknown");

  const auto m = MemoryState::initial(VideoMeta::make("v", 20, 1.0), "why is the cat lying on its back in the end of the video?");
  const auto plan = mock_complete(prompt::render(prompt::PlannerPrompt{"event_parsing", "default", m.question, m}), nullptr);
  CHECK(plan.find("trim(\"end\")") != std::string::npos);
  CHECK_THROWS_AS(mock_complete("hello", nullptr), MockError);
}

TEST_CASE("open answer phrases come from notes or the frames") {
  auto f = ball_fixture();
  const auto phrases = open_answer_phrases(f);
  CHECK(phrases.front() == "ball");
  CHECK(std::find(phrases.begin(), phrases.end(), "exit") != phrases.end());
  f.qa_notes = "Alpha; beta ;alpha";
  CHECK(open_answer_phrases(f) == std::vector<std::string>{"alpha", "beta"});
}

TEST_CASE("typed session helpers over the mock backend") {
  ToolSession s(support::mock_of({ball_fixture()}));
  CHECK(s.caption("v1", 5) == "a person is throwing a baseball in a field");
  CHECK(s.verify_action("v1", 5, "throwing"));
  CHECK(s.score("v1", 0, "frame 0 of v1") == doctest::Approx(1.0));
  const auto loc = s.localize("v1", "ball", {0, 1, 2, 3});
  REQUIRE(loc.size() == 2);
  CHECK(loc[1].frame_id == 3);
  CHECK(s.vqa("v1", 6, "text?", true) == "exit");
  CHECK(s.dispatch_count() == 5);
  CHECK(s.trace().size() == 5);
  CHECK(s.trace()[0].request.id == 1);

  try {
    s.caption("v1", 99);
    FAIL("expected ToolError");
  } catch (const ToolError& e) {
    CHECK(std::string(e.what()).find("backend: ") != std::string::npos);
  }
  try {
    s.caption("nope", 0);
    FAIL("expected ToolError");
  } catch (const ToolError& e) {
    CHECK(std::string(e.what()).find("unknown video") != std::string::npos);
  }
  const auto bad = s.dispatch(ToolMethod::caption, std::nullopt, 1, json::object());
  CHECK_FALSE(bad.ok);
  CHECK(bad.error->rfind("invalid: ", 0) == 0);
}

TEST_CASE("session rejects mismatched ids and malformed results") {
  struct Liar : ToolBackend {
    int mode = 0;
    ToolResponse handle(const ToolRequest& req) override {
      if (mode == 0) return ToolResponse::success(req.id + 1, "x");
      return ToolResponse::success(req.id, 42);
    }
  };
  auto liar = std::make_shared<Liar>();
  ToolSession s(liar);
  auto r = s.dispatch(ToolMethod::caption, "v", 0, json::object());
  CHECK(r.error->rfind("transport: ", 0) == 0);
  liar->mode = 1;
  r = s.dispatch(ToolMethod::caption, "v", 0, json::object());
  CHECK(r.error->rfind("backend: malformed response", 0) == 0);
}

TEST_CASE("request validation") {
  ToolRequest r{1, ToolMethod::vqa, "v", 0, json{{"question", "q"}}};
  CHECK(validate_request(r).empty());
  r.args["prefix"] = 3;
  CHECK_FALSE(validate_request(r).empty());
  r = {1, ToolMethod::localize, "v", std::nullopt, json{{"phrase", "p"}, {"frames", {1, -2}}}};
  CHECK_FALSE(validate_request(r).empty());
  r.args["frames"] = {1, 2};
  CHECK(validate_request(r).empty());
  r = {1, ToolMethod::complete, std::nullopt, std::nullopt, json{{"prompt", "p"}}};
  CHECK(validate_request(r).empty());
  r.method = ToolMethod::score;
  CHECK_FALSE(validate_request(r).empty());
  r = {1, ToolMethod::caption, "v", -1, json::object()};
  CHECK_FALSE(validate_request(r).empty());
}

TEST_CASE("wire JSON round-trip and canonical keys") {
  ToolRequest r{7, ToolMethod::localize, "v", std::nullopt, json{{"phrase", "p"}, {"frames", {1, 2}}}};
  CHECK(request_from_wire(to_wire(r)) == r);
  ToolRequest same = r;
  same.id = 8;
  CHECK(request_key(same) == request_key(r));
  same.args["phrase"] = "q";
  CHECK(request_key(same) != request_key(r));

  const auto ok = ToolResponse::success(3, json::array());
  CHECK(response_from_wire(to_wire(ok)) == ok);
  const auto err = ToolResponse::failure(3, kBackendPrefix, "boom");
  CHECK(err.error == "backend: boom");
  CHECK(response_from_wire(to_wire(err)) == err);

  CHECK_THROWS_AS(request_from_wire(json::array()), std::invalid_argument);
  CHECK_THROWS_AS(request_from_wire(json{{"id", 1}, {"method", "fly"}, {"args", json::object()}}), std::invalid_argument);
  CHECK_THROWS_AS(request_from_wire(json{{"id", 1}, {"method", "caption"}}), std::invalid_argument);
}

TEST_CASE("every mock response validates or is an error") {
  auto f = ball_fixture();
  MockBackend mock(support::corpus_of({f}));
  oracle::Rng rng(5);
  const std::vector<std::string> phrases = {"ball", "dog", "throwing", "", "what is the dog doing?", "how many"};
  for (int i = 0; i < 2000; ++i) {
    ToolRequest r;
    r.id = i;
    r.method = kAllToolMethods[oracle::pick(rng, 0, 5)];
    if (oracle::coin(rng, 0.95)) r.video_id = oracle::coin(rng, 0.9) ? "v1" : "zz";
    if (oracle::coin(rng, 0.9)) r.frame_id = oracle::pick(rng, -1, 11);
    const auto& phrase = phrases[static_cast<std::size_t>(oracle::pick(rng, 0, 5))];
    r.args = json{{"question", phrase}, {"phrase", phrase}, {"action", phrase}, {"text", phrase},
                  {"prompt", oracle::coin(rng) ? "#predict\nquestion: " + phrase : phrase}};
    if (oracle::coin(rng)) r.args["frames"] = json::array({oracle::pick(rng, 0, 12), 1});
    const auto resp = mock.handle(r);
    CHECK(resp.id == r.id);
    CHECK(validate_response(r.method, resp).empty());
  }
}
