#include <doctest.h>

#include "morevqa/planner.hpp"
#include "morevqa/program.hpp"

using namespace morevqa;

namespace {

MemoryState memory_for(const std::string& question) {
  return MemoryState::initial(VideoMeta::make("v", 30, 1.0), question);
}

std::string stage1(const std::string& question) { return rule_plan(StageName::event_parsing, memory_for(question)); }

bool has(const std::string& program, const std::string& piece) { return program.find(piece) != std::string::npos; }

int count_of(const std::string& program, const std::string& piece) {
  int n = 0;
  for (auto p = program.find(piece); p != std::string::npos; p = program.find(piece, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("temporal region, type and event") {
  const auto p = stage1("why is the cat lying on its back at the end of the video?");
  CHECK(has(p, "trim(\"end\")"));
  CHECK(has(p, "classify(\"why\")"));
  CHECK(has(p, "parse_event(\"cat lying on its back\")"));
  CHECK(has(p, "revise_question(\"why is the cat lying on its back?\")"));
}

TEST_CASE("questions without events") {
  const auto p = stage1("what is in the background?");
  CHECK(has(p, "classify(\"what\")"));
  CHECK(count_of(p, "parse_event") == 0);
  MemoryState m = memory_for("what is in the background?");
  CHECK(rule_plan(StageName::grounding, m) == "noop()");
}

TEST_CASE("no temporal words means no trim") {
  const auto p = stage1("why is the dog barking at the mailman?");
  CHECK_FALSE(has(p, "trim("));
  CHECK_FALSE(has(p, "revise_question"));
}

TEST_CASE("reading questions need ocr") {
  CHECK(has(stage1("what does the sign say?"), "require_ocr(true)"));
  CHECK_FALSE(has(stage1("what is the dog doing?"), "require_ocr"));
}

TEST_CASE("two events joined by a conjunction") {
  const auto p = stage1("why is the boy walking over to the shelf after playing with the person?");
  CHECK(count_of(p, "parse_event") == 2);
  CHECK(has(p, "set_conjunction(\"after\")"));
  const auto a = analyze_question("why is the boy walking over to the shelf after playing with the person?");
  REQUIRE(a.events.size() == 2);
  CHECK(a.events[0] == "boy walking over to the shelf");
  CHECK(a.events[1] == "boy playing with the person");
  CHECK(analyze_question("what did the girl do before the dog jumped?").conjunction == TemporalConjunction::before);
  CHECK(analyze_question("what was the man holding while the baby cried?").conjunction ==
        TemporalConjunction::while_);
}

TEST_CASE("region phrases") {
  CHECK(analyze_question("what happens in the middle of the clip?").region == TemporalRegion::middle);
  CHECK(analyze_question("what is the girl doing at the very beginning?").region == TemporalRegion::beginning);
  CHECK(analyze_question("what does the dog finally do?").region == TemporalRegion::end);
  CHECK_FALSE(analyze_question("where does the road end?").region.has_value());
}

TEST_CASE("question types") {
  CHECK(analyze_question("how many cups are on the table?").qa_type == QAType::counting);
  CHECK(analyze_question("how does the man open the box?").qa_type == QAType::how);
  CHECK(analyze_question("where is the cat?").qa_type == QAType::location);
  CHECK(analyze_question("describe the scene").qa_type == QAType::description);
  CHECK(analyze_question("explain the outcome").qa_type == QAType::explanation);
  CHECK(analyze_question("is it raining?").qa_type == QAType::other);
}

TEST_CASE("grounding and reasoning programs follow memory") {
  MemoryState m = memory_for("q");
  m.event_queue = {"dog barking"};
  CHECK(rule_plan(StageName::grounding, m) == "localize(\"dog barking\")\nverify_action(\"dog barking\")");
  m.event_queue = {"dog barking", "cat running"};
  const auto g = rule_plan(StageName::grounding, m);
  CHECK(g.find("cat running") < g.find("anchor_then_shift"));
  CHECK(g.find("anchor_then_shift") < g.find("dog barking"));

  m.qa_type = QAType::why;
  const auto r = rule_plan(StageName::reasoning, m);
  CHECK(has(r, "subquestion(\"what is the dog doing?\")"));
  CHECK(has(r, "vqa_on_grounded(\"what is the dog interacting with?\")"));
  m.qa_type = QAType::what;
  CHECK(rule_plan(StageName::reasoning, m) == "noop()");
  CHECK(subquestion_templates(QAType::counting, {"cups on the table"}) ==
        std::vector<std::string>{"how many cups are visible?"});
  CHECK(event_subject("dog lying on its back") == "the dog");
}

TEST_CASE("emitted programs always parse in flat mode") {
  for (const char* q : {"why is the cat lying on its back at the end of the video?", "what does the sign say?",
                        "how many \"quoted\" birds are there?", "", "???", "why after before while"}) {
    MemoryState m = memory_for(q);
    for (auto s : {StageName::event_parsing, StageName::grounding, StageName::reasoning})
      CHECK_NOTHROW(lang::parse(rule_plan(s, m), lang::Mode::flat));
  }
}
