#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morevqa/fixture.hpp"
#include "morevqa/tools.hpp"

namespace morevqa {

/// Raised by mock tool functions; surfaces as a `backend:` error.
class MockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frames (from `frames`) holding an object whose normalized name equals the
/// phrase or occurs in it as a whole-word run. One entry per matching object.
std::vector<std::pair<int, BoundingBox>> mock_localize(const WorldFixture& fixture, const std::string& phrase,
                                                       const std::vector<int>& frames);

/// Jaccard similarity of the text's token set and the frame's caption,
/// object-name and action tokens.
double mock_score(const WorldFixture& fixture, int frame_id, const std::string& text);

/// True when an action equals the phrase, or either contains the other as a whole-word run.
bool mock_verify_action(const WorldFixture& fixture, int frame_id, const std::string& action);

std::string mock_caption(const WorldFixture& fixture, int frame_id);

/// Rule-based answer from the frame record; `ocr` returns the frame's text.
std::string mock_vqa(const WorldFixture& fixture, int frame_id, const std::string& question, bool ocr);

/// `#planner:<stage>` runs the rule-based planner; `#predict` picks the option
/// with maximal context overlap. `fixture` supplies open-ended answer phrases.
std::string mock_complete(const std::string& prompt, const WorldFixture* fixture);

/// Answer phrases a fixture offers for open-ended questions, in frame order.
std::vector<std::string> open_answer_phrases(const WorldFixture& fixture);

/// Deterministic backend answering every method from world fixtures.
class MockBackend : public ToolBackend {
 public:
  explicit MockBackend(std::shared_ptr<const FixtureCorpus> corpus);
  ToolResponse handle(const ToolRequest& req) override;

  const FixtureCorpus& corpus() const { return *corpus_; }

 private:
  std::shared_ptr<const FixtureCorpus> corpus_;
};

}  // namespace morevqa
