#pragma once

#include <string>
#include <vector>

#include "morevqa/types.hpp"

namespace morevqa {

/// Keyword-table planner standing in for the stage prompts. Always emits a
/// grammar-valid flat program (possibly `noop()`); reads only memory.
std::string rule_plan(StageName stage, const MemoryState& memory);

/// Pieces of the stage-1 analysis, exposed for tests and statistics.
struct QuestionAnalysis {
  std::optional<TemporalRegion> region;
  std::string revised_question;  // question with the temporal phrase removed
  QAType qa_type = QAType::other;
  bool require_ocr = false;
  TemporalConjunction conjunction = TemporalConjunction::none;
  std::vector<std::string> events;  // main event first, reference event second
};

QuestionAnalysis analyze_question(const std::string& question);

/// "the dog" for the event "dog lying on its back"; empty without events.
std::string event_subject(const std::string& event_text);

/// Fixed sub-question templates for the reasoning stage.
std::vector<std::string> subquestion_templates(QAType type, const std::vector<std::string>& events);

}  // namespace morevqa
