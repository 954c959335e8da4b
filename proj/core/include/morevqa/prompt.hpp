#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morevqa/types.hpp"

namespace morevqa::prompt {

inline constexpr std::string_view kPredictHeader = "#predict";
inline constexpr std::string_view kPlannerHeaderPrefix = "#planner:";

/// Prediction prompt: question, numbered candidates (multiple choice only)
/// and a context block of `[frame K] kind: text` lines.
struct PredictPrompt {
  std::string question;
  std::vector<std::string> candidates;
  std::vector<std::string> context_lines;

  bool operator==(const PredictPrompt&) const = default;
};

std::string render(const PredictPrompt& p);
/// std::nullopt when the text is not a prediction prompt.
std::optional<PredictPrompt> parse_predict(std::string_view text);

struct PlannerPrompt {
  std::string stage;
  std::string template_id;
  std::string question;
  std::optional<MemoryState> memory;
};

std::string render(const PlannerPrompt& p);
std::optional<PlannerPrompt> parse_planner(std::string_view text);

/// First line of a prompt.
std::string_view header_line(std::string_view text);

/// Text after the `[frame K] kind:` prefix, or the whole line.
std::string_view line_body(std::string_view line);

/// Sum over context lines of distinct content tokens of `answer` found in the line.
int overlap(std::string_view answer, const std::vector<std::string>& context_lines);

/// Index maximizing overlap; ties go to the lowest index. Requires non-empty options.
std::size_t best_by_overlap(const std::vector<std::string>& options, const std::vector<std::string>& context_lines);

}  // namespace morevqa::prompt
