#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "morevqa/tools.hpp"
#include "morevqa/types.hpp"

namespace morevqa {

/// How stage programs are produced: locally by the rule-based planner, or by
/// sending the stage prompt to the backend's `complete` method.
struct Planner {
  enum class Kind { rule_based, llm_backed };
  Kind kind = Kind::rule_based;
  std::string prompt_template_id;

  static Planner rule_based() { return {}; }
  static Planner llm_backed(std::string template_id = "default") {
    return {Kind::llm_backed, std::move(template_id)};
  }
};

/// Structured reason an item could not be answered.
struct Failure {
  std::string kind;   // parse_error, stage_error, tool_error, planner_error, runtime_error
  std::string stage;  // stage name or system name
  std::string message;
  bool operator==(const Failure&) const = default;
};

void to_json(json& j, const Failure& f);

/// Raised while executing a stage program; carries the failure record.
class StageError : public std::runtime_error {
 public:
  StageError(StageName stage, std::string kind, const std::string& message);
  StageName stage() const { return stage_; }
  const std::string& kind() const { return kind_; }

 private:
  StageName stage_;
  std::string kind_;
};

struct StageResult {
  StageRecord record;
  MemoryState memory;
};

struct ContextEntry {
  enum class Kind { caption, grounded_vqa };
  int frame_id = 0;
  Kind kind = Kind::caption;
  std::string text;
  bool operator==(const ContextEntry&) const = default;
};

/// Temporally sorted evidence for the final prediction.
struct ContextBlock {
  std::vector<ContextEntry> entries;
  std::string rendered;

  std::vector<std::string> lines() const;
};

/// `[frame K] caption: text` or `[frame K] qa: text`.
std::string render_context_line(const ContextEntry& e);
ContextBlock make_context(std::vector<ContextEntry> entries);

/// Keeps a contiguous slice of max(1, ceil(0.4 |w|)) frames (TrimMode::keep)
/// or drops that many (TrimMode::remove), placed by region.
FrameWindow apply_trim(const FrameWindow& window, TemporalRegion region, TrimMode mode = TrimMode::keep);

/// after: universe frames past max(anchor); before: frames ahead of
/// min(anchor); while: anchor; none: universe. Empty results fall back to anchor.
FrameWindow apply_conjunction(const FrameWindow& anchor, TemporalConjunction conj, const FrameWindow& universe);

StageResult run_event_parsing(const QAItem& qa, const VideoMeta& video, const Planner& planner, ToolSession& tools,
                              const RunConfig& config = {});
StageResult run_grounding(const MemoryState& memory, const VideoMeta& video, const Planner& planner,
                          ToolSession& tools, const RunConfig& config = {});
StageResult run_reasoning(const MemoryState& memory, const VideoMeta& video, const Planner& planner,
                          ToolSession& tools, const RunConfig& config = {});

/// Executes an already-emitted stage program against memory (no planner call).
StageResult execute_stage(StageName stage, const std::string& program_text, const MemoryState& memory,
                          const VideoMeta& video, ToolSession& tools, const RunConfig& config = {});

/// Captions of uniform_sample(frame_count, n) merged with grounded answers in memory.extra.
ContextBlock build_context(const MemoryState& memory, const VideoMeta& video, ToolSession& tools, int n,
                           const RunConfig& config = {}, std::vector<ToolCallRecord>* log = nullptr);

struct Prediction {
  std::string answer;
  std::optional<int> mc_index;
  std::string prompt;
};

/// Index of the candidate equal to `reply` after normalization, else the one
/// with maximal token overlap (lowest index on ties). Never fails for non-empty candidates.
int map_to_candidate(const std::string& reply, const std::vector<std::string>& candidates);

Prediction final_predict(const ContextBlock& context, const QAItem& qa, ToolSession& tools,
                         const std::optional<std::string>& video_id = std::nullopt,
                         std::vector<ToolCallRecord>* log = nullptr);

/// Outcome of answering one item with any system.
struct SystemOutput {
  std::string answer;
  std::optional<int> mc_index;
  std::optional<FrameWindow> grounded_window;
  std::optional<TimeWindow> grounded_window_s;
  std::vector<StageRecord> stage_records;
  std::string prediction_prompt;
  std::optional<Failure> failure;
  std::map<std::string, double> stage_ms;
};

json trace_json(const SystemOutput& out);

SystemOutput run_morevqa(const VideoMeta& video, const QAItem& qa, const RunConfig& config, const Planner& planner,
                         ToolSession& tools);

}  // namespace morevqa
