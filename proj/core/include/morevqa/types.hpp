#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace morevqa {

using json = nlohmann::json;

/// Raised when a value violates the invariants of a domain type.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct VideoMeta {
  std::string video_id;
  int frame_count = 1;
  double fps = 1.0;
  double duration_s = 1.0;

  /// Builds metadata with duration derived from frame_count / fps.
  static VideoMeta make(std::string id, int frame_count, double fps);
  void validate() const;

  int frame_at(double seconds) const;
  double seconds_at(int frame) const { return frame / fps; }
};

/// Strictly increasing list of frame indices.
class FrameWindow {
 public:
  FrameWindow() = default;
  explicit FrameWindow(std::vector<int> ids);

  /// Contiguous window [first, last].
  static FrameWindow range(int first, int last);
  static FrameWindow full(int frame_count) { return range(0, frame_count - 1); }

  const std::vector<int>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  int front() const { return ids_.front(); }
  int back() const { return ids_.back(); }
  int operator[](std::size_t i) const { return ids_[i]; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  bool contains(int frame) const;
  bool subset_of(const FrameWindow& other) const;
  /// Element at floor(size / 2); window must be non-empty.
  int middle() const;
  bool within(int frame_count) const;

  bool operator==(const FrameWindow&) const = default;

 private:
  std::vector<int> ids_;
};

struct TimeWindow {
  double start = 0.0;
  double end = 0.0;
  bool operator==(const TimeWindow&) const = default;
};

/// [min / fps, (max + 1) / fps) spanned by a non-empty window.
TimeWindow to_seconds(const FrameWindow& window, double fps);

struct QAItem {
  std::string question;
  std::vector<std::string> candidates;
  std::optional<int> answer_mc;
  std::optional<std::vector<std::string>> answer_open;
  std::optional<TimeWindow> gt_window_s;

  bool is_multiple_choice() const { return !candidates.empty(); }
  void validate() const;
};

enum class QAType { why, how, what, location, counting, description, explanation, other };
enum class TemporalConjunction { before, after, while_, none };
enum class TemporalRegion { beginning, middle, end, whole };
enum class StageName { event_parsing, grounding, reasoning, prediction };

std::string_view to_string(QAType t);
std::string_view to_string(TemporalConjunction c);
std::string_view to_string(TemporalRegion r);
std::string_view to_string(StageName s);

std::optional<QAType> parse_qa_type(std::string_view s);
std::optional<TemporalConjunction> parse_conjunction(std::string_view s);
std::optional<TemporalRegion> parse_region(std::string_view s);
std::optional<StageName> parse_stage_name(std::string_view s);

inline constexpr QAType kAllQATypes[] = {QAType::why,      QAType::how,         QAType::what,
                                         QAType::location, QAType::counting,    QAType::description,
                                         QAType::explanation, QAType::other};

inline constexpr std::size_t kMaxEvents = 2;

struct MemoryState {
  FrameWindow frame_ids;
  std::string question;
  std::vector<std::string> event_queue;
  TemporalConjunction conjunction = TemporalConjunction::none;
  QAType qa_type = QAType::other;
  bool require_ocr = false;
  std::map<std::string, std::string> extra;
  std::optional<FrameWindow> grounded_window;

  /// Fresh memory for a question over the full video.
  static MemoryState initial(const VideoMeta& video, std::string question);

  bool operator==(const MemoryState&) const = default;
};

struct ToolCallRecord {
  std::string method;
  json args;
  json result;

  bool operator==(const ToolCallRecord&) const = default;
};

struct StageRecord {
  StageName stage_name = StageName::event_parsing;
  std::string planner_prompt;
  std::string emitted_program;
  /// Canonical rendering of the parsed program; empty when parsing failed or the stage was skipped.
  std::optional<std::string> parsed_program;
  std::vector<ToolCallRecord> tool_calls;
  MemoryState memory_before;
  MemoryState memory_after;

  bool operator==(const StageRecord&) const = default;
};

struct StageMask {
  bool event_parsing = true;
  bool grounding = true;
  bool reasoning = true;

  bool none() const { return !event_parsing && !grounding && !reasoning; }
  bool operator==(const StageMask&) const = default;
};

enum class TrimMode { keep, remove };

struct RunConfig {
  int n_context_frames = 16;
  double fps_caption = 1.0;
  double decode_temperature = 0.0;
  StageMask stage_mask;
  std::uint64_t seed = 0;
  TrimMode trim_mode = TrimMode::keep;
  /// When false, grounded frames feed only the prediction context, not reasoning.
  bool grounding_to_reasoning = true;
  double score_threshold = 0.7;

  void validate() const;
};

/// min(n, frame_count) indices; the k-th of m is floor((k + 0.5) * frame_count / m).
FrameWindow uniform_sample(int frame_count, int n);

// JSON (snake_case field names, used in trace files).
void to_json(json& j, const FrameWindow& w);
void from_json(const json& j, FrameWindow& w);
void to_json(json& j, const TimeWindow& w);
void from_json(const json& j, TimeWindow& w);
void to_json(json& j, const MemoryState& m);
void from_json(const json& j, MemoryState& m);
void to_json(json& j, const ToolCallRecord& r);
void from_json(const json& j, ToolCallRecord& r);
void to_json(json& j, const StageRecord& r);
void from_json(const json& j, StageRecord& r);
void to_json(json& j, const QAItem& q);

}  // namespace morevqa
