#include "morevqa/types.hpp"

#include <algorithm>
#include <cmath>

namespace morevqa {

VideoMeta VideoMeta::make(std::string id, int frame_count, double fps) {
  VideoMeta v{std::move(id), frame_count, fps, fps > 0 ? frame_count / fps : 0.0};
  v.validate();
  return v;
}

void VideoMeta::validate() const {
  if (frame_count < 1) throw InvariantError("video " + video_id + ": frame_count must be >= 1");
  if (!(fps > 0)) throw InvariantError("video " + video_id + ": fps must be > 0");
  if (duration_s < 0) throw InvariantError("video " + video_id + ": negative duration");
  if (std::abs(duration_s - frame_count / fps) > 1.0 / fps + 1e-9)
    throw InvariantError("video " + video_id + ": duration inconsistent with frame_count / fps");
}

int VideoMeta::frame_at(double seconds) const {
  auto f = static_cast<int>(std::floor(seconds * fps));
  return std::clamp(f, 0, frame_count - 1);
}

FrameWindow::FrameWindow(std::vector<int> ids) : ids_(std::move(ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] < 0) throw InvariantError("frame window contains a negative frame id");
    if (i > 0 && ids_[i] <= ids_[i - 1])
      throw InvariantError("frame window must be strictly increasing");
  }
}

FrameWindow FrameWindow::range(int first, int last) {
  std::vector<int> ids;
  if (last >= first) {
    ids.reserve(static_cast<std::size_t>(last - first + 1));
    for (int f = first; f <= last; ++f) ids.push_back(f);
  }
  return FrameWindow(std::move(ids));
}

bool FrameWindow::contains(int frame) const {
  return std::binary_search(ids_.begin(), ids_.end(), frame);
}

bool FrameWindow::subset_of(const FrameWindow& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

int FrameWindow::middle() const {
  if (ids_.empty()) throw InvariantError("middle of an empty frame window");
  return ids_[ids_.size() / 2];
}

bool FrameWindow::within(int frame_count) const {
  return ids_.empty() || (ids_.front() >= 0 && ids_.back() < frame_count);
}

TimeWindow to_seconds(const FrameWindow& window, double fps) {
  if (window.empty()) throw InvariantError("cannot convert an empty window to seconds");
  return {window.front() / fps, (window.back() + 1) / fps};
}

void QAItem::validate() const {
  if (answer_mc.has_value() == answer_open.has_value())
    throw InvariantError("exactly one of answer_mc / answer_open must be present");
  if (answer_mc && (*answer_mc < 0 || *answer_mc >= static_cast<int>(candidates.size())))
    throw InvariantError("answer_mc out of range of candidates");
  if (answer_open && answer_open->empty()) throw InvariantError("answer_open must not be empty");
  if (gt_window_s && gt_window_s->start > gt_window_s->end)
    throw InvariantError("gt_window_s start after end");
}

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table)
    if (name == s) return value;
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table)
    if (value == e) return name;
  return "?";
}

constexpr std::pair<QAType, std::string_view> kQATypeNames[] = {
    {QAType::why, "why"},
    {QAType::how, "how"},
    {QAType::what, "what"},
    {QAType::location, "location"},
    {QAType::counting, "counting"},
    {QAType::description, "description"},
    {QAType::explanation, "explanation"},
    {QAType::other, "other"},
};

constexpr std::pair<TemporalConjunction, std::string_view> kConjunctionNames[] = {
    {TemporalConjunction::before, "before"},
    {TemporalConjunction::after, "after"},
    {TemporalConjunction::while_, "while"},
    {TemporalConjunction::none, "none"},
};

constexpr std::pair<TemporalRegion, std::string_view> kRegionNames[] = {
    {TemporalRegion::beginning, "beginning"},
    {TemporalRegion::middle, "middle"},
    {TemporalRegion::end, "end"},
    {TemporalRegion::whole, "whole"},
};

constexpr std::pair<StageName, std::string_view> kStageNames[] = {
    {StageName::event_parsing, "event_parsing"},
    {StageName::grounding, "grounding"},
    {StageName::reasoning, "reasoning"},
    {StageName::prediction, "prediction"},
};

}  // namespace

std::string_view to_string(QAType t) { return name_of(t, kQATypeNames); }
std::string_view to_string(TemporalConjunction c) { return name_of(c, kConjunctionNames); }
std::string_view to_string(TemporalRegion r) { return name_of(r, kRegionNames); }
std::string_view to_string(StageName s) { return name_of(s, kStageNames); }

std::optional<QAType> parse_qa_type(std::string_view s) { return lookup(s, kQATypeNames); }
std::optional<TemporalConjunction> parse_conjunction(std::string_view s) {
  return lookup(s, kConjunctionNames);
}
std::optional<TemporalRegion> parse_region(std::string_view s) { return lookup(s, kRegionNames); }
std::optional<StageName> parse_stage_name(std::string_view s) { return lookup(s, kStageNames); }

MemoryState MemoryState::initial(const VideoMeta& video, std::string question) {
  MemoryState m;
  m.frame_ids = FrameWindow::full(video.frame_count);
  m.question = std::move(question);
  return m;
}

void RunConfig::validate() const {
  if (n_context_frames < 1) throw InvariantError("n_context_frames must be >= 1");
  if (!(fps_caption > 0)) throw InvariantError("fps_caption must be > 0");
  if (decode_temperature != 0.0) throw InvariantError("decode_temperature is fixed at 0");
  if (!(score_threshold > 0.0 && score_threshold < 1.0))
    throw InvariantError("score_threshold must lie in (0, 1)");
}

FrameWindow uniform_sample(int frame_count, int n) {
  if (frame_count < 1 || n < 1) throw InvariantError("uniform_sample needs frame_count >= 1 and n >= 1");
  const auto m = static_cast<std::int64_t>(std::min(n, frame_count));
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(m));
  for (std::int64_t k = 0; k < m; ++k)
    ids.push_back(static_cast<int>((2 * k + 1) * frame_count / (2 * m)));
  return FrameWindow(std::move(ids));
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const FrameWindow& w) { j = w.ids(); }
void from_json(const json& j, FrameWindow& w) { w = FrameWindow(j.get<std::vector<int>>()); }

void to_json(json& j, const TimeWindow& w) { j = json::array({w.start, w.end}); }
void from_json(const json& j, TimeWindow& w) {
  if (!j.is_array() || j.size() != 2) throw InvariantError("time window must be [start, end]");
  w = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(json& j, const MemoryState& m) {
  j = json{{"frame_ids", m.frame_ids},
           {"question", m.question},
           {"event_queue", m.event_queue},
           {"conjunction", to_string(m.conjunction)},
           {"qa_type", to_string(m.qa_type)},
           {"require_ocr", m.require_ocr},
           {"extra", m.extra},
           {"grounded_window", m.grounded_window ? json(*m.grounded_window) : json(nullptr)}};
}

void from_json(const json& j, MemoryState& m) {
  m.frame_ids = j.at("frame_ids").get<FrameWindow>();
  m.question = j.at("question").get<std::string>();
  m.event_queue = j.at("event_queue").get<std::vector<std::string>>();
  auto conj = parse_conjunction(j.at("conjunction").get<std::string>());
  auto type = parse_qa_type(j.at("qa_type").get<std::string>());
  if (!conj || !type) throw InvariantError("memory state has an unknown conjunction or qa_type");
  m.conjunction = *conj;
  m.qa_type = *type;
  m.require_ocr = j.at("require_ocr").get<bool>();
  m.extra = j.at("extra").get<std::map<std::string, std::string>>();
  const auto& g = j.at("grounded_window");
  m.grounded_window = g.is_null() ? std::nullopt : std::optional<FrameWindow>(g.get<FrameWindow>());
  if (m.event_queue.size() > kMaxEvents) throw InvariantError("event_queue holds more than two events");
}

void to_json(json& j, const ToolCallRecord& r) {
  j = json{{"method", r.method}, {"args", r.args}, {"result", r.result}};
}

void from_json(const json& j, ToolCallRecord& r) {
  r.method = j.at("method").get<std::string>();
  r.args = j.at("args");
  r.result = j.at("result");
}

void to_json(json& j, const StageRecord& r) {
  j = json{{"stage_name", to_string(r.stage_name)},
           {"planner_prompt", r.planner_prompt},
           {"emitted_program", r.emitted_program},
           {"parsed_program", r.parsed_program ? json(*r.parsed_program) : json(nullptr)},
           {"tool_calls", r.tool_calls},
           {"memory_before", r.memory_before},
           {"memory_after", r.memory_after}};
}

void from_json(const json& j, StageRecord& r) {
  auto stage = parse_stage_name(j.at("stage_name").get<std::string>());
  if (!stage) throw InvariantError("unknown stage_name");
  r.stage_name = *stage;
  r.planner_prompt = j.at("planner_prompt").get<std::string>();
  r.emitted_program = j.at("emitted_program").get<std::string>();
  const auto& p = j.at("parsed_program");
  r.parsed_program = p.is_null() ? std::nullopt : std::optional<std::string>(p.get<std::string>());
  r.tool_calls = j.at("tool_calls").get<std::vector<ToolCallRecord>>();
  r.memory_before = j.at("memory_before").get<MemoryState>();
  r.memory_after = j.at("memory_after").get<MemoryState>();
}

void to_json(json& j, const QAItem& q) {
  j = json{{"question", q.question}};
  if (!q.candidates.empty()) j["candidates"] = q.candidates;
  if (q.answer_mc) j["answer_mc"] = *q.answer_mc;
  if (q.answer_open) j["answer_open"] = *q.answer_open;
  if (q.gt_window_s) j["gt_window_s"] = *q.gt_window_s;
}

}  // namespace morevqa
