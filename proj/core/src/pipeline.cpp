#include "morevqa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <set>

#include "morevqa/interpreter.hpp"
#include "morevqa/logged_tools.hpp"
#include "morevqa/planner.hpp"
#include "morevqa/program.hpp"
#include "morevqa/prompt.hpp"
#include "morevqa/text.hpp"

namespace morevqa {

void to_json(json& j, const Failure& f) {
  j = json{{"kind", f.kind}, {"stage", f.stage}, {"message", f.message}};
}

StageError::StageError(StageName stage, std::string kind, const std::string& message)
    : std::runtime_error(std::string(to_string(stage)) + ": " + message), stage_(stage), kind_(std::move(kind)) {}

namespace {

using Args = std::vector<lang::Value>;
using Handler = std::function<void(const Args&)>;

const std::string& string_arg(StageName stage, const std::string& call, const Args& args, std::size_t arity) {
  if (args.size() != arity || !args[0].is_string())
    throw StageError(stage, "stage_error", call + "() expects " + std::to_string(arity) + " string argument");
  return args[0].str();
}

void no_args(StageName stage, const std::string& call, const Args& args) {
  if (!args.empty()) throw StageError(stage, "stage_error", call + "() takes no arguments");
}

lang::Value literal(StageName stage, const lang::Expr& e) {
  return std::visit(
      [&](const auto& n) -> lang::Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, lang::StringLit> || std::is_same_v<T, lang::IntLit> ||
                      std::is_same_v<T, lang::FloatLit> || std::is_same_v<T, lang::BoolLit>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, lang::ListLit>) {
          lang::List items;
          for (const auto& item : n.items) items.push_back(literal(stage, item));
          return items;
        } else {
          throw StageError(stage, "stage_error", "stage program arguments must be literals");
        }
      },
      e.node);
}

void run_calls(StageName stage, const lang::Program& program, const std::map<std::string, Handler>& handlers) {
  for (const auto& s : program.statements) {
    const auto* c = std::get_if<lang::CallStmt>(&s.node);
    if (c == nullptr) throw StageError(stage, "stage_error", "stage programs may only contain calls");
    auto it = handlers.find(c->call.name);
    if (it == handlers.end()) throw StageError(stage, "stage_error", "unknown call '" + c->call.name + "'");
    Args args;
    for (const auto& a : c->call.args) args.push_back(literal(stage, a));
    it->second(args);
  }
}

std::string_view default_template(StageName stage) {
  switch (stage) {
    case StageName::event_parsing: return "P1";
    case StageName::grounding: return "P2";
    case StageName::reasoning: return "P3";
    case StageName::prediction: return "P4";
  }
  return "";
}

/// Produces the stage program and fills record.planner_prompt / emitted_program.
std::string plan(StageName stage, const MemoryState& memory, const Planner& planner, LoggedTools& tools,
                 StageRecord& record) {
  prompt::PlannerPrompt pp;
  pp.stage = std::string(to_string(stage));
  pp.template_id = planner.kind == Planner::Kind::llm_backed && planner.prompt_template_id != "default"
                       ? planner.prompt_template_id
                       : std::string(default_template(stage));
  pp.question = memory.question;
  pp.memory = memory;
  record.planner_prompt = prompt::render(pp);
  if (planner.kind == Planner::Kind::rule_based) {
    record.emitted_program = rule_plan(stage, memory);
  } else {
    try {
      record.emitted_program = tools.complete(record.planner_prompt, false);
    } catch (const ToolError& e) {
      throw StageError(stage, "planner_error", e.what());
    }
  }
  return record.emitted_program;
}

lang::Program parse_stage(StageName stage, const std::string& text, StageRecord& record) {
  try {
    auto p = lang::parse(text, lang::Mode::flat);
    record.parsed_program = lang::render(p);
    return p;
  } catch (const lang::ParseError& e) {
    throw StageError(stage, "parse_error", e.what());
  }
}

void exec_event_parsing(const lang::Program& program, MemoryState& m, const RunConfig& config) {
  constexpr auto S = StageName::event_parsing;
  std::map<std::string, Handler> h;
  h["trim"] = [&](const Args& a) {
    auto r = parse_region(string_arg(S, "trim", a, 1));
    if (!r) throw StageError(S, "stage_error", "unknown temporal region '" + a[0].str() + "'");
    m.frame_ids = apply_trim(m.frame_ids, *r, config.trim_mode);
  };
  h["classify"] = [&](const Args& a) {
    auto t = parse_qa_type(string_arg(S, "classify", a, 1));
    if (!t) throw StageError(S, "stage_error", "unknown question type '" + a[0].str() + "'");
    m.qa_type = *t;
  };
  h["parse_event"] = [&](const Args& a) {
    const auto& e = string_arg(S, "parse_event", a, 1);
    if (m.event_queue.size() >= kMaxEvents)
      throw StageError(S, "stage_error", "event_queue overflow: at most two events are supported");
    m.event_queue.push_back(e);
  };
  h["set_conjunction"] = [&](const Args& a) {
    auto c = parse_conjunction(string_arg(S, "set_conjunction", a, 1));
    if (!c) throw StageError(S, "stage_error", "unknown conjunction '" + a[0].str() + "'");
    m.conjunction = *c;
  };
  h["require_ocr"] = [&](const Args& a) {
    if (a.size() != 1 || !std::holds_alternative<bool>(a[0].data))
      throw StageError(S, "stage_error", "require_ocr() expects one boolean argument");
    m.require_ocr = std::get<bool>(a[0].data);
  };
  h["revise_question"] = [&](const Args& a) { m.question = string_arg(S, "revise_question", a, 1); };
  h["noop"] = [&](const Args& a) { no_args(S, "noop", a); };
  run_calls(S, program, h);
}

void exec_grounding(const lang::Program& program, MemoryState& m, LoggedTools& tools, const RunConfig& config) {
  constexpr auto S = StageName::grounding;
  FrameWindow current = m.frame_ids;
  bool grounded = false;
  std::map<std::string, Handler> h;
  h["localize"] = [&](const Args& a) {
    const auto& event = string_arg(S, "localize", a, 1);
    std::vector<int> kept;
    for (int f : tools.localize(event, current))
      if (tools.score(f, event) >= config.score_threshold) kept.push_back(f);
    if (!kept.empty()) {
      current = FrameWindow(std::move(kept));
      grounded = true;
    }
  };
  h["verify_action"] = [&](const Args& a) {
    const auto& event = string_arg(S, "verify_action", a, 1);
    std::vector<int> kept;
    for (int f : current)
      if (tools.verify_action(f, event)) kept.push_back(f);
    if (!kept.empty()) {
      current = FrameWindow(std::move(kept));
      grounded = true;
    }
  };
  h["anchor_then_shift"] = [&](const Args& a) {
    no_args(S, "anchor_then_shift", a);
    current = apply_conjunction(current, m.conjunction, m.frame_ids);
  };
  h["noop"] = [&](const Args& a) { no_args(S, "noop", a); };
  run_calls(S, program, h);
  m.grounded_window = grounded ? current : FrameWindow({m.frame_ids.middle()});
}

FrameWindow reasoning_frames(const MemoryState& m, const RunConfig& config) {
  if (config.grounding_to_reasoning && m.grounded_window && !m.grounded_window->empty()) return *m.grounded_window;
  return FrameWindow({m.frame_ids.middle()});
}

std::string sq_key(std::size_t i) { return "sq_" + std::to_string(i); }
std::string sq_frame_key(std::size_t i, int frame) { return sq_key(i) + "_frame_" + std::to_string(frame); }

void exec_reasoning(const lang::Program& program, MemoryState& m, LoggedTools& tools, const RunConfig& config) {
  constexpr auto S = StageName::reasoning;
  const FrameWindow frames = reasoning_frames(m, config);
  std::vector<std::string> subquestions;
  bool asked = false;
  auto index_of = [&](const std::string& q) {
    auto it = std::find(subquestions.begin(), subquestions.end(), q);
    if (it != subquestions.end()) return static_cast<std::size_t>(it - subquestions.begin());
    subquestions.push_back(q);
    m.extra[sq_key(subquestions.size() - 1)] = q;
    return subquestions.size() - 1;
  };
  auto ask = [&](const std::string& q) {
    const auto i = index_of(q);
    for (int f : frames) m.extra[sq_frame_key(i, f)] = tools.vqa(f, q, m.require_ocr);
    asked = true;
  };
  std::map<std::string, Handler> h;
  h["subquestion"] = [&](const Args& a) { index_of(string_arg(S, "subquestion", a, 1)); };
  h["vqa_on_grounded"] = [&](const Args& a) { ask(string_arg(S, "vqa_on_grounded", a, 1)); };
  h["noop"] = [&](const Args& a) { no_args(S, "noop", a); };
  run_calls(S, program, h);
  if (!asked) ask(m.question);
}

StageResult run_stage(StageName stage, const std::optional<std::string>& given_program, const MemoryState& memory,
                      const VideoMeta& video, const Planner& planner, ToolSession& session, const RunConfig& config) {
  StageResult out;
  out.record.stage_name = stage;
  out.record.memory_before = memory;
  MemoryState m = memory;
  LoggedTools tools(session, video.video_id, out.record.tool_calls);
  const std::string text = given_program ? *given_program : plan(stage, memory, planner, tools, out.record);
  if (given_program) out.record.emitted_program = *given_program;
  const auto program = parse_stage(stage, text, out.record);
  try {
    switch (stage) {
      case StageName::event_parsing: exec_event_parsing(program, m, config); break;
      case StageName::grounding: exec_grounding(program, m, tools, config); break;
      case StageName::reasoning: exec_reasoning(program, m, tools, config); break;
      case StageName::prediction: throw StageError(stage, "stage_error", "prediction has no stage program");
    }
  } catch (const ToolError& e) {
    throw StageError(stage, "tool_error", e.what());
  }
  out.record.memory_after = m;
  out.memory = std::move(m);
  return out;
}

std::string kind_label(ContextEntry::Kind k) { return k == ContextEntry::Kind::caption ? "caption" : "qa"; }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> ContextBlock::lines() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(render_context_line(e));
  return out;
}

std::string render_context_line(const ContextEntry& e) {
  return "[frame " + std::to_string(e.frame_id) + "] " + kind_label(e.kind) + ": " + e.text;
}

ContextBlock make_context(std::vector<ContextEntry> entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const ContextEntry& a, const ContextEntry& b) {
    if (a.frame_id != b.frame_id) return a.frame_id < b.frame_id;
    return a.kind == ContextEntry::Kind::caption && b.kind != ContextEntry::Kind::caption;
  });
  ContextBlock block;
  block.entries = std::move(entries);
  block.rendered = text::join(block.lines(), "\n");
  return block;
}

FrameWindow apply_trim(const FrameWindow& window, TemporalRegion region, TrimMode mode) {
  if (window.empty()) throw InvariantError("cannot trim an empty window");
  if (region == TemporalRegion::whole) return window;
  const auto n = static_cast<std::ptrdiff_t>(window.size());
  const std::ptrdiff_t slice = (2 * n + 4) / 5;  // ceil(0.4 n)
  const std::ptrdiff_t keep = std::max<std::ptrdiff_t>(1, mode == TrimMode::keep ? slice : n - slice);
  std::ptrdiff_t start = 0;
  switch (region) {
    case TemporalRegion::beginning: start = 0; break;
    case TemporalRegion::end: start = n - keep; break;
    case TemporalRegion::middle: start = std::clamp<std::ptrdiff_t>(n / 2 - keep / 2, 0, n - keep); break;
    case TemporalRegion::whole: break;
  }
  const auto& ids = window.ids();
  return FrameWindow(std::vector<int>(ids.begin() + start, ids.begin() + start + keep));
}

FrameWindow apply_conjunction(const FrameWindow& anchor, TemporalConjunction conj, const FrameWindow& universe) {
  if (anchor.empty() || universe.empty()) throw InvariantError("apply_conjunction needs non-empty windows");
  std::vector<int> out;
  switch (conj) {
    case TemporalConjunction::after:
      for (int f : universe)
        if (f > anchor.back()) out.push_back(f);
      break;
    case TemporalConjunction::before:
      for (int f : universe)
        if (f < anchor.front()) out.push_back(f);
      break;
    case TemporalConjunction::while_: return anchor;
    case TemporalConjunction::none: return universe;
  }
  return out.empty() ? anchor : FrameWindow(std::move(out));
}

StageResult run_event_parsing(const QAItem& qa, const VideoMeta& video, const Planner& planner, ToolSession& tools,
                              const RunConfig& config) {
  return run_stage(StageName::event_parsing, std::nullopt, MemoryState::initial(video, qa.question), video, planner,
                   tools, config);
}

StageResult run_grounding(const MemoryState& memory, const VideoMeta& video, const Planner& planner,
                          ToolSession& tools, const RunConfig& config) {
  return run_stage(StageName::grounding, std::nullopt, memory, video, planner, tools, config);
}

StageResult run_reasoning(const MemoryState& memory, const VideoMeta& video, const Planner& planner,
                          ToolSession& tools, const RunConfig& config) {
  return run_stage(StageName::reasoning, std::nullopt, memory, video, planner, tools, config);
}

StageResult execute_stage(StageName stage, const std::string& program_text, const MemoryState& memory,
                          const VideoMeta& video, ToolSession& tools, const RunConfig& config) {
  return run_stage(stage, program_text, memory, video, Planner::rule_based(), tools, config);
}

ContextBlock build_context(const MemoryState& memory, const VideoMeta& video, ToolSession& session, int n,
                           const RunConfig& config, std::vector<ToolCallRecord>* log) {
  if (n < 1) throw InvariantError("context needs n >= 1");
  std::vector<ToolCallRecord> scratch;
  LoggedTools tools(session, video.video_id, log ? *log : scratch);
  std::vector<ContextEntry> entries;
  const FrameWindow sampled = uniform_sample(video.frame_count, n);
  for (int f : sampled) entries.push_back({f, ContextEntry::Kind::caption, tools.caption(f)});

  if (!config.grounding_to_reasoning && memory.grounded_window) {
    for (int f : *memory.grounded_window)
      if (!sampled.contains(f)) entries.push_back({f, ContextEntry::Kind::caption, tools.caption(f)});
  }

  // sq_<i>_frame_<f> -> answer, ordered by (frame, i).
  std::vector<std::tuple<int, std::size_t, std::string>> grounded;
  for (const auto& [key, answer] : memory.extra) {
    if (key.rfind("sq_", 0) != 0) continue;
    const auto mid = key.find("_frame_");
    if (mid == std::string::npos) continue;
    const auto i = static_cast<std::size_t>(std::stoul(key.substr(3, mid - 3)));
    const int f = std::stoi(key.substr(mid + 7));
    auto q = memory.extra.find(sq_key(i));
    const std::string question = q == memory.extra.end() ? memory.question : q->second;
    grounded.emplace_back(f, i, question + " -> " + answer);
  }
  std::sort(grounded.begin(), grounded.end());
  for (auto& [f, i, t] : grounded) entries.push_back({f, ContextEntry::Kind::grounded_vqa, std::move(t)});
  return make_context(std::move(entries));
}

int map_to_candidate(const std::string& reply, const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw InvariantError("map_to_candidate needs candidates");
  const auto norm = text::normalize(reply);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (text::normalize(candidates[i]) == norm) return static_cast<int>(i);
  return static_cast<int>(prompt::best_by_overlap(candidates, {reply}));
}

Prediction final_predict(const ContextBlock& context, const QAItem& qa, ToolSession& session,
                         const std::optional<std::string>& video_id, std::vector<ToolCallRecord>* log) {
  Prediction p;
  p.prompt = prompt::render(prompt::PredictPrompt{qa.question, qa.candidates, context.lines()});
  std::vector<ToolCallRecord> scratch;
  LoggedTools tools(session, video_id.value_or(""), log ? *log : scratch);
  p.answer = tools.complete(p.prompt, video_id.has_value());
  if (qa.is_multiple_choice()) p.mc_index = map_to_candidate(p.answer, qa.candidates);
  return p;
}

json trace_json(const SystemOutput& out) {
  json j{{"answer", out.answer},
         {"mc_index", out.mc_index ? json(*out.mc_index) : json(nullptr)},
         {"grounded_window", out.grounded_window ? json(*out.grounded_window) : json(nullptr)},
         {"grounded_window_s", out.grounded_window_s ? json(*out.grounded_window_s) : json(nullptr)},
         {"stage_records", out.stage_records},
         {"prediction_prompt", out.prediction_prompt},
         {"failure", out.failure ? json(*out.failure) : json(nullptr)}};
  return j;
}

namespace {

StageRecord skipped(StageName stage, const MemoryState& before, const MemoryState& after) {
  StageRecord r;
  r.stage_name = stage;
  r.memory_before = before;
  r.memory_after = after;
  return r;
}

class StageTimer {
 public:
  StageTimer(std::map<std::string, double>& sink, StageName stage)
      : sink_(sink), key_(to_string(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    sink_[std::string(key_)] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::map<std::string, double>& sink_;
  std::string_view key_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

SystemOutput run_morevqa(const VideoMeta& video, const QAItem& qa, const RunConfig& config, const Planner& planner,
                         ToolSession& tools) {
  config.validate();
  SystemOutput out;
  MemoryState memory = MemoryState::initial(video, qa.question);
  const auto& mask = config.stage_mask;
  try {
    {
      StageTimer t(out.stage_ms, StageName::event_parsing);
      if (mask.event_parsing) {
        auto r = run_event_parsing(qa, video, planner, tools, config);
        memory = r.memory;
        out.stage_records.push_back(std::move(r.record));
      } else {
        out.stage_records.push_back(skipped(StageName::event_parsing, memory, memory));
      }
    }
    {
      StageTimer t(out.stage_ms, StageName::grounding);
      if (mask.grounding) {
        auto r = run_grounding(memory, video, planner, tools, config);
        memory = r.memory;
        out.stage_records.push_back(std::move(r.record));
      } else {
        MemoryState after = memory;
        after.grounded_window = FrameWindow({memory.frame_ids.middle()});
        out.stage_records.push_back(skipped(StageName::grounding, memory, after));
        memory = std::move(after);
      }
    }
    {
      StageTimer t(out.stage_ms, StageName::reasoning);
      if (mask.reasoning) {
        auto r = run_reasoning(memory, video, planner, tools, config);
        memory = r.memory;
        out.stage_records.push_back(std::move(r.record));
      } else if (!mask.none()) {
        // Question-only VQA on the grounded frames.
        auto r = execute_stage(StageName::reasoning, "noop()", memory, video, tools, config);
        r.record.emitted_program.clear();
        r.record.parsed_program.reset();
        memory = r.memory;
        out.stage_records.push_back(std::move(r.record));
      } else {
        out.stage_records.push_back(skipped(StageName::reasoning, memory, memory));
      }
    }
    out.grounded_window = memory.grounded_window;
    if (out.grounded_window) out.grounded_window_s = to_seconds(*out.grounded_window, video.fps);
    {
      StageTimer t(out.stage_ms, StageName::prediction);
      StageRecord pred = skipped(StageName::prediction, memory, memory);
      const auto context = build_context(memory, video, tools, config.n_context_frames, config, &pred.tool_calls);
      try {
        auto p = final_predict(context, qa, tools, video.video_id, &pred.tool_calls);
        out.answer = p.answer;
        out.mc_index = p.mc_index;
        out.prediction_prompt = p.prompt;
        pred.planner_prompt = std::move(p.prompt);
      } catch (const ToolError& e) {
        out.stage_records.push_back(std::move(pred));
        throw StageError(StageName::prediction, "tool_error", e.what());
      }
      out.stage_records.push_back(std::move(pred));
    }
  } catch (const StageError& e) {
    out.failure = Failure{e.kind(), std::string(to_string(e.stage())), e.what()};
  } catch (const ToolError& e) {
    out.failure = Failure{"tool_error", "prediction", e.what()};
  }
  return out;
}

}  // namespace morevqa
