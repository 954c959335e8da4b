#include "morevqa/baselines.hpp"

#include <cmath>
#include <exception>
#include <set>

#include "morevqa/interpreter.hpp"
#include "morevqa/logged_tools.hpp"
#include "morevqa/prompt.hpp"
#include "morevqa/replay.hpp"
#include "morevqa/text.hpp"

namespace morevqa {

void JcefConfig::validate() const {
  if (!(fps_caption > 0)) throw InvariantError("fps_caption must be positive");
  if (!(frame_fraction >= 0.0 && frame_fraction <= 1.0)) throw InvariantError("frame_fraction must lie in [0, 1]");
}

FrameWindow jcef_frames(const VideoMeta& video, const JcefConfig& cfg) {
  cfg.validate();
  const int count =
      std::max(1, static_cast<int>(std::floor(video.frame_count * cfg.fps_caption / video.fps + 1e-9)));
  const int m = static_cast<int>(std::lround(cfg.frame_fraction * count));
  if (m == 0) return FrameWindow{};
  std::set<int> frames;
  for (int k : uniform_sample(count, m)) {
    const int f = static_cast<int>(std::floor(k / cfg.fps_caption * video.fps + 1e-9));
    frames.insert(std::min(f, video.frame_count - 1));
  }
  return FrameWindow(std::vector<int>(frames.begin(), frames.end()));
}

namespace {

StageRecord prediction_record(const std::string& question) {
  StageRecord r;
  r.stage_name = StageName::prediction;
  r.memory_before.question = question;
  r.memory_after.question = question;
  return r;
}

SystemOutput predict_with(const std::vector<ContextEntry>& entries, const QAItem& qa, ToolSession& session,
                          const std::optional<std::string>& video_id, StageRecord record) {
  SystemOutput out;
  try {
    auto p = final_predict(make_context(entries), qa, session, video_id, &record.tool_calls);
    out.answer = p.answer;
    out.mc_index = p.mc_index;
    out.prediction_prompt = p.prompt;
    record.planner_prompt = std::move(p.prompt);
  } catch (const ToolError& e) {
    out.failure = Failure{"tool_error", "prediction", e.what()};
  }
  out.stage_records.push_back(std::move(record));
  return out;
}

}  // namespace

SystemOutput run_jcef(const VideoMeta& video, const QAItem& qa, const JcefConfig& cfg, ToolSession& session) {
  StageRecord record = prediction_record(qa.question);
  std::vector<ContextEntry> entries;
  try {
    LoggedTools tools(session, video.video_id, record.tool_calls);
    for (int f : jcef_frames(video, cfg)) entries.push_back({f, ContextEntry::Kind::caption, tools.caption(f)});
  } catch (const ToolError& e) {
    SystemOutput out;
    out.failure = Failure{"tool_error", "prediction", e.what()};
    out.stage_records.push_back(std::move(record));
    return out;
  }
  return predict_with(entries, qa, session, video.video_id, std::move(record));
}

SystemOutput run_llm_only(const QAItem& qa, ToolSession& session) {
  return predict_with({}, qa, session, std::nullopt, prediction_record(qa.question));
}

namespace {

using lang::List;
using lang::Value;

std::string value_text(const Value& v) {
  if (v.is_string()) return v.str();
  return lang::to_json_value(v).dump();
}

int frame_arg(const std::string& name, const Value& v) {
  if (!v.is_int()) throw std::invalid_argument(name + "() expects an integer frame id, got " +
                                               std::string(lang::type_name(v)));
  return static_cast<int>(v.integer());
}

const std::string& text_arg(const std::string& name, const Value& v) {
  if (!v.is_string())
    throw std::invalid_argument(name + "() expects a string, got " + std::string(lang::type_name(v)));
  return v.str();
}

void arity(const std::string& name, const std::vector<Value>& args, std::size_t lo, std::size_t hi) {
  if (args.size() < lo || args.size() > hi)
    throw std::invalid_argument(name + "() takes " + std::to_string(lo) +
                                (lo == hi ? "" : "-" + std::to_string(hi)) + " arguments, got " +
                                std::to_string(args.size()));
}

}  // namespace

SystemOutput run_single_stage(const VideoMeta& video, const QAItem& qa, ToolSession& session,
                              const std::optional<lang::ProgramFile>& program, std::size_t step_budget) {
  SystemOutput out;
  StageRecord record;
  record.stage_name = StageName::reasoning;
  record.memory_before = MemoryState::initial(video, qa.question);
  record.memory_after = record.memory_before;
  LoggedTools tools(session, video.video_id, record.tool_calls);
  auto fail = [&](std::string kind, std::string message) {
    out.failure = Failure{std::move(kind), "single_stage", std::move(message)};
    out.stage_records.push_back(record);
    return out;
  };

  lang::Program parsed;
  if (program) {
    record.emitted_program = program->source;
    if (program->mode != lang::Mode::extended) return fail("parse_error", "single-stage programs must be extended mode");
    parsed = program->program;
  } else {
    prompt::PlannerPrompt pp{"single_stage", "S1", qa.question, std::nullopt};
    record.planner_prompt = prompt::render(pp);
    try {
      record.emitted_program = tools.complete(record.planner_prompt, false);
    } catch (const ToolError& e) {
      return fail("planner_error", e.what());
    }
    try {
      parsed = lang::parse(record.emitted_program, lang::Mode::extended);
    } catch (const lang::ParseError& e) {
      return fail("parse_error", e.what());
    }
  }
  record.parsed_program = lang::render(parsed);

  const FrameWindow all = FrameWindow::full(video.frame_count);
  std::vector<int> viewed;
  std::optional<std::string> last_llm;
  std::exception_ptr replay_miss;

  lang::Dispatch dispatch = [&](const std::string& name, const std::vector<Value>& args) -> Value {
    try {
      if (name == "localize") {
        arity(name, args, 1, 2);
        FrameWindow frames = all;
        if (args.size() == 2) {
          if (!args[1].is_list()) throw std::invalid_argument("localize() frames must be a list");
          std::set<int> ids;
          for (const auto& v : args[1].list()) ids.insert(frame_arg(name, v));
          frames = FrameWindow(std::vector<int>(ids.begin(), ids.end()));
        }
        List result;
        if (!frames.empty())
          for (int f : tools.localize(text_arg(name, args[0]), frames)) result.emplace_back(f);
        return result;
      }
      if (name == "verify_action") {
        arity(name, args, 2, 2);
        return tools.verify_action(frame_arg(name, args[0]), text_arg(name, args[1]));
      }
      if (name == "caption") {
        arity(name, args, 1, 1);
        return tools.caption(frame_arg(name, args[0]));
      }
      if (name == "vqa") {
        arity(name, args, 2, 2);
        const int f = frame_arg(name, args[0]);
        viewed.push_back(f);
        return tools.vqa(f, text_arg(name, args[1]), false);
      }
      if (name == "score") {
        arity(name, args, 2, 2);
        return tools.score(frame_arg(name, args[0]), text_arg(name, args[1]));
      }
      if (name == "llm_query") {
        arity(name, args, 1, 2);
        std::vector<std::string> lines;
        if (args.size() == 2) {
          if (!args[1].is_list()) throw std::invalid_argument("llm_query() info must be a list");
          for (const auto& v : args[1].list()) lines.push_back(value_text(v));
        }
        const auto text = prompt::render(prompt::PredictPrompt{text_arg(name, args[0]), qa.candidates, lines});
        last_llm = tools.complete(text, true);
        if (out.prediction_prompt.empty()) out.prediction_prompt = text;
        return *last_llm;
      }
      if (name == "append") {
        arity(name, args, 2, 2);
        if (!args[0].is_list()) throw std::invalid_argument("append() expects a list");
        List l = args[0].list();
        l.push_back(args[1]);
        return l;
      }
      if (name == "len") {
        arity(name, args, 1, 1);
        if (args[0].is_list()) return static_cast<std::int64_t>(args[0].list().size());
        return static_cast<std::int64_t>(text_arg(name, args[0]).size());
      }
      if (name == "middle") {
        arity(name, args, 1, 1);
        if (!args[0].is_list() || args[0].list().empty()) throw std::invalid_argument("middle() expects a non-empty list");
        const auto& l = args[0].list();
        return l[l.size() / 2];
      }
      throw std::invalid_argument("unknown function '" + name + "'");
    } catch (const ReplayMissError&) {
      replay_miss = std::current_exception();
      throw;
    }
  };

  List candidates;
  for (const auto& c : qa.candidates) candidates.emplace_back(c);
  List frames;
  for (int f : all) frames.emplace_back(f);
  lang::Environment env{{"question", qa.question},
                        {"candidates", candidates},
                        {"frames", frames},
                        {"num_frames", static_cast<std::int64_t>(video.frame_count)}};

  lang::Interpreter interp(dispatch, step_budget);
  Value result;
  try {
    result = interp.run(parsed, env);
  } catch (const lang::RuntimeError& e) {
    if (replay_miss) std::rethrow_exception(replay_miss);
    record.memory_after.extra["steps"] = std::to_string(interp.steps());
    return fail("runtime_error", e.what());
  }
  record.memory_after.extra["steps"] = std::to_string(interp.steps());

  if (!viewed.empty()) {
    std::set<int> ids(viewed.begin(), viewed.end());
    out.grounded_window = FrameWindow(std::vector<int>(ids.begin(), ids.end()));
    out.grounded_window_s = to_seconds(*out.grounded_window, video.fps);
    record.memory_after.grounded_window = out.grounded_window;
  }

  if (result.is_none() && last_llm) result = *last_llm;
  if (result.is_none()) return fail("no_answer", "program produced no value");
  if (qa.is_multiple_choice() && result.is_int() && result.integer() >= 0 &&
      result.integer() < static_cast<std::int64_t>(qa.candidates.size())) {
    out.mc_index = static_cast<int>(result.integer());
    out.answer = qa.candidates[*out.mc_index];
  } else {
    out.answer = value_text(result);
    if (qa.is_multiple_choice()) out.mc_index = map_to_candidate(out.answer, qa.candidates);
  }
  out.stage_records.push_back(std::move(record));
  return out;
}

}  // namespace morevqa
