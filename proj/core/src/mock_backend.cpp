#include "morevqa/mock_backend.hpp"

#include <algorithm>
#include <set>

#include "morevqa/planner.hpp"
#include "morevqa/prompt.hpp"
#include "morevqa/text.hpp"

namespace morevqa {

namespace {

const FixtureFrame& frame_or_throw(const WorldFixture& fixture, int frame_id) {
  const auto* f = fixture.frame(frame_id);
  if (f == nullptr)
    throw MockError("unknown frame " + std::to_string(frame_id) + " in video " + fixture.video_id);
  return *f;
}

bool object_matches(const std::string& phrase, const std::string& name) {
  const auto n = text::normalize(name);
  return !n.empty() && (text::normalize(phrase) == n || text::contains_phrase(phrase, name));
}

std::string join_or(const std::vector<std::string>& parts, const char* fallback) {
  return parts.empty() ? std::string(fallback) : text::join(parts, ", ");
}

bool starts_with(const std::string& s, std::string_view p) { return s.compare(0, p.size(), p) == 0; }

}  // namespace

std::vector<std::pair<int, BoundingBox>> mock_localize(const WorldFixture& fixture, const std::string& phrase,
                                                       const std::vector<int>& frames) {
  std::vector<std::pair<int, BoundingBox>> out;
  for (int id : frames) {
    const auto& f = frame_or_throw(fixture, id);
    for (const auto& o : f.objects)
      if (object_matches(phrase, o.name)) out.emplace_back(id, o.box);
  }
  return out;
}

double mock_score(const WorldFixture& fixture, int frame_id, const std::string& text_in) {
  const auto& f = frame_or_throw(fixture, frame_id);
  auto frame_tokens = text::token_set(f.caption);
  for (const auto& o : f.objects) frame_tokens.merge(text::token_set(o.name));
  for (const auto& a : f.actions) frame_tokens.merge(text::token_set(a));
  return text::jaccard(text::token_set(text_in), frame_tokens);
}

bool mock_verify_action(const WorldFixture& fixture, int frame_id, const std::string& action) {
  const auto& f = frame_or_throw(fixture, frame_id);
  const auto query = text::normalize(action);
  if (query.empty()) return false;
  for (const auto& a : f.actions) {
    if (text::normalize(a) == query || text::contains_phrase(action, a) || text::contains_phrase(a, action))
      return true;
  }
  return false;
}

std::string mock_caption(const WorldFixture& fixture, int frame_id) { return frame_or_throw(fixture, frame_id).caption; }

std::string mock_vqa(const WorldFixture& fixture, int frame_id, const std::string& question, bool ocr) {
  const auto& f = frame_or_throw(fixture, frame_id);
  if (ocr) return f.ocr_text.value_or("no text");
  const auto q = text::normalize(question);
  const auto q_tokens = text::token_set(q);

  if (starts_with(q, "how many ")) {
    const auto t = text::tokens(q);
    const std::string& target = t[2];
    int count = 0;
    for (const auto& o : f.objects) {
      const auto n = text::normalize(o.name);
      if (n == target || n + "s" == target) ++count;
    }
    return std::to_string(count);
  }
  if (q_tokens.count("doing")) return join_or(f.actions, "nothing");
  if (text::contains_phrase(q, "interacting with")) {
    std::vector<std::string> others;
    for (const auto& o : f.objects) {
      const auto n = text::normalize(o.name);
      if (q_tokens.count(n) || std::find(others.begin(), others.end(), n) != others.end()) continue;
      others.push_back(n);
    }
    return join_or(others, "nothing");
  }
  if (starts_with(q, "where")) return f.caption;
  return f.actions.empty() ? f.caption : text::join(f.actions, ", ");
}

std::vector<std::string> open_answer_phrases(const WorldFixture& fixture) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    const auto n = text::normalize(s);
    if (!n.empty() && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  if (fixture.qa_notes) {
    std::size_t start = 0;
    const auto& notes = *fixture.qa_notes;
    while (start <= notes.size()) {
      auto end = notes.find(';', start);
      if (end == std::string::npos) end = notes.size();
      add(notes.substr(start, end - start));
      start = end + 1;
    }
    return out;
  }
  for (const auto& f : fixture.frames) {
    for (const auto& a : f.actions) add(a);
    for (const auto& o : f.objects) add(o.name);
    if (f.ocr_text) add(*f.ocr_text);
  }
  return out;
}

std::string mock_complete(const std::string& prompt_text, const WorldFixture* fixture) {
  const auto header = prompt::header_line(prompt_text);
  if (header == prompt::kPredictHeader) {
    auto p = prompt::parse_predict(prompt_text);
    if (!p) throw MockError("malformed prediction prompt");
    if (!p->candidates.empty()) return p->candidates[prompt::best_by_overlap(p->candidates, p->context_lines)];
    if (fixture == nullptr) return "unknown";
    const auto phrases = open_answer_phrases(*fixture);
    if (phrases.empty()) return "unknown";
    const auto best = prompt::best_by_overlap(phrases, p->context_lines);
    return prompt::overlap(phrases[best], p->context_lines) > 0 ? phrases[best] : "unknown";
  }
  if (header.substr(0, prompt::kPlannerHeaderPrefix.size()) == prompt::kPlannerHeaderPrefix) {
    auto p = prompt::parse_planner(prompt_text);
    auto stage = parse_stage_name(p->stage);
    if (!stage || *stage == StageName::prediction)
      throw MockError("no program generator for planner stage '" + p->stage + "'");
    if (!p->memory) throw MockError("planner prompt without memory block");
    return rule_plan(*stage, *p->memory);
  }
  throw MockError("missing header line");
}

MockBackend::MockBackend(std::shared_ptr<const FixtureCorpus> corpus) : corpus_(std::move(corpus)) {
  if (!corpus_) throw std::invalid_argument("mock backend needs a fixture corpus");
}

ToolResponse MockBackend::handle(const ToolRequest& req) {
  if (auto why = validate_request(req); !why.empty()) return ToolResponse::failure(req.id, kInvalidPrefix, why);
  const WorldFixture* fixture = req.video_id ? corpus_->find(*req.video_id) : nullptr;
  if (req.method != ToolMethod::complete && fixture == nullptr)
    return ToolResponse::failure(req.id, kBackendPrefix, "unknown video '" + req.video_id.value_or("") + "'");
  try {
    const auto& a = req.args;
    switch (req.method) {
      case ToolMethod::caption:
        return ToolResponse::success(req.id, mock_caption(*fixture, *req.frame_id));
      case ToolMethod::vqa:
        return ToolResponse::success(
            req.id, mock_vqa(*fixture, *req.frame_id, a["question"].get<std::string>(),
                             a.contains("prefix") && a["prefix"].get<std::string>() == "ocr"));
      case ToolMethod::localize: {
        json out = json::array();
        for (const auto& [frame, box] :
             mock_localize(*fixture, a["phrase"].get<std::string>(), a["frames"].get<std::vector<int>>()))
          out.push_back({{"frame_id", frame}, {"box", box}});
        return ToolResponse::success(req.id, std::move(out));
      }
      case ToolMethod::verify_action:
        return ToolResponse::success(req.id,
                                     mock_verify_action(*fixture, *req.frame_id, a["action"].get<std::string>()));
      case ToolMethod::score:
        return ToolResponse::success(req.id, mock_score(*fixture, *req.frame_id, a["text"].get<std::string>()));
      case ToolMethod::complete:
        return ToolResponse::success(req.id, mock_complete(a["prompt"].get<std::string>(), fixture));
    }
  } catch (const std::exception& e) {
    return ToolResponse::failure(req.id, kBackendPrefix, e.what());
  }
  return ToolResponse::failure(req.id, kInvalidPrefix, "unknown method");
}

}  // namespace morevqa
