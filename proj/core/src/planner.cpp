#include "morevqa/planner.hpp"

#include <algorithm>
#include <set>

#include "morevqa/program.hpp"
#include "morevqa/text.hpp"

namespace morevqa {

namespace {

using Tokens = std::vector<std::string>;

bool in(const std::string& w, std::initializer_list<std::string_view> words) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

std::optional<TemporalRegion> region_word(const std::string& w) {
  if (w == "beginning" || w == "start") return TemporalRegion::beginning;
  if (w == "middle") return TemporalRegion::middle;
  if (w == "end") return TemporalRegion::end;
  return std::nullopt;
}

/// Finds a temporal phrase ("at the end of the video", "finally") and removes it.
std::optional<TemporalRegion> strip_region(Tokens& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == "finally") {
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      return TemporalRegion::end;
    }
    auto r = region_word(t[i]);
    if (!r || i == 0 || !in(t[i - 1], {"the", "very"})) continue;
    std::size_t first = i;
    while (first > 0 && in(t[first - 1], {"the", "very"})) --first;
    if (first > 0 && in(t[first - 1], {"at", "in", "near", "during", "towards", "toward", "by"})) --first;
    std::size_t last = i + 1;
    if (last < t.size() && t[last] == "of") {
      std::size_t k = last + 1;
      if (k < t.size() && t[k] == "the") ++k;
      if (k < t.size() && in(t[k], {"video", "clip"})) last = k + 1;
    }
    t.erase(t.begin() + static_cast<std::ptrdiff_t>(first), t.begin() + static_cast<std::ptrdiff_t>(last));
    return r;
  }
  return std::nullopt;
}

QAType classify(const Tokens& t) {
  if (t.empty()) return QAType::other;
  if (t[0] == "how" && t.size() > 1 && t[1] == "many") return QAType::counting;
  if (t[0] == "why") return QAType::why;
  if (t[0] == "how") return QAType::how;
  if (in(t[0], {"what", "which", "who"})) return QAType::what;
  if (t[0] == "where") return QAType::location;
  if (t[0] == "describe") return QAType::description;
  if (t[0] == "explain") return QAType::explanation;
  return QAType::other;
}

Tokens strip_leading(Tokens t) {
  static const std::set<std::string> kLead = {"why",  "how", "many", "what", "which", "who",  "where",
                                              "when", "is",  "are",  "was",  "were",  "does", "did",
                                              "do",   "the", "a",    "an",   "describe", "explain"};
  auto it = std::find_if(t.begin(), t.end(), [](const std::string& w) { return !kLead.count(w); });
  return Tokens(it, t.end());
}

bool valid_event(const Tokens& t) {
  static const std::set<std::string> kPrepositions = {"in",     "on",    "at",     "of",   "for",
                                                      "from",   "to",    "with",   "by",   "behind",
                                                      "under",  "near",  "inside", "outside", "around"};
  return t.size() >= 2 && !kPrepositions.count(t.front());
}

bool ends_with_ing(const std::string& w) { return w.size() > 4 && w.compare(w.size() - 3, 3, "ing") == 0; }

std::string program_text(const std::vector<lang::Stmt>& stmts) {
  lang::Program p;
  p.statements = stmts;
  if (p.statements.empty()) p.statements.push_back(lang::call_stmt("noop", {}));
  return lang::render(p);
}

lang::Expr boolean(bool b) { return lang::Expr{lang::BoolLit{b}}; }

}  // namespace

QuestionAnalysis analyze_question(const std::string& question) {
  QuestionAnalysis a;
  Tokens t = text::tokens(question);
  a.qa_type = classify(t);
  static const std::set<std::string> kOcr = {"say", "written", "text", "sign", "label"};
  a.require_ocr = std::any_of(t.begin(), t.end(), [](const std::string& w) { return kOcr.count(w) > 0; });

  a.region = strip_region(t);
  a.revised_question = text::join(t, " ");
  if (!a.revised_question.empty() && question.find('?') != std::string::npos) a.revised_question += "?";
  if (!a.region) a.revised_question = question;

  std::size_t conj_at = t.size();
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (in(t[i], {"before", "after", "while", "when", "as"})) {
      conj_at = i;
      break;
    }
  }
  if (conj_at < t.size()) {
    Tokens main = strip_leading(Tokens(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(conj_at)));
    Tokens ref = strip_leading(Tokens(t.begin() + static_cast<std::ptrdiff_t>(conj_at) + 1, t.end()));
    if (!main.empty() && !ref.empty() && ends_with_ing(ref.front())) ref.insert(ref.begin(), main.front());
    if (valid_event(main) && valid_event(ref)) {
      const auto& c = t[conj_at];
      a.conjunction = c == "before" ? TemporalConjunction::before
                      : c == "after" ? TemporalConjunction::after
                                     : TemporalConjunction::while_;
      a.events = {text::join(main, " "), text::join(ref, " ")};
      return a;
    }
  }
  Tokens ev = strip_leading(t);
  if (valid_event(ev)) a.events = {text::join(ev, " ")};
  return a;
}

std::string event_subject(const std::string& event_text) {
  auto t = text::tokens(event_text);
  if (t.empty()) return {};
  return "the " + t.front();
}

std::vector<std::string> subquestion_templates(QAType type, const std::vector<std::string>& events) {
  const std::string subject = events.empty() ? std::string{} : event_subject(events.front());
  switch (type) {
    case QAType::why:
      if (subject.empty()) return {};
      return {"what is " + subject + " doing?", "what is " + subject + " interacting with?"};
    case QAType::location:
      return {"where is this?"};
    case QAType::counting: {
      if (events.empty()) return {};
      const auto t = text::tokens(events.front());
      return {"how many " + t.front() + " are visible?"};
    }
    default:
      return {};
  }
}

std::string rule_plan(StageName stage, const MemoryState& memory) {
  using lang::call_stmt;
  using lang::str;
  std::vector<lang::Stmt> out;
  switch (stage) {
    case StageName::event_parsing: {
      const auto a = analyze_question(memory.question);
      if (a.region) {
        out.push_back(call_stmt("trim", {str(std::string(to_string(*a.region)))}));
        out.push_back(call_stmt("revise_question", {str(a.revised_question)}));
      }
      out.push_back(call_stmt("classify", {str(std::string(to_string(a.qa_type)))}));
      if (a.require_ocr) out.push_back(call_stmt("require_ocr", {boolean(true)}));
      for (const auto& e : a.events) out.push_back(call_stmt("parse_event", {str(e)}));
      if (a.conjunction != TemporalConjunction::none)
        out.push_back(call_stmt("set_conjunction", {str(std::string(to_string(a.conjunction)))}));
      break;
    }
    case StageName::grounding: {
      const auto& q = memory.event_queue;
      auto ground = [&](const std::string& e) {
        out.push_back(call_stmt("localize", {str(e)}));
        out.push_back(call_stmt("verify_action", {str(e)}));
      };
      if (q.size() == 1) {
        ground(q[0]);
      } else if (q.size() >= 2) {
        ground(q[1]);
        out.push_back(call_stmt("anchor_then_shift", {}));
        ground(q[0]);
      }
      break;
    }
    case StageName::reasoning: {
      for (const auto& sq : subquestion_templates(memory.qa_type, memory.event_queue)) {
        out.push_back(call_stmt("subquestion", {str(sq)}));
        out.push_back(call_stmt("vqa_on_grounded", {str(sq)}));
      }
      break;
    }
    case StageName::prediction:
      break;
  }
  return program_text(out);
}

}  // namespace morevqa
