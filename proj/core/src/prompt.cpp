#include "morevqa/prompt.hpp"

#include <set>

#include "morevqa/text.hpp"

namespace morevqa::prompt {

namespace {

std::string one_line(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c == '\n' || c == '\r') c = ' ';
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

std::string render(const PredictPrompt& p) {
  std::string out(kPredictHeader);
  out += "\nquestion: " + one_line(p.question) + "\n";
  if (!p.candidates.empty()) {
    out += "candidates:\n";
    for (std::size_t i = 0; i < p.candidates.size(); ++i)
      out += std::to_string(i) + ": " + one_line(p.candidates[i]) + "\n";
  }
  out += "context:\n";
  for (const auto& l : p.context_lines) out += one_line(l) + "\n";
  return out;
}

std::optional<PredictPrompt> parse_predict(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.size() < 2 || lines[0] != kPredictHeader || !starts_with(lines[1], "question: ")) return std::nullopt;
  PredictPrompt p;
  p.question = std::string(lines[1].substr(10));
  std::size_t i = 2;
  if (i < lines.size() && lines[i] == "candidates:") {
    ++i;
    for (; i < lines.size() && lines[i] != "context:"; ++i) {
      const auto colon = lines[i].find(": ");
      if (colon == std::string_view::npos) return std::nullopt;
      p.candidates.emplace_back(lines[i].substr(colon + 2));
    }
  }
  if (i >= lines.size() || lines[i] != "context:") return std::nullopt;
  for (++i; i < lines.size(); ++i) p.context_lines.emplace_back(lines[i]);
  return p;
}

std::string render(const PlannerPrompt& p) {
  std::string out(kPlannerHeaderPrefix);
  out += p.stage + "\n";
  out += "template: " + p.template_id + "\n";
  out += "question: " + one_line(p.question) + "\n";
  if (p.memory) out += "memory: " + json(*p.memory).dump() + "\n";
  return out;
}

std::optional<PlannerPrompt> parse_planner(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty() || !starts_with(lines[0], kPlannerHeaderPrefix)) return std::nullopt;
  PlannerPrompt p;
  p.stage = std::string(lines[0].substr(kPlannerHeaderPrefix.size()));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto l = lines[i];
    if (starts_with(l, "template: ")) p.template_id = std::string(l.substr(10));
    else if (starts_with(l, "question: ")) p.question = std::string(l.substr(10));
    else if (starts_with(l, "memory: ")) p.memory = json::parse(l.substr(8)).get<MemoryState>();
  }
  return p;
}

std::string_view header_line(std::string_view text) {
  auto nl = text.find('\n');
  auto h = text.substr(0, nl);
  if (!h.empty() && h.back() == '\r') h.remove_suffix(1);
  return h;
}

std::string_view line_body(std::string_view line) {
  if (!starts_with(line, "[frame ")) return line;
  const auto close = line.find("] ");
  if (close == std::string_view::npos) return line;
  const auto colon = line.find(": ", close + 2);
  if (colon == std::string_view::npos) return line.substr(close + 2);
  return line.substr(colon + 2);
}

int overlap(std::string_view answer, const std::vector<std::string>& context_lines) {
  const auto ct = text::content_tokens(answer);
  const std::set<std::string> answer_tokens(ct.begin(), ct.end());
  int total = 0;
  for (const auto& l : context_lines) {
    const auto line_tokens = text::token_set(line_body(l));
    for (const auto& t : answer_tokens) total += static_cast<int>(line_tokens.count(t));
  }
  return total;
}

std::size_t best_by_overlap(const std::vector<std::string>& options, const std::vector<std::string>& context_lines) {
  std::size_t best = 0;
  int best_score = -1;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const int s = overlap(options[i], context_lines);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

}  // namespace morevqa::prompt
