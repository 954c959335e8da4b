#include "morevqa/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace morevqa::text {

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  const std::string norm = normalize(s);
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    out.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::set<std::string> token_set(std::string_view s) {
  auto t = tokens(s);
  return {t.begin(), t.end()};
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
  const auto h = tokens(haystack);
  const auto n = tokens(needle);
  if (n.empty()) return false;
  return std::search(h.begin(), h.end(), n.begin(), n.end()) != h.end();
}

bool is_stopword(std::string_view token) {
  static constexpr std::array<std::string_view, 24> kStop = {
      "a",  "an", "and", "are", "as",  "at",  "be",   "by",   "for", "from", "in",  "into",
      "is", "it", "of",  "on",  "or",  "the", "then", "this", "to",  "was",  "were", "with"};
  return std::find(kStop.begin(), kStop.end(), token) != kStop.end();
}

std::vector<std::string> content_tokens(std::string_view s) {
  auto t = tokens(s);
  std::erase_if(t, [](const std::string& w) { return is_stopword(w); });
  return t;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace morevqa::text
