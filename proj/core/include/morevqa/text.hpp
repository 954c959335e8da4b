#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace morevqa::text {

/// Lowercase, punctuation replaced by spaces, whitespace collapsed and trimmed.
std::string normalize(std::string_view s);

std::vector<std::string> tokens(std::string_view s);
std::set<std::string> token_set(std::string_view s);

/// True when the token sequence of `needle` occurs contiguously in `haystack`.
bool contains_phrase(std::string_view haystack, std::string_view needle);

/// Tokens that carry no answer content (articles, copulas, prepositions).
bool is_stopword(std::string_view token);
std::vector<std::string> content_tokens(std::string_view s);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace morevqa::text
