#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qrefine {

// Splits on '\n'. The result always has one more element than the number of
// newlines, so join_segments(split_segments(s)) == s for every s.
std::vector<std::string> split_segments(std::string_view text);
std::string join_segments(const std::vector<std::string>& segments);

// Source lines: like split_segments but without the empty tail that follows
// a terminating newline ("a\nb\n" has two lines, "" has none).
std::vector<std::string> split_lines(std::string_view text);

std::string_view trim(std::string_view text);
bool is_identifier(std::string_view text);
bool starts_with(std::string_view text, std::string_view prefix);
bool ends_with(std::string_view text, std::string_view suffix);

// Replaces every `{{name}}` with values[name]; unknown placeholders are kept.
std::string render_template(std::string_view text,
                            const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace qrefine
