#ifndef PROMPTLENS_COMMON_TEXT_H_
#define PROMPTLENS_COMMON_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace promptlens::text {

std::string Trim(std::string_view s);
std::string Lower(std::string_view s);
std::vector<std::string> SplitWhitespace(std::string_view s);
std::vector<std::string> SplitLines(std::string_view s);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);

bool StartsWith(std::string_view s, std::string_view prefix);
bool EndsWith(std::string_view s, std::string_view suffix);

inline bool IsTerminalPunct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '?' || c == '!';
}

// Removes trailing characters from IsTerminalPunct.
std::string StripTrailingPunct(std::string_view s);

// Uppercases the first ASCII letter.
std::string CapitalizeFirst(std::string_view s);

}  // namespace promptlens::text

#endif  // PROMPTLENS_COMMON_TEXT_H_
