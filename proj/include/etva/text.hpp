#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace etva::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// "Space Station" -> "space_station". Non-alphanumerics collapse to one '_'.
std::string normalize_id(std::string_view raw);

std::vector<std::string> split_words(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Replace `{name}` occurrences for the given names only; other braces are left alone.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace etva::text
