#pragma once

#include <optional>
#include <string_view>

namespace etva {

enum class Verdict { No = 0, Yes = 1 };

inline std::string_view to_string(Verdict v) noexcept { return v == Verdict::Yes ? "Yes" : "No"; }

inline std::optional<Verdict> parse_verdict_tag(std::string_view s) noexcept {
  if (s == "Yes" || s == "yes") return Verdict::Yes;
  if (s == "No" || s == "no") return Verdict::No;
  return std::nullopt;
}

}  // namespace etva
