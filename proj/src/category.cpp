#include "etva/category.hpp"

#include "etva/text.hpp"

namespace etva {

namespace {
constexpr std::array<std::string_view, kCategoryCount> kNames = {
    "existence", "action", "material", "spatial", "number",
    "shape",     "color",  "camera",   "physics", "other",
};
}

std::string_view to_string(Category c) noexcept { return kNames[index_of(c)]; }

std::optional<Category> parse_category(std::string_view tag) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == tag) return kAllCategories[i];
  }
  return std::nullopt;
}

Category parse_category_lenient(std::string_view tag) {
  const std::string t = text::to_lower(text::trim(tag));
  if (auto c = parse_category(t)) return *c;
  return Category::Other;
}

}  // namespace etva
