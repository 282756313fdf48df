#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace etva {

/// The ten question labels used for per-dimension reporting.
enum class Category {
  Existence,
  Action,
  Material,
  Spatial,
  Number,
  Shape,
  Color,
  Camera,
  Physics,
  Other,
};

inline constexpr std::size_t kCategoryCount = 10;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::Existence, Category::Action, Category::Material, Category::Spatial,
    Category::Number,    Category::Shape,  Category::Color,    Category::Camera,
    Category::Physics,   Category::Other,
};

std::string_view to_string(Category c) noexcept;

/// Exact tag match (lowercase); nullopt for anything else.
std::optional<Category> parse_category(std::string_view tag) noexcept;

/// Lenient form used on model output: trims, lowercases, unknown -> Other.
Category parse_category_lenient(std::string_view tag);

inline std::size_t index_of(Category c) noexcept { return static_cast<std::size_t>(c); }

}  // namespace etva
