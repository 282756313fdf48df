#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace etva {

/// Agent prompt texts with named placeholders ({prompt}, {elements}, {seeds},
/// {question}, {description}, {knowledge}, {reflection}).
struct TemplateSet {
  std::string element_extractor;
  std::string graph_builder;
  std::string graph_traverser;
  std::string vanilla_qg;
  std::string knowledge;
  std::string stage_understanding;
  std::string stage_reflection;
  std::string stage_conclusion;
  std::string direct_answer;

  /// The texts shipped in templates/, compiled in.
  static TemplateSet defaults();
  /// Defaults overridden by any `<name>.txt` present in `dir`. Throws
  /// ArgumentError if a template lacks one of its required placeholders.
  static TemplateSet load(const std::filesystem::path& dir);

  void check() const;
};

}  // namespace etva
