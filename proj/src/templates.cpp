#include "etva/templates.hpp"

#include <fstream>
#include <iterator>
#include <vector>

#include "etva/errors.hpp"

namespace etva {

namespace {

#include "default_templates.inc"

struct Slot {
  std::string_view file;
  std::string TemplateSet::*field;
  std::vector<std::string_view> required;
};

const std::vector<Slot>& slots() {
  static const std::vector<Slot> kSlots = {
      {"element_extractor", &TemplateSet::element_extractor, {"{prompt}"}},
      {"graph_builder", &TemplateSet::graph_builder, {"{prompt}", "{elements}"}},
      {"graph_traverser", &TemplateSet::graph_traverser, {"{seeds}"}},
      {"vanilla_qg", &TemplateSet::vanilla_qg, {"{prompt}"}},
      {"knowledge", &TemplateSet::knowledge, {"{prompt}"}},
      {"stage_understanding", &TemplateSet::stage_understanding, {}},
      {"stage_reflection", &TemplateSet::stage_reflection, {"{question}", "{description}", "{knowledge}"}},
      {"stage_conclusion", &TemplateSet::stage_conclusion,
       {"{question}", "{description}", "{knowledge}", "{reflection}"}},
      {"direct_answer", &TemplateSet::direct_answer, {"{question}"}},
  };
  return kSlots;
}

}  // namespace

TemplateSet TemplateSet::defaults() {
  TemplateSet t;
  t.element_extractor = kElementExtractor;
  t.graph_builder = kGraphBuilder;
  t.graph_traverser = kGraphTraverser;
  t.vanilla_qg = kVanillaQg;
  t.knowledge = kKnowledge;
  t.stage_understanding = kStageUnderstanding;
  t.stage_reflection = kStageReflection;
  t.stage_conclusion = kStageConclusion;
  t.direct_answer = kDirectAnswer;
  return t;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("template directory not found: " + dir.string());
  TemplateSet t = defaults();
  for (const Slot& s : slots()) {
    const auto path = dir / (std::string(s.file) + ".txt");
    std::ifstream in(path);
    if (!in) continue;
    t.*(s.field) = std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  t.check();
  return t;
}

void TemplateSet::check() const {
  for (const Slot& s : slots()) {
    const std::string& body = this->*(s.field);
    for (auto placeholder : s.required)
      if (body.find(placeholder) == std::string::npos)
        throw ArgumentError("template " + std::string(s.file) + " is missing placeholder " + std::string(placeholder));
  }
}

}  // namespace etva
