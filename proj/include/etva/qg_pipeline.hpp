#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

#include "etva/category.hpp"
#include "etva/errors.hpp"
#include "etva/llm_backend.hpp"
#include "etva/scene_graph.hpp"
#include "etva/templates.hpp"

namespace etva::qg {

struct EntityElement {
  std::string id;
  std::string label;
};

struct AttributeElement {
  std::string id;
  std::string label;
  Category fine_label = Category::Other;
  std::string owner;
};

struct RelationElement {
  std::string id;
  std::string label;
  Category fine_label = Category::Other;
  std::string subject;
  std::string object;
};

/// The extractor's decomposition of one prompt. Entity order is extraction
/// order and fixes every downstream ordering.
struct ElementSet {
  std::string prompt;
  std::vector<EntityElement> entities;
  std::vector<AttributeElement> attributes;
  std::vector<RelationElement> relations;
};

/// Reads {"entities", "attributes", "relations"} as produced by the extractor.
/// Ids are normalized, unknown tags map to Other. Throws SchemaError on
/// missing fields, duplicate ids, or references to undeclared entities.
ElementSet parse_elements(const nlohmann::json& doc, std::string prompt);
nlohmann::json to_json(const ElementSet& elements);

class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& what, std::vector<std::string> violations)
      : Error(what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

struct AgentSettings {
  TemplateSet templates = TemplateSet::defaults();
  std::string model = "qwen2.5-72b-instruct";
  int max_tokens = 2048;
  double temperature = 0.0;
};

/// One extractor call (plus at most one repair). SchemaError if both replies
/// are unusable; ArgumentError on an empty prompt.
ElementSet extract_elements(std::string_view prompt, llm::Backend& backend, const AgentSettings& settings);

/// Deterministic assembly; the result always passes graph::validate.
/// Throws ConstructionError listing the violations otherwise.
graph::SceneGraph build_graph(const ElementSet& elements);
/// LLM-built variant kept for fidelity experiments; validated the same way.
graph::SceneGraph build_graph_agent(const ElementSet& elements, llm::Backend& backend, const AgentSettings& settings);

struct QuestionSeed {
  std::string node_id;
  graph::NodeKind kind = graph::NodeKind::Entity;
  std::vector<std::string> context;  // node label, then its anchors' labels
};

/// Entities (insertion order), then attributes grouped by owner in entity
/// order (ties by id), then relations once both endpoints and all of their
/// attributes are out, ordered by when that happened, ties by id.
/// Throws ContractError for a graph that fails validation.
std::vector<QuestionSeed> traverse(const graph::SceneGraph& graph);

struct AtomicQuestion {
  std::string question_id;
  std::string prompt_id;
  std::string text;
  Category category = Category::Other;
  std::string source_node_id;  // empty for questions not tied to a node
  std::string source_prompt;
};

/// Lexical yes/no check: auxiliary-verb opener and trailing '?'.
bool is_yes_no_question(std::string_view text);

std::string render_seed(const QuestionSeed& seed, const graph::SceneGraph& graph);

enum class RenderMode { Template, Agent };

struct RenderOutcome {
  std::vector<AtomicQuestion> questions;
  std::vector<std::string> warnings;
};

/// Template mode is a pure function of the graph. Agent mode makes one batched
/// call; seeds it misses or phrases badly (after one repair) fall back to the
/// template surface form.
RenderOutcome render_questions(const std::vector<QuestionSeed>& seeds, const graph::SceneGraph& graph,
                               std::string_view prompt_id, RenderMode mode, llm::Backend* backend,
                               const AgentSettings& settings);

/// Single in-context-learning call that writes questions directly (ablation baseline).
std::vector<AtomicQuestion> vanilla_questions(std::string_view prompt, std::string_view prompt_id,
                                              llm::Backend& backend, const AgentSettings& settings);

std::string question_id(std::string_view prompt_id, std::size_t ordinal);

nlohmann::json to_json(const AtomicQuestion& q);
/// Questions file line -> question. source_prompt stays empty.
AtomicQuestion question_from_json(const nlohmann::json& doc);

enum class QgMode { MultiAgent, Vanilla };
QgMode parse_qg_mode(std::string_view s);

struct QgOptions {
  QgMode mode = QgMode::MultiAgent;
  bool agent_builder = false;
  RenderMode render = RenderMode::Template;
};

struct QgResult {
  std::string prompt_id;
  ElementSet elements;
  graph::SceneGraph graph;
  std::vector<AtomicQuestion> questions;
  std::vector<std::string> warnings;
};

/// extract -> build -> traverse -> render for one prompt (or the vanilla call).
QgResult generate(std::string_view prompt_id, std::string_view prompt, llm::Backend& backend,
                  const AgentSettings& settings, const QgOptions& options);

}  // namespace etva::qg
