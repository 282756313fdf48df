#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "etva/category.hpp"

namespace etva::graph {

enum class NodeKind { Entity, Attribute, Relation };

std::string_view to_string(NodeKind k) noexcept;
NodeKind parse_node_kind(std::string_view s);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Entity;
  std::string label;
  Category fine_label = Category::Existence;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::string from;
  std::string to;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Typed scene graph. Nodes keep insertion order; ids are unique.
///
/// The container accepts structurally invalid edges (self-loops, dangling ends,
/// kind clashes) so that `validate` can report them; only duplicate node ids
/// are refused at insert time.
class SceneGraph {
 public:
  SceneGraph() = default;
  explicit SceneGraph(std::string source_prompt) : source_prompt_(std::move(source_prompt)) {}

  /// Inserts a node; the id is normalized to lowercase snake form. Throws
  /// ArgumentError on a duplicate or empty id. Returns the stored id.
  const std::string& add_node(Node node);
  void add_edge(std::string from, std::string to);

  const std::string& source_prompt() const noexcept { return source_prompt_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  bool contains(std::string_view id) const;
  const Node& node(std::string_view id) const;  // NotFoundError
  /// Insertion position of a node, used as the primary ordering key.
  std::size_t position(std::string_view id) const;  // NotFoundError

  bool empty() const noexcept { return nodes_.empty(); }

  friend bool operator==(const SceneGraph& a, const SceneGraph& b) {
    return a.source_prompt_ == b.source_prompt_ && a.nodes_ == b.nodes_ &&
           a.edges_ == b.edges_;
  }

 private:
  std::string source_prompt_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class ViolationCode {
  EmptyLabel,
  FineLabelMismatch,
  SelfLoop,
  DanglingEdge,
  DuplicateEdge,
  SameKindAdjacent,
  AttributeIncoming,
  AttributeOutDegree,
  AttributeTarget,
  RelationIncoming,
  RelationArity,
  RelationTarget,
  NoEntity,
};

std::string_view to_string(ViolationCode c) noexcept;

struct Violation {
  ViolationCode code;
  std::string description;  // names the offending node/edge ids
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;

  bool has(ViolationCode code) const;
};

ValidationReport validate(const SceneGraph& graph);

/// Batch validation; OpenMP over graphs. Order of reports matches input.
std::vector<ValidationReport> validate_all(std::span<const SceneGraph> graphs);
std::vector<ValidationReport> validate_all_serial(std::span<const SceneGraph> graphs);

std::vector<const Node*> entities(const SceneGraph& graph);
/// Attribute nodes whose edge targets `entity_id`. NotFoundError on unknown id.
std::vector<const Node*> attributes_of(const SceneGraph& graph, std::string_view entity_id);
/// Relation nodes with an edge to `entity_id`. NotFoundError on unknown id.
std::vector<const Node*> relations_of(const SceneGraph& graph, std::string_view entity_id);

/// Entity targets of a relation's outgoing edges in edge-insertion order
/// (subject first, object second for graphs produced by the builder).
std::vector<std::string> relation_endpoints(const SceneGraph& graph, std::string_view relation_id);
/// Target of an attribute's outgoing edge, or empty if it has none.
std::string attribute_owner(const SceneGraph& graph, std::string_view attribute_id);

nlohmann::json to_json(const SceneGraph& graph);
/// Throws SchemaError on missing fields or unknown kind/fine_label tags.
SceneGraph graph_from_json(const nlohmann::json& doc);

}  // namespace etva::graph
