#include "etva/scene_graph.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "etva/errors.hpp"
#include "etva/text.hpp"

namespace etva::graph {

std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Entity: return "entity";
    case NodeKind::Attribute: return "attribute";
    case NodeKind::Relation: return "relation";
  }
  return "entity";
}

NodeKind parse_node_kind(std::string_view s) {
  if (s == "entity") return NodeKind::Entity;
  if (s == "attribute") return NodeKind::Attribute;
  if (s == "relation") return NodeKind::Relation;
  throw SchemaError("unknown node kind '" + std::string(s) + "'", std::string(s));
}

std::string_view to_string(ViolationCode c) noexcept {
  switch (c) {
    case ViolationCode::EmptyLabel: return "empty_label";
    case ViolationCode::FineLabelMismatch: return "fine_label_mismatch";
    case ViolationCode::SelfLoop: return "self_loop";
    case ViolationCode::DanglingEdge: return "dangling_edge";
    case ViolationCode::DuplicateEdge: return "duplicate_edge";
    case ViolationCode::SameKindAdjacent: return "same_kind_adjacent";
    case ViolationCode::AttributeIncoming: return "attribute_incoming";
    case ViolationCode::AttributeOutDegree: return "attribute_out_degree";
    case ViolationCode::AttributeTarget: return "attribute_target";
    case ViolationCode::RelationIncoming: return "relation_incoming";
    case ViolationCode::RelationArity: return "relation_arity";
    case ViolationCode::RelationTarget: return "relation_target";
    case ViolationCode::NoEntity: return "no_entity";
  }
  return "unknown";
}

const std::string& SceneGraph::add_node(Node node) {
  node.id = text::normalize_id(node.id);
  if (node.id.empty()) throw ArgumentError("node id is empty after normalization");
  if (index_.contains(node.id)) throw ArgumentError("duplicate node id '" + node.id + "'");
  index_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
  return nodes_.back().id;
}

void SceneGraph::add_edge(std::string from, std::string to) {
  edges_.push_back(Edge{text::normalize_id(from), text::normalize_id(to)});
}

bool SceneGraph::contains(std::string_view id) const {
  return index_.find(std::string(id)) != index_.end();
}

const Node& SceneGraph::node(std::string_view id) const { return nodes_[position(id)]; }

std::size_t SceneGraph::position(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw NotFoundError("no node with id '" + std::string(id) + "'");
  return it->second;
}

bool ValidationReport::has(ViolationCode code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [code](const Violation& v) { return v.code == code; });
}

namespace {

struct Degree {
  std::size_t incoming = 0;
  std::vector<std::size_t> targets;  // node positions of well-formed outgoing edges
};

std::string edge_name(const Edge& e) { return e.from + "->" + e.to; }

}  // namespace

ValidationReport validate(const SceneGraph& graph) {
  ValidationReport report;
  auto flag = [&](ViolationCode code, std::string what) {
    report.violations.push_back(Violation{code, std::move(what)});
  };

  const auto& nodes = graph.nodes();
  bool any_entity = false;
  for (const Node& n : nodes) {
    if (text::trim(n.label).empty()) flag(ViolationCode::EmptyLabel, "node " + n.id + " has an empty label");
    const bool is_entity = n.kind == NodeKind::Entity;
    any_entity = any_entity || is_entity;
    if (is_entity != (n.fine_label == Category::Existence)) {
      flag(ViolationCode::FineLabelMismatch,
           "node " + n.id + " (" + std::string(to_string(n.kind)) + ") has fine_label " +
               std::string(to_string(n.fine_label)));
    }
  }
  if (!nodes.empty() && !any_entity) flag(ViolationCode::NoEntity, "graph has no entity node");

  std::vector<Degree> degree(nodes.size());
  std::set<std::pair<std::string, std::string>> seen;
  for (const Edge& e : graph.edges()) {
    if (e.from == e.to) {
      flag(ViolationCode::SelfLoop, "edge " + edge_name(e) + " is a self-loop");
      continue;
    }
    if (!graph.contains(e.from) || !graph.contains(e.to)) {
      flag(ViolationCode::DanglingEdge, "edge " + edge_name(e) + " references a missing node");
      continue;
    }
    if (!seen.emplace(e.from, e.to).second) {
      flag(ViolationCode::DuplicateEdge, "edge " + edge_name(e) + " is duplicated");
      continue;
    }
    const std::size_t from = graph.position(e.from);
    const std::size_t to = graph.position(e.to);
    if (nodes[from].kind == nodes[to].kind) {
      flag(ViolationCode::SameKindAdjacent,
           "edge " + edge_name(e) + ": adjacent nodes share kind " +
               std::string(to_string(nodes[from].kind)));
    }
    degree[from].targets.push_back(to);
    degree[to].incoming += 1;
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    const Degree& d = degree[i];
    if (n.kind == NodeKind::Attribute) {
      if (d.incoming > 0) flag(ViolationCode::AttributeIncoming, "attribute " + n.id + " has incoming edges");
      if (d.targets.size() != 1) {
        flag(ViolationCode::AttributeOutDegree,
             "attribute " + n.id + " has " + std::to_string(d.targets.size()) +
                 " outgoing edges (expected 1)");
      }
      for (std::size_t t : d.targets) {
        if (nodes[t].kind != NodeKind::Entity)
          flag(ViolationCode::AttributeTarget, "attribute " + n.id + " points at non-entity " + nodes[t].id);
      }
    } else if (n.kind == NodeKind::Relation) {
      if (d.incoming > 0) flag(ViolationCode::RelationIncoming, "relation " + n.id + " has incoming edges");
      std::size_t entity_targets = 0;
      for (std::size_t t : d.targets) {
        if (nodes[t].kind == NodeKind::Entity) {
          ++entity_targets;
        } else {
          flag(ViolationCode::RelationTarget, "relation " + n.id + " points at non-entity " + nodes[t].id);
        }
      }
      if (entity_targets != 2) {
        flag(ViolationCode::RelationArity,
             "relation " + n.id + " connects " + std::to_string(entity_targets) +
                 " entities (expected 2)");
      }
    }
  }

  report.ok = report.violations.empty();
  return report;
}

std::vector<ValidationReport> validate_all_serial(std::span<const SceneGraph> graphs) {
  std::vector<ValidationReport> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(validate(g));
  return out;
}

std::vector<ValidationReport> validate_all(std::span<const SceneGraph> graphs) {
  std::vector<ValidationReport> out(graphs.size());
  const auto n = static_cast<std::ptrdiff_t>(graphs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = validate(graphs[i]);
  return out;
}

std::vector<const Node*> entities(const SceneGraph& graph) {
  std::vector<const Node*> out;
  for (const Node& n : graph.nodes())
    if (n.kind == NodeKind::Entity) out.push_back(&n);
  return out;
}

namespace {

std::vector<const Node*> sources_into(const SceneGraph& graph, std::string_view entity_id, NodeKind kind) {
  graph.position(entity_id);  // throws NotFoundError
  std::vector<const Node*> out;
  for (const Edge& e : graph.edges()) {
    if (e.to != entity_id || !graph.contains(e.from)) continue;
    const Node& src = graph.node(e.from);
    if (src.kind != kind) continue;
    if (std::find(out.begin(), out.end(), &src) == out.end()) out.push_back(&src);
  }
  std::sort(out.begin(), out.end(), [&](const Node* a, const Node* b) {
    return graph.position(a->id) < graph.position(b->id);
  });
  return out;
}

}  // namespace

std::vector<const Node*> attributes_of(const SceneGraph& graph, std::string_view entity_id) {
  return sources_into(graph, entity_id, NodeKind::Attribute);
}

std::vector<const Node*> relations_of(const SceneGraph& graph, std::string_view entity_id) {
  return sources_into(graph, entity_id, NodeKind::Relation);
}

std::vector<std::string> relation_endpoints(const SceneGraph& graph, std::string_view relation_id) {
  graph.position(relation_id);
  std::vector<std::string> out;
  for (const Edge& e : graph.edges()) {
    if (e.from == relation_id && graph.contains(e.to) &&
        graph.node(e.to).kind == NodeKind::Entity &&
        std::find(out.begin(), out.end(), e.to) == out.end())
      out.push_back(e.to);
  }
  return out;
}

std::string attribute_owner(const SceneGraph& graph, std::string_view attribute_id) {
  graph.position(attribute_id);
  for (const Edge& e : graph.edges())
    if (e.from == attribute_id && e.to != attribute_id) return e.to;
  return {};
}

nlohmann::json to_json(const SceneGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : graph.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"label", n.label},
                     {"fine_label", to_string(n.fine_label)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : graph.edges()) edges.push_back({{"from", e.from}, {"to", e.to}});
  return {{"source_prompt", graph.source_prompt()}, {"nodes", nodes}, {"edges", edges}};
}

SceneGraph graph_from_json(const nlohmann::json& doc) {
  try {
    SceneGraph g(doc.at("source_prompt").get<std::string>());
    for (const auto& n : doc.at("nodes")) {
      const auto fine = n.at("fine_label").get<std::string>();
      auto cat = parse_category(fine);
      if (!cat) throw SchemaError("unknown fine_label '" + fine + "'", doc.dump());
      g.add_node(Node{n.at("id").get<std::string>(),
                      parse_node_kind(n.at("kind").get<std::string>()),
                      n.at("label").get<std::string>(), *cat});
    }
    for (const auto& e : doc.at("edges"))
      g.add_edge(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    return g;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed scene graph: ") + ex.what(), doc.dump());
  } catch (const ArgumentError& ex) {
    throw SchemaError(std::string("malformed scene graph: ") + ex.what(), doc.dump());
  }
}

}  // namespace etva::graph
