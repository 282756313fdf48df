#include <doctest.h>

#include <random>

#include "etva/errors.hpp"
#include "etva/scene_graph.hpp"
#include "support/oracles.hpp"

using namespace etva;
using namespace etva::graph;

namespace {

SceneGraph water_graph() {
  SceneGraph g("Water is slowly pouring out of glass cup in the space station.");
  g.add_node({"water", NodeKind::Entity, "water", Category::Existence});
  g.add_node({"cup", NodeKind::Entity, "cup", Category::Existence});
  g.add_node({"glass", NodeKind::Attribute, "glass", Category::Material});
  g.add_node({"pouring_from", NodeKind::Relation, "pouring from", Category::Action});
  g.add_edge("glass", "cup");
  g.add_edge("pouring_from", "water");
  g.add_edge("pouring_from", "cup");
  return g;
}

}  // namespace

TEST_SUITE("scene_graph") {
  TEST_CASE("a well-formed graph validates") {
    const auto r = validate(water_graph());
    CHECK(r.ok);
    CHECK(r.violations.empty());
  }

  TEST_CASE("node ids are normalized and unique") {
    SceneGraph g;
    CHECK(g.add_node({"Space Station", NodeKind::Entity, "space station", Category::Existence}) == "space_station");
    CHECK(g.contains("space_station"));
    CHECK_THROWS_AS(g.add_node({"space station", NodeKind::Entity, "x", Category::Existence}), ArgumentError);
    CHECK_THROWS_AS(g.add_node({"  ", NodeKind::Entity, "x", Category::Existence}), ArgumentError);
    CHECK_THROWS_AS(g.node("nope"), NotFoundError);
  }

  TEST_CASE("attribute to attribute edge is rejected") {
    auto g = water_graph();
    g.add_node({"shiny", NodeKind::Attribute, "shiny", Category::Other});
    g.add_edge("shiny", "glass");
    const auto r = validate(g);
    CHECK_FALSE(r.ok);
    CHECK(r.has(ViolationCode::SameKindAdjacent));
  }

  TEST_CASE("relation arity must be exactly two entities") {
    SceneGraph one = water_graph();
    one.add_node({"near", NodeKind::Relation, "near", Category::Spatial});
    one.add_edge("near", "cup");
    CHECK(validate(one).has(ViolationCode::RelationArity));

    SceneGraph three = water_graph();
    three.add_node({"station", NodeKind::Entity, "station", Category::Existence});
    three.add_edge("pouring_from", "station");
    CHECK(validate(three).has(ViolationCode::RelationArity));
  }

  TEST_CASE("self loops and dangling edges") {
    auto g = water_graph();
    g.add_edge("cup", "cup");
    CHECK(validate(g).has(ViolationCode::SelfLoop));
    auto h = water_graph();
    h.add_edge("glass", "ghost");
    CHECK(validate(h).has(ViolationCode::DanglingEdge));
  }

  TEST_CASE("attribute needs exactly one entity owner") {
    auto g = water_graph();
    g.add_node({"clear", NodeKind::Attribute, "clear", Category::Color});
    CHECK(validate(g).has(ViolationCode::AttributeOutDegree));
    g.add_edge("clear", "water");
    g.add_edge("clear", "cup");
    CHECK(validate(g).has(ViolationCode::AttributeOutDegree));
  }

  TEST_CASE("edges into attributes or relations are rejected") {
    auto g = water_graph();
    g.add_edge("cup", "glass");
    const auto r = validate(g);
    CHECK(r.has(ViolationCode::AttributeIncoming));
    auto h = water_graph();
    h.add_node({"on", NodeKind::Relation, "on", Category::Spatial});
    h.add_edge("on", "pouring_from");
    h.add_edge("on", "cup");
    CHECK_FALSE(validate(h).ok);
  }

  TEST_CASE("duplicate edges, empty labels, fine-label mismatch, no entity") {
    auto g = water_graph();
    g.add_edge("glass", "cup");
    CHECK(validate(g).has(ViolationCode::DuplicateEdge));

    SceneGraph e;
    e.add_node({"thing", NodeKind::Entity, "", Category::Existence});
    CHECK(validate(e).has(ViolationCode::EmptyLabel));

    SceneGraph f;
    f.add_node({"thing", NodeKind::Entity, "thing", Category::Color});
    CHECK(validate(f).has(ViolationCode::FineLabelMismatch));

    SceneGraph lone;
    lone.add_node({"red", NodeKind::Attribute, "red", Category::Color});
    CHECK(validate(lone).has(ViolationCode::NoEntity));
  }

  TEST_CASE("accessors follow insertion order") {
    const auto g = water_graph();
    const auto ents = entities(g);
    REQUIRE(ents.size() == 2);
    CHECK(ents[0]->id == "water");
    CHECK(attributes_of(g, "cup").size() == 1);
    CHECK(relations_of(g, "water").front()->id == "pouring_from");
    CHECK(relation_endpoints(g, "pouring_from") == std::vector<std::string>{"water", "cup"});
    CHECK(attribute_owner(g, "glass") == "cup");
    CHECK_THROWS_AS(attributes_of(g, "ghost"), NotFoundError);
  }

  TEST_CASE("json round trip preserves the graph") {
    const auto g = water_graph();
    CHECK(graph_from_json(to_json(g)) == g);
    CHECK_THROWS_AS(graph_from_json(nlohmann::json{{"nodes", 1}}), SchemaError);
  }

  TEST_CASE("parallel validate_all agrees with the serial reference") {
    std::mt19937_64 rng(11);
    std::vector<SceneGraph> graphs;
    for (int i = 0; i < 300; ++i) {
      auto g = oracle::random_graph(rng);
      graphs.push_back(i % 3 == 0 ? oracle::mutate(g, oracle::kMutations[i % 5], rng) : g);
    }
    const auto par = validate_all(graphs);
    const auto ser = validate_all_serial(graphs);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].ok == ser[i].ok);
      CHECK(par[i].violations.size() == ser[i].violations.size());
    }
  }

  TEST_CASE("every targeted mutation is flagged") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      const auto g = oracle::random_graph(rng);
      REQUIRE(validate(g).ok);
      for (auto m : oracle::kMutations) CHECK_FALSE(validate(oracle::mutate(g, m, rng)).ok);
    }
  }
}
