#include <doctest.h>

#include "etva/errors.hpp"
#include "etva/fixtures.hpp"
#include "etva/qg_pipeline.hpp"
#include "support/helpers.hpp"

using namespace etva;
using nlohmann::json;

namespace {


std::string render_one(const json& elements, const std::string& node) {
  const auto set = qg::parse_elements(elements, "p");
  const auto g = qg::build_graph(set);
  for (const auto& s : qg::traverse(g))
    if (s.node_id == node) return qg::render_seed(s, g);
  return {};
}

json one_attr(const std::string& entity, const std::string& label, const std::string& tag) {
  return json{{"entities", {{{"id", entity}, {"label", entity}}}},
              {"attributes", {{{"id", "attr"}, {"label", label}, {"fine_label", tag}, {"entity", entity}}}}};
}

json one_rel(const std::string& s, const std::string& o, const std::string& label, const std::string& tag) {
  return json{{"entities", {{{"id", s}, {"label", s}}, {{"id", o}, {"label", o}}}},
              {"relations",
               {{{"id", "rel"}, {"label", label}, {"fine_label", tag}, {"subject", s}, {"object", o}}}}};
}

}  // namespace

TEST_SUITE("qg_pipeline") {
  TEST_CASE("parse_elements normalizes and checks references") {
    const auto set = qg::parse_elements(
        json::parse(R"({"entities":[{"id":"Space Station","label":"space station"}],
                        "attributes":[{"id":"silver","label":"silver","fine_label":"colour","entity":"space_station"}]})"),
        "prompt");
    REQUIRE(set.entities.size() == 1);
    CHECK(set.entities[0].id == "space_station");
    CHECK(set.attributes[0].fine_label == Category::Other);  // strict tag set; unknown -> other

    CHECK_THROWS_AS(qg::parse_elements(json::parse(R"({"entities":[]})"), "p"), SchemaError);
    CHECK_THROWS_AS(qg::parse_elements(json::parse(R"({"entities":[{"id":"a"},{"id":"A"}]})"), "p"), SchemaError);
    CHECK_THROWS_AS(
        qg::parse_elements(json::parse(R"({"entities":[{"id":"a"}],
            "attributes":[{"id":"x","label":"red","fine_label":"color","entity":"ghost"}]})"), "p"),
        SchemaError);
    CHECK_THROWS_AS(
        qg::parse_elements(json::parse(R"({"entities":[{"id":"a"}],
            "relations":[{"id":"r","label":"near","fine_label":"spatial","subject":"a","object":"a"}]})"), "p"),
        SchemaError);
    CHECK_THROWS_AS(qg::parse_elements(json::parse("[1,2]"), "p"), SchemaError);
  }

  TEST_CASE("build_graph mirrors the element set") {
    const auto c = fixtures::load_fixture("space_station_water");
    const auto g = qg::build_graph(c.elements);
    CHECK(g == c.graph);
    CHECK(graph::validate(g).ok);
    CHECK(g.nodes().size() == 7);
  }

  TEST_CASE("template phrasing") {
    CHECK(render_one(one_attr("cup", "glass", "material"), "attr") == "Is the cup made of glass?");
    CHECK(render_one(one_attr("hair", "brown", "color"), "attr") == "Is the hair brown?");
    CHECK(render_one(one_attr("cloud", "hand", "shape"), "attr") == "Is the cloud shaped like a hand?");
    CHECK(render_one(one_attr("owl", "three", "number"), "attr") == "Are there three owls in the video?");
    CHECK(render_one(one_attr("beach", "Van Gogh style", "other"), "attr") == "Is the video in the Van Gogh style?");
    CHECK(render_one(one_rel("penguin", "cactus", "stand on the left of", "spatial"), "rel") ==
          "Does the penguin stand on the left of the cactus?");
    CHECK(render_one(one_rel("player", "football", "passes", "action"), "rel") == "Does the player pass the football?");
    CHECK(render_one(one_rel("water", "cup", "pouring from", "action"), "rel") == "Is water pouring from the cup?");
    CHECK(render_one(json{{"entities", {{{"id", "owl"}, {"label", "owl"}}}}}, "owl") == "Is there an owl in the video?");
    CHECK(render_one(json{{"entities", {{{"id", "owls"}, {"label", "owls"}}}}}, "owls") ==
          "Are there owls in the video?");
  }

  TEST_CASE("every template question is a yes/no question") {
    for (const auto& name : fixtures::fixture_names()) {
      const auto c = fixtures::load_fixture(name);
      for (const auto& q : c.questions) CHECK(qg::is_yes_no_question(q.text));
    }
    CHECK_FALSE(qg::is_yes_no_question("What color is the cup?"));
    CHECK_FALSE(qg::is_yes_no_question("Is the cup red"));
  }

  TEST_CASE("fixtures render exactly their expected questions") {
    for (const auto& name : fixtures::fixture_names()) {
      const auto c = fixtures::load_fixture(name);
      const auto out = qg::render_questions(qg::traverse(c.graph), c.graph, c.prompt_id, qg::RenderMode::Template,
                                            nullptr, {});
      REQUIRE(out.questions.size() == c.questions.size());
      for (std::size_t i = 0; i < out.questions.size(); ++i) {
        CHECK(out.questions[i].question_id == c.questions[i].question_id);
        CHECK(out.questions[i].text == c.questions[i].text);
        CHECK(out.questions[i].category == c.questions[i].category);
        CHECK(out.questions[i].source_node_id == c.questions[i].source_node_id);
      }
    }
  }

  TEST_CASE("question ids") {
    CHECK(qg::question_id("p7", 1) == "p7_q01");
    CHECK(qg::question_id("p7", 12) == "p7_q12");
  }

  TEST_CASE("extract_elements repairs once, then gives up") {
    const auto c = fixtures::load_fixture("space_station_water");
    llm::ScriptedBackend good;
    good.add_rule({"extract:repair", {}, json{{"entities", {{{"id", "water"}}}}}.dump()});
    good.add_rule({"extract", {}, "Sure! Here you go: not json"});
    llm::RecordingBackend rec(good);
    const auto set = qg::extract_elements(c.prompt, rec, {});
    CHECK(set.entities.size() == 1);
    CHECK(testing::purposes(rec.requests()) == std::vector<std::string>{"extract", "extract:repair"});

    llm::ScriptedBackend bad;
    bad.add_rule({"extract", {}, "no json at all"});
    CHECK_THROWS_AS(qg::extract_elements(c.prompt, bad, {}), SchemaError);
    CHECK_THROWS_AS(qg::extract_elements("   ", bad, {}), ArgumentError);
  }

  TEST_CASE("generate runs extract, build, traverse, render") {
    const auto c = fixtures::load_fixture("space_station_water");
    auto backend = llm::ScriptedBackend::load(c.dir / "scripted_backend.json");
    llm::RecordingBackend rec(backend);
    const auto r = qg::generate(c.prompt_id, c.prompt, rec, {}, {});
    CHECK(r.graph == c.graph);
    REQUIRE(r.questions.size() == 7);
    CHECK(r.questions[4].text == "Is the cup made of glass?");
    CHECK(testing::purposes(rec.requests()) == std::vector<std::string>{"extract"});
  }

  TEST_CASE("agent builder and agent renderer") {
    const auto c = fixtures::load_fixture("space_station_water");
    auto backend = llm::ScriptedBackend::load(c.dir / "scripted_backend.json");
    llm::RecordingBackend rec(backend);
    qg::QgOptions opts;
    opts.agent_builder = true;
    opts.render = qg::RenderMode::Agent;
    const auto r = qg::generate(c.prompt_id, c.prompt, rec, {}, opts);
    CHECK(r.graph == c.graph);
    CHECK(r.questions.size() == 7);
    CHECK(r.warnings.empty());
    CHECK(testing::purposes(rec.requests()) == std::vector<std::string>{"extract", "build", "traverse"});
  }

  TEST_CASE("agent renderer falls back to templates for missed seeds") {
    const auto c = fixtures::load_fixture("space_station_water");
    llm::ScriptedBackend partial;
    partial.add_rule({"traverse", {}, R"([{"node_id":"water","question":"Does the video show water?"},
                                           {"node_id":"cup","question":"a cup"}])"});
    const auto out = qg::render_questions(qg::traverse(c.graph), c.graph, c.prompt_id, qg::RenderMode::Agent,
                                          &partial, {});
    REQUIRE(out.questions.size() == 7);
    CHECK(out.questions[0].text == "Does the video show water?");
    CHECK(out.questions[1].text == "Is there a cup in the video?");  // not a yes/no question -> template
    CHECK_FALSE(out.warnings.empty());
  }

  TEST_CASE("vanilla mode is a single call") {
    const auto c = fixtures::load_fixture("space_station_water");
    auto backend = llm::ScriptedBackend::load(c.dir / "scripted_backend.json");
    llm::RecordingBackend rec(backend);
    qg::QgOptions opts;
    opts.mode = qg::QgMode::Vanilla;
    const auto r = qg::generate(c.prompt_id, c.prompt, rec, {}, opts);
    CHECK(r.questions.size() == 3);
    CHECK(r.questions[0].question_id == "space_station_water_q01");
    CHECK(r.graph.empty());
    CHECK(testing::purposes(rec.requests()) == std::vector<std::string>{"vanilla_qg"});
  }

  TEST_CASE("question json round trip and mode parsing") {
    const auto q = testing::question("p_q01", "p", "Is there a cup in the video?");
    const auto back = qg::question_from_json(qg::to_json(q));
    CHECK(back.question_id == q.question_id);
    CHECK(back.text == q.text);
    CHECK(back.category == q.category);
    CHECK(qg::parse_qg_mode("vanilla") == qg::QgMode::Vanilla);
    CHECK(qg::parse_qg_mode("multi_agent") == qg::QgMode::MultiAgent);
    CHECK_THROWS_AS(qg::parse_qg_mode("other"), ArgumentError);
  }
}
