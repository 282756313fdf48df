#include "etva/fixtures.hpp"

#include <algorithm>
#include <fstream>

#include "etva/errors.hpp"

namespace etva::fixtures {

namespace fs = std::filesystem;

fs::path default_root() {
  if (const char* env = std::getenv("ETVA_FIXTURE_DIR"); env && *env) return env;
  return ETVA_FIXTURE_DIR;
}

std::vector<qg::AtomicQuestion> FixtureCase::scored_questions() const {
  auto all = questions;
  all.insert(all.end(), supplemental.begin(), supplemental.end());
  return all;
}

namespace {

std::vector<qg::AtomicQuestion> read_questions(const nlohmann::json& list, const std::string& prompt_id,
                                               const std::string& prompt) {
  std::vector<qg::AtomicQuestion> out;
  for (auto q : list) {
    q["prompt_id"] = prompt_id;
    auto parsed = qg::question_from_json(q);
    parsed.source_prompt = prompt;
    out.push_back(std::move(parsed));
  }
  return out;
}

}  // namespace

FixtureCase load_fixture(const std::string& name, const fs::path& root) {
  const fs::path dir = root / name;
  const fs::path file = dir / "case.json";
  std::ifstream in(file);
  if (!in) throw NotFoundError("no fixture named '" + name + "' under " + root.string());

  FixtureCase c;
  c.name = name;
  c.dir = dir;
  try {
    const auto doc = nlohmann::json::parse(in);
    c.prompt_id = doc.at("prompt_id").get<std::string>();
    c.prompt = doc.at("prompt").get<std::string>();
    c.elements = qg::parse_elements(doc.at("elements"), c.prompt);
    c.graph = graph::graph_from_json(doc.at("graph"));
    c.traversal = doc.at("traversal").get<std::vector<std::string>>();
    c.questions = read_questions(doc.at("questions"), c.prompt_id, c.prompt);
    c.supplemental = read_questions(doc.value("supplemental_questions", nlohmann::json::array()), c.prompt_id, c.prompt);
    for (const auto& [qid, v] : doc.at("verdicts").items()) {
      auto verdict = parse_verdict_tag(v.get<std::string>());
      if (!verdict) throw Error("fixture " + name + ": bad verdict for " + qid);
      c.verdicts.emplace(qid, *verdict);
    }
    c.expected_score = scoring::Fraction{doc.at("expected_score").at("num").get<std::uint64_t>(),
                                         doc.at("expected_score").at("den").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& ex) {
    throw Error("fixture " + name + " is malformed: " + ex.what());
  }

  const auto report = graph::validate(c.graph);
  if (!report.ok) throw Error("fixture " + name + ": graph invalid: " + report.violations.front().description);
  if (!(qg::build_graph(c.elements) == c.graph))
    throw Error("fixture " + name + ": elements do not build to the stored graph");
  if (!(scoring::aggregate(c.verdicts) == c.expected_score))
    throw Error("fixture " + name + ": verdicts do not aggregate to expected_score");
  return c;
}

std::vector<std::string> fixture_names(const fs::path& root) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root, ec))
    if (entry.is_directory() && fs::exists(entry.path() / "case.json")) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace etva::fixtures
