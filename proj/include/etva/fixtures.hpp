#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "etva/qg_pipeline.hpp"
#include "etva/scene_graph.hpp"
#include "etva/scoring.hpp"

namespace etva::fixtures {

/// Root of the committed fixture tree (configurable through ETVA_FIXTURE_DIR).
std::filesystem::path default_root();

/// One hand-built worked example; see fixtures/README.md for the file layout.
struct FixtureCase {
  std::string name;
  std::filesystem::path dir;
  std::string prompt_id;
  std::string prompt;
  qg::ElementSet elements;
  graph::SceneGraph graph;
  std::vector<std::string> traversal;
  std::vector<qg::AtomicQuestion> questions;     // expected graph-derived questions
  std::vector<qg::AtomicQuestion> supplemental;  // prompt-level extras scored with them
  scoring::Verdicts verdicts;                    // scripted QA outcome
  scoring::Fraction expected_score;

  /// questions followed by supplemental
  std::vector<qg::AtomicQuestion> scored_questions() const;
};

/// Loads `<root>/<name>/case.json` and checks it: the graph validates, the
/// elements build to exactly that graph, and the verdicts aggregate to the
/// expected score. NotFoundError for an unknown name, Error on a broken case.
FixtureCase load_fixture(const std::string& name, const std::filesystem::path& root = default_root());

std::vector<std::string> fixture_names(const std::filesystem::path& root = default_root());

}  // namespace etva::fixtures
