// etva-record-cassette - rebuilds a replay cassette by running qg and qa over
// a fixture with its scripted table standing in for the live endpoint.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "etva/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"record a replay cassette from a scripted backend table"};
  std::string table, cassette, prompts, videos, questions, mode = "full";
  app.add_option("table", table, "scripted backend JSON")->required()->check(CLI::ExistingFile);
  app.add_option("cassette", cassette, "cassette JSONL to (re)write")->required();
  app.add_option("--prompts", prompts, "prompts JSONL")->required()->check(CLI::ExistingFile);
  app.add_option("--videos", videos, "videos manifest JSONL")->required()->check(CLI::ExistingFile);
  app.add_option("--questions", questions, "questions to answer (default: the generated ones)");
  app.add_option("--mode", mode, "qa mode");
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::remove(cassette, ec);
  const fs::path scratch = fs::temp_directory_path() / "etva-record";
  fs::create_directories(scratch);

  etva::RunConfig config;
  config.concurrency = 1;  // keeps the cassette's line order stable
  config.qa_mode = etva::qa::parse_qa_mode(mode);
  auto scripted = etva::llm::ScriptedBackend::load(table);
  etva::llm::ReplayBackend recorder(cassette, &scripted);

  etva::cli::QgArgs qg{prompts, scratch / "questions.jsonl", {}};
  int rc = etva::cli::cmd_qg(qg, config, recorder, std::cerr);
  if (rc != 0) return rc;
  etva::cli::QaArgs qa{questions.empty() ? qg.out : fs::path(questions), prompts, videos, scratch / "transcripts.jsonl"};
  rc = etva::cli::cmd_qa(qa, config, recorder, std::cerr);
  std::cerr << "cassette: " << recorder.size() << " exchanges in " << cassette << "\n";
  return rc;
}
