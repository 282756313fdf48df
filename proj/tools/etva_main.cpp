// etva - batch front end: qg, qa, score, correlate, bench {classify,sample}, report.
#include <CLI11.hpp>

#include <iostream>

#include "etva/commands.hpp"
#include "etva/errors.hpp"

namespace {

struct Globals {
  std::string config;
  std::string backend;
  std::string mode;
  int concurrency = 0;
  std::optional<std::uint64_t> seed;
};

// Config file first, then command-line overrides. `mode_key` says which
// enumeration --mode selects for the running command (qg_mode / qa_mode).
etva::RunConfig resolve(const Globals& g, const char* mode_key) {
  etva::RunConfig c = g.config.empty() ? etva::RunConfig{} : etva::load_config(g.config);
  nlohmann::json overrides = nlohmann::json::object();
  if (!g.backend.empty()) overrides["backend"] = g.backend;
  if (!g.mode.empty()) {
    if (!mode_key) throw etva::ArgumentError("--mode does not apply to this command");
    overrides[mode_key] = g.mode;
  }
  if (g.concurrency != 0) overrides["concurrency"] = g.concurrency;
  if (g.seed) overrides["seed"] = *g.seed;
  return etva::apply_config(overrides, c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"etva - fine-grained text-to-video alignment evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--backend", g.backend, "http | replay:<cassette> | record:<cassette> | scripted:<table>");
  app.add_option("--mode", g.mode, "qg: multi_agent|vanilla; qa: full|no_ka|no_vu|no_cr|ka_only|direct");
  app.add_option("--concurrency", g.concurrency, "worker cap")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "sampler seed");
  app.fallthrough();

  int code = etva::cli::kOk;
  auto run = [&](const char* mode_key, auto&& fn) {
    try {
      code = fn(resolve(g, mode_key));
    } catch (const etva::Error& ex) {
      std::cerr << "etva: " << ex.what() << "\n";
      code = etva::cli::kUsage;
    }
  };

  etva::cli::QgArgs qg;
  auto* qg_cmd = app.add_subcommand("qg", "generate atomic questions from prompts");
  qg_cmd->add_option("prompts", qg.prompts, "prompts JSONL")->required();
  qg_cmd->add_option("-o,--out", qg.out, "questions JSONL")->required();
  qg_cmd->add_option("--graphs", qg.graphs_dir, "directory for per-prompt graph files");
  qg_cmd->callback([&] { run("qg_mode", [&](const etva::RunConfig& c) { return etva::cli::cmd_qg(qg, c, std::cerr); }); });

  etva::cli::QaArgs qa;
  auto* qa_cmd = app.add_subcommand("qa", "answer questions against video frames");
  qa_cmd->add_option("questions", qa.questions, "questions JSONL")->required();
  qa_cmd->add_option("videos", qa.videos, "videos manifest JSONL")->required();
  qa_cmd->add_option("--prompts", qa.prompts, "prompts JSONL (needed by knowledge modes)");
  qa_cmd->add_option("-o,--out", qa.out, "transcripts JSONL")->required();
  qa_cmd->callback([&] { run("qa_mode", [&](const etva::RunConfig& c) { return etva::cli::cmd_qa(qa, c, std::cerr); }); });

  etva::cli::ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "aggregate transcripts into per-video reports and a leaderboard");
  score_cmd->add_option("transcripts", score.transcripts, "transcripts JSONL")->required();
  score_cmd->add_option("questions", score.questions, "questions JSONL")->required();
  score_cmd->add_option("-o,--out", score.out_dir, "output directory")->required();
  score_cmd->callback(
      [&] { run(nullptr, [&](const etva::RunConfig& c) { return etva::cli::cmd_score(score, c, std::cerr); }); });

  etva::cli::CorrelateArgs corr;
  auto* corr_cmd = app.add_subcommand("correlate", "rank-correlate engine scores with human ratings");
  corr_cmd->add_option("reports", corr.reports_dir, "reports directory")->required();
  corr_cmd->add_option("annotations", corr.annotations, "annotations JSONL")->required();
  corr_cmd->add_option("-o,--out", corr.out, "correlation JSON")->required();
  corr_cmd->callback(
      [&] { run(nullptr, [&](const etva::RunConfig& c) { return etva::cli::cmd_correlate(corr, c, std::cerr); }); });

  auto* bench_cmd = app.add_subcommand("bench", "prompt-corpus tools");
  bench_cmd->require_subcommand(1);
  etva::cli::ClassifyArgs classify;
  auto* classify_cmd = bench_cmd->add_subcommand("classify", "per-category prompt/question statistics");
  classify_cmd->add_option("prompts", classify.prompts, "prompts JSONL")->required();
  classify_cmd->add_option("questions", classify.questions, "questions JSONL")->required();
  classify_cmd->add_option("-o,--out", classify.out, "stats JSON")->required();
  classify_cmd->callback([&] {
    run(nullptr, [&](const etva::RunConfig&) { return etva::cli::cmd_bench_classify(classify, std::cerr); });
  });
  etva::cli::SampleArgs sample;
  auto* sample_cmd = bench_cmd->add_subcommand("sample", "distribution-preserving subset");
  sample_cmd->add_option("prompts", sample.prompts, "prompts JSONL")->required();
  sample_cmd->add_option("questions", sample.questions, "questions JSONL")->required();
  sample_cmd->add_option("-k", sample.k, "subset size")->required();
  sample_cmd->add_option("-o,--out", sample.out, "manifest JSONL")->required();
  sample_cmd->callback([&] {
    run(nullptr, [&](const etva::RunConfig& c) { return etva::cli::cmd_bench_sample(sample, c, std::cerr); });
  });

  etva::cli::ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "re-render the leaderboard from stored reports");
  report_cmd->add_option("reports", report.reports_dir, "reports directory")->required();
  report_cmd->add_option("-o,--out", report.out_dir, "output directory")->required();
  report_cmd->callback(
      [&] { run(nullptr, [&](const etva::RunConfig& c) { return etva::cli::cmd_report(report, c, std::cerr); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : etva::cli::kUsage;
  }
  return code;
}
