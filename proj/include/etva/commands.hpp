#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "etva/config.hpp"

// Batch commands behind the `etva` CLI. Each returns a process exit code and
// writes human-facing messages to `log`; artifacts go to the given paths.
namespace etva::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kPartial = 2, kFailed = 3 };

/// Combines per-item outcome counts into an exit code.
int outcome_code(std::size_t succeeded, std::size_t failed);

struct PromptLine {
  std::string prompt_id;
  std::string text;
};
/// JSONL {prompt_id, text[, source]}; ParseError with line numbers.
std::vector<PromptLine> read_prompts(const std::filesystem::path& path);
std::vector<qg::AtomicQuestion> read_questions(const std::filesystem::path& path);
std::vector<qa::QaTranscript> read_transcripts(const std::filesystem::path& path);

struct VideoEntry {
  std::string video_id;
  std::string prompt_id;
  std::string model;
  std::filesystem::path frames_dir;  // exactly one of frames_dir / video is set
  std::filesystem::path video;
};
/// JSONL {video_id, prompt_id, model, frames_dir | video}; relative paths are
/// resolved against the manifest's directory.
std::vector<VideoEntry> read_manifest(const std::filesystem::path& path);

struct QgArgs {
  std::filesystem::path prompts;
  std::filesystem::path out;         // questions JSONL
  std::filesystem::path graphs_dir;  // one <prompt_id>.json per prompt
};
/// Failures land in `<out>.failures.jsonl`.
int cmd_qg(const QgArgs& args, const RunConfig& config, std::ostream& log);
/// Same, with a caller-supplied backend instead of `config.backend`.
int cmd_qg(const QgArgs& args, const RunConfig& config, llm::Backend& backend, std::ostream& log);

struct QaArgs {
  std::filesystem::path questions;
  std::filesystem::path prompts;  // optional; knowledge falls back to the questions' prompts otherwise
  std::filesystem::path videos;
  std::filesystem::path out;  // transcripts JSONL
};
int cmd_qa(const QaArgs& args, const RunConfig& config, std::ostream& log);
int cmd_qa(const QaArgs& args, const RunConfig& config, llm::Backend& backend, std::ostream& log);

struct ScoreArgs {
  std::filesystem::path transcripts;
  std::filesystem::path questions;
  std::filesystem::path out_dir;  // reports/<video_id>.json, leaderboard.{csv,md}
};
int cmd_score(const ScoreArgs& args, const RunConfig& config, std::ostream& log);

struct CorrelateArgs {
  std::filesystem::path reports_dir;
  std::filesystem::path annotations;  // JSONL {video_id, annotator_id, likert, answers?}
  std::filesystem::path out;          // correlation JSON; a sibling .csv is written too
};
int cmd_correlate(const CorrelateArgs& args, const RunConfig& config, std::ostream& log);

struct ClassifyArgs {
  std::filesystem::path prompts;
  std::filesystem::path questions;
  std::filesystem::path out;  // stats JSON; a sibling .csv is written too
};
int cmd_bench_classify(const ClassifyArgs& args, std::ostream& log);

struct SampleArgs {
  std::filesystem::path prompts;
  std::filesystem::path questions;
  std::int64_t k = 105;
  std::filesystem::path out;  // manifest JSONL; `<out>.summary.json` beside it
};
int cmd_bench_sample(const SampleArgs& args, const RunConfig& config, std::ostream& log);

struct ReportArgs {
  std::filesystem::path reports_dir;
  std::filesystem::path out_dir;
};
/// Re-renders the leaderboard from stored reports.
int cmd_report(const ReportArgs& args, const RunConfig& config, std::ostream& log);

}  // namespace etva::cli
