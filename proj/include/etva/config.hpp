#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "etva/llm_backend.hpp"
#include "etva/qa_pipeline.hpp"
#include "etva/qg_pipeline.hpp"
#include "etva/scoring.hpp"
#include "etva/stats.hpp"

namespace etva {

/// Everything a run needs besides its input files. Loaded from a JSON object
/// whose keys mirror the field names; unknown keys are rejected.
struct RunConfig {
  /// http | replay:<cassette> | record:<cassette> | scripted:<table.json>
  std::string backend = "http";
  llm::HttpConfig http;

  std::string llm_model = "qwen2.5-72b-instruct";
  std::string video_model = "qwen2-vl-72b-instruct";
  int max_tokens = 1024;
  double temperature = 0.0;

  qg::QgMode qg_mode = qg::QgMode::MultiAgent;
  bool agent_builder = false;
  qg::RenderMode render = qg::RenderMode::Template;
  qa::QaMode qa_mode = qa::QaMode::Full;

  std::size_t frame_count = 8;
  std::string extractor_command = "ffmpeg -loglevel error -i {input} -vsync 0 {outdir}/%06d.png";
  std::filesystem::path work_dir = std::filesystem::temp_directory_path() / "etva-work";
  std::optional<std::filesystem::path> template_dir;

  int concurrency = 4;
  std::uint64_t seed = 0;
  scoring::Slicing slicing = scoring::Slicing::PerQuestion;
  stats::HumanAggregator human_aggregator = stats::HumanAggregator::Mean;

  TemplateSet templates() const;
  qg::AgentSettings agent_settings() const;
  qa::QaSettings qa_settings() const;
};

/// Applies the keys of `doc` on top of `base`. ArgumentError on unknown keys,
/// bad enum values or out-of-range numbers; NotFoundError for a missing
/// template_dir.
RunConfig apply_config(const nlohmann::json& doc, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Owns the backend chain selected by `RunConfig::backend`.
struct BackendStack {
  std::vector<std::unique_ptr<llm::Backend>> owned;
  llm::Backend* top = nullptr;

  llm::Backend& get() const { return *top; }
};

/// Builds the chain; paths in the backend spec must exist except for record:.
BackendStack make_backend(const RunConfig& config);

}  // namespace etva
