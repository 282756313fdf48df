#pragma once

#include <nlohmann/json.hpp>

#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etva/llm_backend.hpp"
#include "etva/qg_pipeline.hpp"
#include "etva/templates.hpp"
#include "etva/verdict.hpp"
#include "etva/video_frames.hpp"

namespace etva::qa {

/// Answering configurations: the full pipeline and its ablations.
///   no_ka   - stages 1-3 without knowledge
///   no_vu   - reflection sees the frames directly, no description stage
///   no_cr   - description then conclusion, no reflection stage
///   ka_only - knowledge + question straight to a conclusion over the frames
///   direct  - one call with frames + question
enum class QaMode { Full, NoKa, NoVu, NoCr, KaOnly, Direct };

std::string_view to_string(QaMode m) noexcept;
/// Accepts the snake names and the report labels ("w/o. KA", "w/o. VU",
/// "w/Only KA", "Direct answer"). ArgumentError otherwise.
QaMode parse_qa_mode(std::string_view s);
bool uses_knowledge(QaMode m) noexcept;

struct QaSettings {
  TemplateSet templates = TemplateSet::defaults();
  std::string llm_model = "qwen2.5-72b-instruct";
  std::string video_model = "qwen2-vl-72b-instruct";
  int max_tokens = 1024;
  double temperature = 0.0;
};

struct KnowledgeContext {
  std::string prompt_id;
  std::string text;
};

/// One auxiliary-model call producing the commonsense brief for a prompt.
KnowledgeContext augment_knowledge(std::string_view prompt_id, std::string_view prompt, llm::Backend& backend,
                                   const QaSettings& settings);

/// Per-prompt memo of augment_knowledge: one call per prompt_id no matter how
/// many questions or threads ask. Failures are memoized too.
class KnowledgeCache {
 public:
  struct Entry {
    std::optional<KnowledgeContext> knowledge;
    std::string error;
  };

  const Entry& get(const std::string& prompt_id, const std::string& prompt, llm::Backend& backend,
                   const QaSettings& settings);
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<Entry>> entries_;
  std::size_t calls_ = 0;
};

/// First standalone yes/no token, taken after an "answer:" marker when one
/// is present. Case-insensitive; nullopt when neither token occurs.
std::optional<Verdict> parse_verdict(std::string_view text);

struct QaTranscript {
  std::string question_id;
  std::string video_id;
  std::string prompt_id;
  std::string model;
  QaMode mode = QaMode::Full;
  std::optional<std::string> knowledge;
  std::optional<std::string> understanding;
  std::optional<std::string> reflection;
  std::string conclusion;
  std::optional<Verdict> verdict;
  std::vector<std::string> warnings;
  std::string error;

  bool answered() const noexcept { return verdict.has_value(); }
};

nlohmann::json to_json(const QaTranscript& t);
QaTranscript transcript_from_json(const nlohmann::json& doc);

/// Runs the staged protocol for one (question, video) pair. `knowledge` must
/// be set when the mode uses it. A verdict that stays unparseable after one
/// repair re-prompt leaves the transcript unanswered with `error` set.
QaTranscript answer(const qg::AtomicQuestion& question, const frames::FrameSet& frames,
                    const KnowledgeContext* knowledge, llm::Backend& backend, QaMode mode, const QaSettings& settings,
                    std::string_view video_id = {}, std::string_view model = {});

struct QaItem {
  qg::AtomicQuestion question;
  std::string prompt_text;
  std::string video_id;
  std::string model;
  const frames::FrameSet* frames = nullptr;  // null -> `frames_error` explains why
  std::string frames_error;
};

/// Answers every item with up to `concurrency` OpenMP workers. Knowledge
/// failures downgrade full mode to no_ka (with a warning). Per-item failures
/// become unanswered transcripts. Output is sorted by (question_id, video_id).
std::vector<QaTranscript> run_batch(const std::vector<QaItem>& items, llm::Backend& backend, QaMode mode,
                                    const QaSettings& settings, int concurrency, KnowledgeCache& cache);

}  // namespace etva::qa
