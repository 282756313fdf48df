#include "etva/qa_pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <numeric>

#include "etva/text.hpp"

namespace etva::qa {

std::string_view to_string(QaMode m) noexcept {
  switch (m) {
    case QaMode::Full: return "full";
    case QaMode::NoKa: return "no_ka";
    case QaMode::NoVu: return "no_vu";
    case QaMode::NoCr: return "no_cr";
    case QaMode::KaOnly: return "ka_only";
    case QaMode::Direct: return "direct";
  }
  return "full";
}

QaMode parse_qa_mode(std::string_view s) {
  static const std::map<std::string, QaMode, std::less<>> kModes = {
      {"full", QaMode::Full},         {"no_ka", QaMode::NoKa},        {"no_vu", QaMode::NoVu},
      {"no_cr", QaMode::NoCr},        {"ka_only", QaMode::KaOnly},    {"direct", QaMode::Direct},
      {"w/o. KA", QaMode::NoKa},      {"w/o. VU", QaMode::NoVu},      {"w/o. CR", QaMode::NoCr},
      {"w/Only KA", QaMode::KaOnly},  {"Direct answer", QaMode::Direct}};
  auto it = kModes.find(s);
  if (it == kModes.end())
    throw ArgumentError("unknown qa mode '" + std::string(s) + "' (full|no_ka|no_vu|no_cr|ka_only|direct)");
  return it->second;
}

bool uses_knowledge(QaMode m) noexcept {
  return m == QaMode::Full || m == QaMode::NoVu || m == QaMode::NoCr || m == QaMode::KaOnly;
}

// ---------------------------------------------------------------- knowledge

KnowledgeContext augment_knowledge(std::string_view prompt_id, std::string_view prompt, llm::Backend& backend,
                                   const QaSettings& settings) {
  if (text::trim(prompt).empty()) throw ArgumentError("prompt must be nonempty");
  llm::CompletionRequest req;
  req.model_name = settings.llm_model;
  req.max_tokens = settings.max_tokens;
  req.temperature = settings.temperature;
  req.purpose = "knowledge";
  req.messages.push_back(llm::ChatMessage::text(
      llm::Role::User, text::substitute(settings.templates.knowledge, {{"prompt", std::string(prompt)}})));
  std::string brief = text::trim(backend.complete(req));
  if (brief.empty()) throw SchemaError("empty knowledge brief", brief);
  return KnowledgeContext{std::string(prompt_id), std::move(brief)};
}

const KnowledgeCache::Entry& KnowledgeCache::get(const std::string& prompt_id, const std::string& prompt,
                                                 llm::Backend& backend, const QaSettings& settings) {
  std::promise<Entry> promise;
  std::shared_future<Entry> fut;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(prompt_id);
    if (it == entries_.end()) {
      fut = promise.get_future().share();
      entries_.emplace(prompt_id, fut);
      ++calls_;
      owner = true;
    } else {
      fut = it->second;
    }
  }
  if (owner) {
    Entry e;
    try {
      e.knowledge = augment_knowledge(prompt_id, prompt, backend, settings);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    promise.set_value(std::move(e));
  }
  return fut.get();
}

std::size_t KnowledgeCache::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------- verdicts

std::optional<Verdict> parse_verdict(std::string_view text) {
  const std::string lower = text::to_lower(text);
  auto first_token = [&](std::size_t from) -> std::optional<Verdict> {
    std::size_t i = from;
    while (i < lower.size()) {
      if (!std::isalpha(static_cast<unsigned char>(lower[i]))) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < lower.size() && std::isalpha(static_cast<unsigned char>(lower[j]))) ++j;
      const std::string_view word(lower.data() + i, j - i);
      if (word == "yes") return Verdict::Yes;
      if (word == "no") return Verdict::No;
      i = j;
    }
    return std::nullopt;
  };

  // "answer:" marker, allowing spaces before the colon
  std::size_t pos = 0;
  while ((pos = lower.find("answer", pos)) != std::string::npos) {
    std::size_t k = pos + 6;
    while (k < lower.size() && lower[k] == ' ') ++k;
    if (k < lower.size() && lower[k] == ':') {
      if (auto v = first_token(k + 1)) return v;
      break;
    }
    pos += 6;
  }
  return first_token(0);
}

// ---------------------------------------------------------------- transcripts

nlohmann::json to_json(const QaTranscript& t) {
  auto opt = [](const std::optional<std::string>& s) -> nlohmann::json {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
  };
  nlohmann::json j = {
      {"question_id", t.question_id},
      {"video_id", t.video_id},
      {"prompt_id", t.prompt_id},
      {"model", t.model},
      {"mode", to_string(t.mode)},
      {"verdict", t.verdict ? nlohmann::json(std::string(to_string(*t.verdict))) : nlohmann::json(nullptr)},
      {"knowledge", opt(t.knowledge)},
      {"stages",
       {{"understanding", opt(t.understanding)},
        {"reflection", opt(t.reflection)},
        {"conclusion", t.conclusion.empty() ? nlohmann::json(nullptr) : nlohmann::json(t.conclusion)}}},
      {"warnings", t.warnings}};
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

QaTranscript transcript_from_json(const nlohmann::json& doc) {
  auto opt = [](const nlohmann::json& v) -> std::optional<std::string> {
    if (v.is_null()) return std::nullopt;
    return v.get<std::string>();
  };
  try {
    QaTranscript t;
    t.question_id = doc.at("question_id").get<std::string>();
    t.video_id = doc.at("video_id").get<std::string>();
    t.prompt_id = doc.value("prompt_id", std::string{});
    t.model = doc.value("model", std::string{});
    t.mode = parse_qa_mode(doc.at("mode").get<std::string>());
    if (!doc.at("verdict").is_null()) {
      auto v = parse_verdict_tag(doc.at("verdict").get<std::string>());
      if (!v) throw SchemaError("verdict must be Yes, No or null", doc.dump());
      t.verdict = *v;
    }
    if (doc.contains("knowledge")) t.knowledge = opt(doc.at("knowledge"));
    const auto& stages = doc.at("stages");
    t.understanding = opt(stages.at("understanding"));
    t.reflection = opt(stages.at("reflection"));
    t.conclusion = opt(stages.at("conclusion")).value_or("");
    t.warnings = doc.value("warnings", std::vector<std::string>{});
    t.error = doc.value("error", std::string{});
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed transcript: ") + ex.what(), doc.dump());
  }
}

// ---------------------------------------------------------------- staged answering

namespace {

struct StageCaller {
  llm::Backend& backend;
  const QaSettings& settings;
  const frames::FrameSet& frames;

  llm::CompletionRequest request(std::string purpose, std::string body, bool with_frames) const {
    llm::CompletionRequest req;
    req.model_name = settings.video_model;
    req.max_tokens = settings.max_tokens;
    req.temperature = settings.temperature;
    req.purpose = std::move(purpose);
    llm::ChatMessage msg{llm::Role::User, {std::move(body)}};
    if (with_frames)
      for (const auto& f : frames.frames) msg.parts.emplace_back(llm::ImagePart{f.bytes, f.media_type});
    req.messages.push_back(std::move(msg));
    return req;
  }

  std::string call(std::string purpose, std::string body, bool with_frames) const {
    return text::trim(backend.complete(request(std::move(purpose), std::move(body), with_frames)));
  }
};

std::string section(std::string_view title, const std::optional<std::string>& body) {
  if (!body) return {};
  return std::string(title) + ":\n" + *body + "\n\n";
}

}  // namespace

QaTranscript answer(const qg::AtomicQuestion& question, const frames::FrameSet& frames,
                    const KnowledgeContext* knowledge, llm::Backend& backend, QaMode mode, const QaSettings& settings,
                    std::string_view video_id, std::string_view model) {
  if (frames.frames.empty()) throw ArgumentError("answer needs at least one frame");
  if (uses_knowledge(mode) && knowledge == nullptr)
    throw ArgumentError(std::string("mode ") + std::string(to_string(mode)) + " needs a knowledge context");

  QaTranscript t;
  t.question_id = question.question_id;
  t.prompt_id = question.prompt_id;
  t.video_id = std::string(video_id);
  t.model = std::string(model);
  t.mode = mode;
  if (uses_knowledge(mode)) t.knowledge = knowledge->text;

  const StageCaller stage{backend, settings, frames};
  const auto& tpl = settings.templates;
  llm::CompletionRequest final_request;

  if (mode == QaMode::Direct) {
    final_request = stage.request("direct", text::substitute(tpl.direct_answer, {{"question", question.text}}), true);
  } else {
    if (mode == QaMode::Full || mode == QaMode::NoKa || mode == QaMode::NoCr)
      t.understanding = stage.call("understanding", tpl.stage_understanding, true);

    const std::string knowledge_block = section("Common-sense knowledge", t.knowledge);
    const std::string description_block = section("Video description", t.understanding);
    if (mode == QaMode::Full || mode == QaMode::NoKa || mode == QaMode::NoVu) {
      t.reflection = stage.call("reflection",
                                text::substitute(tpl.stage_reflection, {{"question", question.text},
                                                                        {"description", description_block},
                                                                        {"knowledge", knowledge_block}}),
                                mode == QaMode::NoVu);
    }
    final_request = stage.request("conclusion",
                                  text::substitute(tpl.stage_conclusion, {{"question", question.text},
                                                                          {"description", description_block},
                                                                          {"knowledge", knowledge_block},
                                                                          {"reflection", section("Reflection", t.reflection)}}),
                                  mode == QaMode::KaOnly);
  }

  t.conclusion = text::trim(backend.complete(final_request));
  t.verdict = parse_verdict(t.conclusion);
  if (!t.verdict) {
    llm::CompletionRequest repair = final_request;
    repair.messages.push_back(llm::ChatMessage::text(llm::Role::Assistant, t.conclusion));
    repair.messages.push_back(llm::ChatMessage::text(
        llm::Role::User, "Your reply did not contain a clear verdict. Reply with exactly \"Answer: Yes\" or \"Answer: No\"."));
    repair.purpose = final_request.purpose + ":repair";
    const std::string second = text::trim(backend.complete(repair));
    t.verdict = parse_verdict(second);
    if (t.verdict) {
      t.conclusion = second;
      t.warnings.emplace_back("verdict recovered after a repair re-prompt");
    } else {
      t.error = "unparseable verdict after repair";
    }
  }
  return t;
}

std::vector<QaTranscript> run_batch(const std::vector<QaItem>& items, llm::Backend& backend, QaMode mode,
                                    const QaSettings& settings, int concurrency, KnowledgeCache& cache) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = items[a];
    const auto& y = items[b];
    if (x.question.question_id != y.question.question_id) return x.question.question_id < y.question.question_id;
    return x.video_id < y.video_id;
  });

  std::vector<QaTranscript> out(items.size());
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, concurrency))
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const QaItem& item = items[order[k]];
    QaTranscript& t = out[k];
    QaMode effective = mode;
    std::vector<std::string> warnings;
    auto fail = [&](std::string why) {
      t.question_id = item.question.question_id;
      t.prompt_id = item.question.prompt_id;
      t.video_id = item.video_id;
      t.model = item.model;
      t.mode = effective;
      t.error = std::move(why);
    };
    try {
      if (item.frames == nullptr) {
        fail("frames unavailable: " + item.frames_error);
        continue;
      }
      const KnowledgeContext* knowledge = nullptr;
      if (uses_knowledge(mode)) {
        const auto& entry = cache.get(item.question.prompt_id, item.prompt_text, backend, settings);
        if (entry.knowledge) {
          knowledge = &*entry.knowledge;
        } else if (mode == QaMode::Full) {
          effective = QaMode::NoKa;
          warnings.push_back("knowledge augmentation failed, answered as no_ka: " + entry.error);
          spdlog::warn("{} / {}: knowledge augmentation failed, downgraded to no_ka", item.question.question_id,
                       item.video_id);
        } else {
          fail("knowledge augmentation failed: " + entry.error);
          continue;
        }
      }
      t = answer(item.question, *item.frames, knowledge, backend, effective, settings, item.video_id, item.model);
      t.warnings.insert(t.warnings.begin(), warnings.begin(), warnings.end());
    } catch (const std::exception& ex) {
      fail(ex.what());
      t.warnings = warnings;
    }
  }
  return out;
}

}  // namespace etva::qa
