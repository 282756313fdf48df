#include "etva/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "etva/corpus.hpp"
#include "etva/errors.hpp"
#include "etva/stats.hpp"

namespace etva::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int outcome_code(std::size_t succeeded, std::size_t failed) {
  if (succeeded == 0) return kFailed;
  return failed == 0 ? kOk : kPartial;
}

namespace {

// --- file helpers -----------------------------------------------------------

template <class F>
void for_each_jsonl(const fs::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw ParseError(path.string() + ": " + ex.what(), n);
    }
    try {
      f(doc);
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ": " + ex.what(), n);
    } catch (const SchemaError& ex) {
      throw ParseError(path.string() + ": " + ex.what(), n);
    }
  }
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& body) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  std::string body;
  for (const auto& l : lines) body += l.dump() + "\n";
  write_text(path, body);
}

fs::path sibling(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

fs::path with_extension(fs::path path, const std::string& ext) { return path.replace_extension(ext); }

// Usage-class failures (bad inputs) exit 1, anything else 3.
template <class F>
int guarded(std::ostream& log, const char* command, F&& body) {
  try {
    return body();
  } catch (const ParseError& ex) {
    log << command << ": " << ex.what() << "\n";
    return kUsage;
  } catch (const ArgumentError& ex) {
    log << command << ": " << ex.what() << "\n";
    return kUsage;
  } catch (const NotFoundError& ex) {
    log << command << ": " << ex.what() << "\n";
    return kUsage;
  } catch (const IoError& ex) {
    log << command << ": " << ex.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    log << command << ": " << ex.what() << "\n";
    return kFailed;
  }
}

json coefficient(const stats::Coefficient& c) { return c ? json(*c) : json(nullptr); }

json correlation_json(const stats::Correlation& c) {
  return json{{"kendall_tau", coefficient(c.kendall_tau)}, {"spearman_rho", coefficient(c.spearman_rho)}, {"n", c.n}};
}

std::string coefficient_csv(const stats::Coefficient& c) {
  if (!c) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *c);
  return buf;
}

std::vector<scoring::AlignmentReport> read_reports(fs::path dir) {
  if (fs::is_directory(dir / "reports")) dir /= "reports";
  if (!fs::is_directory(dir)) throw NotFoundError("reports directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<scoring::AlignmentReport> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      out.push_back(scoring::report_from_json(json::parse(in)));
    } catch (const json::exception& ex) {
      throw ParseError(f.string() + ": " + ex.what(), 1);
    }
  }
  if (out.empty()) throw EmptyInputError("no reports in " + dir.string());
  return out;
}

void write_leaderboard(const std::vector<scoring::AlignmentReport>& reports, scoring::Slicing slicing,
                       const fs::path& out_dir, std::ostream& log) {
  const auto board = scoring::leaderboard(reports, slicing);
  write_text(out_dir / "leaderboard.csv", scoring::render_csv(board));
  const std::string md = scoring::render_markdown(board);
  write_text(out_dir / "leaderboard.md", md);
  log << md;
}

std::vector<corpus::QuestionLabel> question_labels(const fs::path& path) {
  std::vector<corpus::QuestionLabel> labels;
  for (const auto& q : read_questions(path)) labels.push_back({q.question_id, q.prompt_id, q.category});
  return labels;
}

}  // namespace

// --- readers ----------------------------------------------------------------

std::vector<PromptLine> read_prompts(const fs::path& path) {
  std::vector<PromptLine> out;
  std::set<std::string> seen;
  std::size_t n = 0;
  for_each_jsonl(path, [&](const json& doc) {
    ++n;
    PromptLine p{doc.at("prompt_id").get<std::string>(), doc.at("text").get<std::string>()};
    if (p.prompt_id.empty()) throw ParseError("empty prompt_id", n);
    if (!seen.insert(p.prompt_id).second) throw ParseError("duplicate prompt_id '" + p.prompt_id + "'", n);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<qg::AtomicQuestion> read_questions(const fs::path& path) {
  std::vector<qg::AtomicQuestion> out;
  for_each_jsonl(path, [&](const json& doc) { out.push_back(qg::question_from_json(doc)); });
  return out;
}

std::vector<qa::QaTranscript> read_transcripts(const fs::path& path) {
  std::vector<qa::QaTranscript> out;
  for_each_jsonl(path, [&](const json& doc) { out.push_back(qa::transcript_from_json(doc)); });
  return out;
}

std::vector<VideoEntry> read_manifest(const fs::path& path) {
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path r(p);
    return r.is_relative() ? base / r : r;
  };
  std::vector<VideoEntry> out;
  std::set<std::string> seen;
  std::size_t n = 0;
  for_each_jsonl(path, [&](const json& doc) {
    ++n;
    VideoEntry v;
    v.video_id = doc.at("video_id").get<std::string>();
    v.prompt_id = doc.at("prompt_id").get<std::string>();
    v.model = doc.value("model", std::string{});
    if (doc.contains("frames_dir")) v.frames_dir = resolve(doc["frames_dir"].get<std::string>());
    if (doc.contains("video")) v.video = resolve(doc["video"].get<std::string>());
    if (v.frames_dir.empty() == v.video.empty())
      throw ParseError("video '" + v.video_id + "' needs exactly one of frames_dir / video", n);
    if (!seen.insert(v.video_id).second) throw ParseError("duplicate video_id '" + v.video_id + "'", n);
    out.push_back(std::move(v));
  });
  return out;
}

// --- qg -----------------------------------------------------------------------

int cmd_qg(const QgArgs& args, const RunConfig& config, std::ostream& log) {
  return guarded(log, "qg", [&]() -> int {
    auto stack = make_backend(config);
    return cmd_qg(args, config, stack.get(), log);
  });
}

int cmd_qg(const QgArgs& args, const RunConfig& config, llm::Backend& backend, std::ostream& log) {
  return guarded(log, "qg", [&]() -> int {
    const auto prompts = read_prompts(args.prompts);
    if (prompts.empty()) {
      log << "qg: no prompts in " << args.prompts.string() << "\n";
      return kUsage;
    }
    const auto settings = config.agent_settings();
    const qg::QgOptions options{config.qg_mode, config.agent_builder, config.render};

    const auto n = static_cast<std::int64_t>(prompts.size());
    std::vector<std::optional<qg::QgResult>> results(prompts.size());
    std::vector<std::string> errors(prompts.size());
#pragma omp parallel for schedule(dynamic) num_threads(config.concurrency)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& p = prompts[static_cast<std::size_t>(i)];
      try {
        results[static_cast<std::size_t>(i)] = qg::generate(p.prompt_id, p.text, backend, settings, options);
      } catch (const std::exception& ex) {
        errors[static_cast<std::size_t>(i)] = ex.what();
      }
    }

    std::vector<json> questions, failures;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      const auto& pid = prompts[i].prompt_id;
      if (!results[i]) {
        log << "qg: " << pid << " failed: " << errors[i] << "\n";
        failures.push_back(json{{"prompt_id", pid}, {"error", errors[i]}});
        continue;
      }
      ++ok;
      const auto& r = *results[i];
      for (const auto& w : r.warnings) log << "qg: " << pid << ": " << w << "\n";
      for (const auto& q : r.questions) questions.push_back(qg::to_json(q));
      if (!args.graphs_dir.empty() && config.qg_mode == qg::QgMode::MultiAgent) {
        json order = json::array();
        for (const auto& q : r.questions) order.push_back(q.source_node_id);
        json doc{{"prompt_id", pid},
                 {"prompt", prompts[i].text},
                 {"elements", qg::to_json(r.elements)},
                 {"graph", graph::to_json(r.graph)},
                 {"traversal", order}};
        write_text(args.graphs_dir / (pid + ".json"), doc.dump(2) + "\n");
      }
    }
    write_jsonl(args.out, questions);
    write_jsonl(sibling(args.out, ".failures.jsonl"), failures);
    log << "qg: " << ok << " of " << prompts.size() << " prompts, " << questions.size() << " questions\n";
    return outcome_code(ok, prompts.size() - ok);
  });
}

// --- qa -----------------------------------------------------------------------

int cmd_qa(const QaArgs& args, const RunConfig& config, std::ostream& log) {
  return guarded(log, "qa", [&]() -> int {
    auto stack = make_backend(config);
    return cmd_qa(args, config, stack.get(), log);
  });
}

int cmd_qa(const QaArgs& args, const RunConfig& config, llm::Backend& backend, std::ostream& log) {
  return guarded(log, "qa", [&]() -> int {
    const auto questions = read_questions(args.questions);
    const auto videos = read_manifest(args.videos);
    if (questions.empty()) {
      log << "qa: no questions in " << args.questions.string() << "\n";
      return kUsage;
    }
    if (videos.empty()) {
      log << "qa: no videos in " << args.videos.string() << "\n";
      return kUsage;
    }
    std::map<std::string, std::string> prompt_text;
    if (!args.prompts.empty())
      for (auto& p : read_prompts(args.prompts)) prompt_text.emplace(p.prompt_id, std::move(p.text));
    if (qa::uses_knowledge(config.qa_mode) && prompt_text.empty())
      throw ArgumentError("mode " + std::string(qa::to_string(config.qa_mode)) + " needs --prompts");

    const auto settings = config.qa_settings();

    // Frames are sampled once per video; a failure only affects that video's items.
    std::vector<std::optional<frames::FrameSet>> framesets(videos.size());
    std::vector<std::string> frame_errors(videos.size());
    for (std::size_t i = 0; i < videos.size(); ++i) {
      const auto& v = videos[i];
      try {
        framesets[i] = v.frames_dir.empty()
                           ? frames::sample_video(v.video, config.frame_count, config.extractor_command, config.work_dir)
                           : frames::sample_directory(v.frames_dir, config.frame_count);
      } catch (const std::exception& ex) {
        frame_errors[i] = ex.what();
        log << "qa: " << v.video_id << ": frames unavailable: " << ex.what() << "\n";
      }
    }

    std::vector<qa::QaItem> items;
    for (std::size_t i = 0; i < videos.size(); ++i) {
      const auto& v = videos[i];
      std::size_t matched = 0;
      for (const auto& q : questions) {
        if (q.prompt_id != v.prompt_id) continue;
        ++matched;
        qa::QaItem item;
        item.question = q;
        if (auto it = prompt_text.find(q.prompt_id); it != prompt_text.end()) item.prompt_text = it->second;
        item.video_id = v.video_id;
        item.model = v.model;
        item.frames = framesets[i] ? &*framesets[i] : nullptr;
        item.frames_error = frame_errors[i];
        items.push_back(std::move(item));
      }
      if (matched == 0) log << "qa: " << v.video_id << ": no questions for prompt " << v.prompt_id << "\n";
    }
    if (items.empty()) {
      log << "qa: no (question, video) pairs share a prompt_id\n";
      return kFailed;
    }

    qa::KnowledgeCache cache;
    const auto transcripts = qa::run_batch(items, backend, config.qa_mode, settings, config.concurrency, cache);

    std::vector<json> lines;
    std::size_t answered = 0;
    for (const auto& t : transcripts) {
      lines.push_back(qa::to_json(t));
      if (t.answered()) ++answered;
    }
    write_jsonl(args.out, lines);
    log << "qa: answered " << answered << " of " << transcripts.size() << ", unanswered "
        << transcripts.size() - answered << "\n";
    return outcome_code(answered, transcripts.size() - answered);
  });
}

// --- score ----------------------------------------------------------------------

int cmd_score(const ScoreArgs& args, const RunConfig& config, std::ostream& log) {
  return guarded(log, "score", [&]() -> int {
    const auto transcripts = read_transcripts(args.transcripts);
    const auto questions = read_questions(args.questions);
    if (transcripts.empty()) {
      log << "score: no transcripts in " << args.transcripts.string() << "\n";
      return kUsage;
    }
    scoring::QuestionCategories categories;
    for (const auto& q : questions) categories.emplace(q.question_id, q.category);

    struct Group {
      std::string prompt_id, model;
      scoring::QuestionCategories categories;
      scoring::Verdicts verdicts;
      std::size_t unanswered = 0;
    };
    std::map<std::string, Group> groups;
    for (const auto& t : transcripts) {
      auto& g = groups[t.video_id];
      g.prompt_id = t.prompt_id;
      g.model = t.model;
      auto cat = categories.find(t.question_id);
      if (cat == categories.end()) {
        log << "score: " << t.video_id << ": transcript for unknown question " << t.question_id << " ignored\n";
        continue;
      }
      g.categories.insert(*cat);
      if (t.verdict)
        g.verdicts[t.question_id] = *t.verdict;
      else
        ++g.unanswered;
    }

    std::vector<scoring::AlignmentReport> reports;
    std::size_t omitted = 0;
    for (const auto& [video_id, g] : groups) {
      if (g.verdicts.empty()) {
        log << "score: " << video_id << ": no answered questions, omitted\n";
        ++omitted;
        continue;
      }
      auto r = scoring::make_report(video_id, g.prompt_id, g.model, g.categories, g.verdicts, g.unanswered);
      write_text(args.out_dir / "reports" / (video_id + ".json"), scoring::to_json(r).dump(2) + "\n");
      log << "score: " << video_id << " (" << r.model << ") " << scoring::format_percent(r.score.value()) << " ["
          << r.score.num << "/" << r.score.den << "]\n";
      reports.push_back(std::move(r));
    }
    if (reports.empty()) return kFailed;
    write_leaderboard(reports, config.slicing, args.out_dir, log);
    return outcome_code(reports.size(), omitted);
  });
}

// --- correlate -------------------------------------------------------------------

int cmd_correlate(const CorrelateArgs& args, const RunConfig& config, std::ostream& log) {
  return guarded(log, "correlate", [&]() -> int {
    const auto reports = read_reports(args.reports_dir);

    std::map<std::string, std::vector<double>> likert;
    std::map<std::string, std::map<std::string, std::vector<Verdict>>> answers;  // video -> qid -> votes
    for_each_jsonl(args.annotations, [&](const json& doc) {
      const auto video = doc.at("video_id").get<std::string>();
      likert[video].push_back(doc.at("likert").get<double>());
      if (doc.contains("answers"))
        for (const auto& [qid, v] : doc["answers"].items()) {
          auto verdict = parse_verdict_tag(v.get<std::string>());
          if (!verdict) throw SchemaError("answer for " + qid + " must be Yes or No", v.dump());
          answers[video][qid].push_back(*verdict);
        }
    });

    std::vector<stats::VideoPair> pairs;
    std::map<std::string, Verdict> engine_votes;
    std::map<std::string, stats::Vote> gold;
    std::set<std::string> reported;
    for (const auto& r : reports) {
      reported.insert(r.video_id);
      auto it = likert.find(r.video_id);
      if (it == likert.end()) {
        log << "correlate: " << r.video_id << ": no annotations, skipped\n";
        continue;
      }
      pairs.push_back(stats::VideoPair{r.video_id, r.score.value(),
                                       stats::aggregate_likert(it->second, config.human_aggregator),
                                       scoring::category_scores(r, config.slicing)});
      for (const auto& [qid, v] : r.verdicts) engine_votes[r.video_id + "/" + qid] = v;
      if (auto a = answers.find(r.video_id); a != answers.end())
        for (const auto& [qid, votes] : a->second) gold[r.video_id + "/" + qid] = stats::majority_vote(votes);
    }
    for (const auto& [video, _] : likert)
      if (!reported.count(video)) log << "correlate: " << video << ": annotated but no report\n";

    if (pairs.size() < 2) {
      log << "correlate: need at least 2 videos with both scores, have " << pairs.size() << "\n";
      return kFailed;
    }
    const auto summary = stats::correlate(pairs);

    json per_category = json::object();
    std::string csv = "scope,n,kendall_tau,spearman_rho\n";
    auto csv_row = [&](std::string_view scope, const stats::Correlation& c) {
      csv += std::string(scope) + "," + std::to_string(c.n) + "," + coefficient_csv(c.kendall_tau) + "," +
             coefficient_csv(c.spearman_rho) + "\n";
    };
    csv_row("overall", summary.overall);
    for (const auto& [cat, c] : summary.per_category) {
      per_category[std::string(to_string(cat))] = correlation_json(c);
      csv_row(to_string(cat), c);
    }
    json videos = json::array();
    for (const auto& p : pairs) videos.push_back(json{{"video_id", p.video_id}, {"engine", p.engine}, {"human", p.human}});

    json acc = nullptr;
    if (!gold.empty()) {
      try {
        const auto a = stats::accuracy(engine_votes, gold);
        acc = json{{"value", a.value},
                   {"matched", a.matched},
                   {"compared", a.compared},
                   {"unresolved_excluded", a.unresolved_excluded}};
      } catch (const EmptyInputError& ex) {
        log << "correlate: accuracy skipped: " << ex.what() << "\n";
      }
    }

    json doc{{"overall", correlation_json(summary.overall)},
             {"per_category", per_category},
             {"accuracy", acc},
             {"human_aggregator", config.human_aggregator == stats::HumanAggregator::Mean ? "mean" : "median"},
             {"slicing", config.slicing == scoring::Slicing::PerQuestion ? "per_question" : "per_prompt"},
             {"videos", videos}};
    write_text(args.out, doc.dump(2) + "\n");
    write_text(with_extension(args.out, ".csv"), csv);
    log << "correlate: n=" << summary.overall.n << " tau=" << coefficient_csv(summary.overall.kendall_tau)
        << " rho=" << coefficient_csv(summary.overall.spearman_rho) << "\n";
    return kOk;
  });
}

// --- bench -----------------------------------------------------------------------

int cmd_bench_classify(const ClassifyArgs& args, std::ostream& log) {
  return guarded(log, "bench classify", [&]() -> int {
    auto records = corpus::ingest(args.prompts);
    if (records.empty()) {
      log << "bench classify: no prompts\n";
      return kUsage;
    }
    const auto stats = corpus::classify(records, question_labels(args.questions));
    write_text(args.out, corpus::to_json(stats).dump(2) + "\n");
    write_text(with_extension(args.out, ".csv"), corpus::to_csv(stats));
    log << "bench classify: " << stats.total_prompts << " prompts, " << stats.total_questions << " questions\n";
    return kOk;
  });
}

int cmd_bench_sample(const SampleArgs& args, const RunConfig& config, std::ostream& log) {
  return guarded(log, "bench sample", [&]() -> int {
    auto records = corpus::ingest(args.prompts);
    corpus::classify(records, question_labels(args.questions));
    const auto result = corpus::stratified_sample(records, args.k, config.seed);

    std::map<std::string, const corpus::PromptRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.prompt_id, &r);
    std::vector<json> lines;
    for (const auto& pid : result.prompt_ids) {
      const auto& r = *by_id.at(pid);
      json cats = json::array();
      for (Category c : r.categories) cats.push_back(std::string(to_string(c)));
      lines.push_back(json{{"prompt_id", r.prompt_id}, {"text", r.text}, {"source", r.source}, {"categories", cats}});
    }
    write_jsonl(args.out, lines);
    auto summary = corpus::summary_json(result);
    summary["k"] = args.k;
    summary["seed"] = config.seed;
    summary["corpus_size"] = records.size();
    write_text(sibling(args.out, ".summary.json"), summary.dump(2) + "\n");
    char l1[32];
    std::snprintf(l1, sizeof l1, "%.6f", result.l1);
    log << "bench sample: " << result.prompt_ids.size() << " of " << records.size() << " prompts, L1 " << l1 << "\n";
    return kOk;
  });
}

// --- report ----------------------------------------------------------------------

int cmd_report(const ReportArgs& args, const RunConfig& config, std::ostream& log) {
  return guarded(log, "report", [&]() -> int {
    const auto reports = read_reports(args.reports_dir);
    write_leaderboard(reports, config.slicing, args.out_dir, log);
    return kOk;
  });
}

}  // namespace etva::cli
