#include "etva/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "etva/errors.hpp"
#include "etva/text.hpp"

namespace etva::corpus {

std::vector<PromptRecord> ingest_lines(std::istream& in) {
  std::vector<PromptRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    PromptRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      r.prompt_id = j.at("prompt_id").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.source = j.value("source", std::string{});
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("malformed prompt record: ") + ex.what(), lineno);
    }
    if (text::trim(r.prompt_id).empty()) throw ParseError("empty prompt_id", lineno);
    if (text::trim(r.text).empty()) throw ParseError("empty prompt text for " + r.prompt_id, lineno);
    if (!seen.emplace(r.prompt_id, lineno).second)
      throw ParseError("duplicate prompt_id '" + r.prompt_id + "'", lineno);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PromptRecord> ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read prompt corpus " + path.string());
  return ingest_lines(in);
}

CorpusStats compute_stats(const std::vector<PromptRecord>& records) {
  CorpusStats s;
  s.total_prompts = records.size();
  for (const auto& r : records) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      s.question_counts[c] += r.question_counts[c];
      if (r.question_counts[c] > 0) s.prompt_counts[c] += 1;
    }
  }
  s.total_questions = std::accumulate(s.question_counts.begin(), s.question_counts.end(), std::uint64_t{0});
  return s;
}

CorpusStats classify(std::vector<PromptRecord>& records, const std::vector<QuestionLabel>& questions) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].categories.clear();
    records[i].question_ids.clear();
    records[i].question_counts.fill(0);
    index.emplace(records[i].prompt_id, i);
  }
  for (const auto& q : questions) {
    auto it = index.find(q.prompt_id);
    if (it == index.end())
      throw ArgumentError("question " + q.question_id + " names unknown prompt " + q.prompt_id);
    PromptRecord& r = records[it->second];
    r.question_ids.push_back(q.question_id);
    r.question_counts[index_of(q.category)] += 1;
    r.categories.insert(q.category);
  }
  for (const auto& r : records)
    if (r.question_ids.empty()) throw ArgumentError("prompt " + r.prompt_id + " has no questions");
  return compute_stats(records);
}

nlohmann::json to_json(const CorpusStats& stats) {
  nlohmann::json q = nlohmann::json::object(), p = nlohmann::json::object();
  for (Category c : kAllCategories) {
    q[std::string(to_string(c))] = stats.question_counts[index_of(c)];
    p[std::string(to_string(c))] = stats.prompt_counts[index_of(c)];
  }
  return {{"question_counts", q},
          {"prompt_counts", p},
          {"total_questions", stats.total_questions},
          {"total_prompts", stats.total_prompts}};
}

std::string to_csv(const CorpusStats& stats) {
  std::ostringstream os;
  os << "category,questions,prompts\n";
  for (Category c : kAllCategories)
    os << to_string(c) << ',' << stats.question_counts[index_of(c)] << ',' << stats.prompt_counts[index_of(c)]
       << '\n';
  os << "total," << stats.total_questions << ',' << stats.total_prompts << '\n';
  return os.str();
}

Distribution normalize(const CategoryCounts& counts) {
  Distribution d{};
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  if (total == 0.0) return d;
  for (std::size_t i = 0; i < kCategoryCount; ++i) d[i] = static_cast<double>(counts[i]) / total;
  return d;
}

double l1_distance(const Distribution& a, const Distribution& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kCategoryCount; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

namespace {

struct Candidate {
  double distance = std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();
};

struct Greedy {
  const std::vector<PromptRecord>& records;
  Distribution target{};
  std::vector<std::size_t> scan;  // seed-permuted record indices
  std::vector<char> taken;
  CategoryCounts current{};

  Greedy(const std::vector<PromptRecord>& recs, std::int64_t k, std::uint64_t seed) : records(recs) {
    if (k <= 0) throw ArgumentError("sample size must be positive");
    if (static_cast<std::uint64_t>(k) > recs.size())
      throw ArgumentError("sample size " + std::to_string(k) + " exceeds corpus size " +
                          std::to_string(recs.size()));
    CategoryCounts all{};
    for (const auto& r : recs) {
      const auto n = std::accumulate(r.question_counts.begin(), r.question_counts.end(), std::uint64_t{0});
      if (n == 0) throw ArgumentError("prompt " + r.prompt_id + " has no classified questions");
      for (std::size_t c = 0; c < kCategoryCount; ++c) all[c] += r.question_counts[c];
    }
    target = normalize(all);
    scan.resize(recs.size());
    std::iota(scan.begin(), scan.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(scan.begin(), scan.end(), rng);
    taken.assign(recs.size(), 0);
  }

  double distance_with(std::size_t i) const {
    CategoryCounts next = current;
    for (std::size_t c = 0; c < kCategoryCount; ++c) next[c] += records[i].question_counts[c];
    return l1_distance(normalize(next), target);
  }

  bool better(const Candidate& a, const Candidate& b) const {
    if (b.index == std::numeric_limits<std::size_t>::max()) return a.index != b.index;
    if (a.index == std::numeric_limits<std::size_t>::max()) return false;
    if (a.distance != b.distance) return a.distance < b.distance;
    return records[a.index].prompt_id < records[b.index].prompt_id;
  }

  void take(std::size_t i, SampleResult& out) {
    taken[i] = 1;
    for (std::size_t c = 0; c < kCategoryCount; ++c) current[c] += records[i].question_counts[c];
    out.prompt_ids.push_back(records[i].prompt_id);
  }

  SampleResult finish(SampleResult out) const {
    out.achieved_counts = current;
    out.achieved = normalize(current);
    out.target = target;
    out.l1 = l1_distance(out.achieved, target);
    return out;
  }
};

}  // namespace

SampleResult stratified_sample_serial(const std::vector<PromptRecord>& records, std::int64_t k, std::uint64_t seed) {
  Greedy g(records, k, seed);
  SampleResult out;
  for (std::int64_t step = 0; step < k; ++step) {
    Candidate best;
    for (std::size_t i : g.scan) {
      if (g.taken[i]) continue;
      Candidate c{g.distance_with(i), i};
      if (g.better(c, best)) best = c;
    }
    g.take(best.index, out);
  }
  return g.finish(std::move(out));
}

SampleResult stratified_sample(const std::vector<PromptRecord>& records, std::int64_t k, std::uint64_t seed) {
  Greedy g(records, k, seed);
  SampleResult out;
  const auto n = static_cast<std::ptrdiff_t>(g.scan.size());
  for (std::int64_t step = 0; step < k; ++step) {
    Candidate best;
#pragma omp parallel
    {
      Candidate local;
#pragma omp for schedule(static) nowait
      for (std::ptrdiff_t s = 0; s < n; ++s) {
        const std::size_t i = g.scan[s];
        if (g.taken[i]) continue;
        Candidate c{g.distance_with(i), i};
        if (g.better(c, local)) local = c;
      }
#pragma omp critical(etva_sample_argmin)
      if (g.better(local, best)) best = local;
    }
    g.take(best.index, out);
  }
  return g.finish(std::move(out));
}

nlohmann::json summary_json(const SampleResult& result) {
  nlohmann::json achieved = nlohmann::json::object(), target = nlohmann::json::object(),
                 counts = nlohmann::json::object();
  for (Category c : kAllCategories) {
    const std::string tag(to_string(c));
    achieved[tag] = result.achieved[index_of(c)];
    target[tag] = result.target[index_of(c)];
    counts[tag] = result.achieved_counts[index_of(c)];
  }
  return {{"k", result.prompt_ids.size()},
          {"l1_distance", result.l1},
          {"achieved_distribution", achieved},
          {"target_distribution", target},
          {"achieved_question_counts", counts}};
}

}  // namespace etva::corpus
