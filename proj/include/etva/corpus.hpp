#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "etva/category.hpp"

// Prompt-corpus ingestion, question-label classification and
// distribution-preserving subsetting.
namespace etva::corpus {

using CategoryCounts = std::array<std::uint64_t, kCategoryCount>;

struct PromptRecord {
  std::string prompt_id;
  std::string text;
  std::string source;
  std::set<Category> categories;
  std::vector<std::string> question_ids;
  CategoryCounts question_counts{};
};

/// Minimal view of a generated question needed for classification.
struct QuestionLabel {
  std::string question_id;
  std::string prompt_id;
  Category category = Category::Other;
};

struct CorpusStats {
  CategoryCounts question_counts{};
  CategoryCounts prompt_counts{};
  std::uint64_t total_questions = 0;
  std::uint64_t total_prompts = 0;
};

/// JSONL of {prompt_id, text, source}. Throws ParseError (with line number)
/// on malformed lines or duplicate ids, IoError if unreadable.
std::vector<PromptRecord> ingest(const std::filesystem::path& path);
std::vector<PromptRecord> ingest_lines(std::istream& in);

/// Assigns categories from question labels. Throws ArgumentError when a
/// record ends up with no questions or a question names an unknown prompt.
CorpusStats classify(std::vector<PromptRecord>& records, const std::vector<QuestionLabel>& questions);
CorpusStats compute_stats(const std::vector<PromptRecord>& records);

nlohmann::json to_json(const CorpusStats& stats);
std::string to_csv(const CorpusStats& stats);

using Distribution = std::array<double, kCategoryCount>;
Distribution normalize(const CategoryCounts& counts);
double l1_distance(const Distribution& a, const Distribution& b);

struct SampleResult {
  std::vector<std::string> prompt_ids;  // selection order
  CategoryCounts achieved_counts{};
  Distribution achieved{};
  Distribution target{};
  double l1 = 0.0;
};

/// Greedy selection of k prompts minimizing the L1 distance between the
/// subset's per-category question distribution and the corpus's. Ties go to
/// the smaller prompt_id, so the result does not depend on thread count or
/// on `seed` (which only permutes the scan order).
SampleResult stratified_sample(const std::vector<PromptRecord>& records, std::int64_t k, std::uint64_t seed = 0);
/// Single-threaded reference of the same greedy.
SampleResult stratified_sample_serial(const std::vector<PromptRecord>& records, std::int64_t k,
                                      std::uint64_t seed = 0);

nlohmann::json summary_json(const SampleResult& result);

}  // namespace etva::corpus
