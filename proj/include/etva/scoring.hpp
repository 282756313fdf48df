#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "etva/category.hpp"
#include "etva/verdict.hpp"

namespace etva::scoring {

/// Exact score numerator/denominator; persisted as-is so display rounding never leaks back.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

using Verdicts = std::map<std::string, Verdict>;           // question_id -> verdict
using QuestionCategories = std::map<std::string, Category>;  // question_id -> category

/// Mean of the binary verdicts. Throws EmptyInputError when nothing was answered.
Fraction aggregate(const Verdicts& verdicts);

/// Mean per category over answered questions; categories with none are absent.
/// Throws ArgumentError if a verdict's question has no category.
std::map<Category, Fraction> per_category(const QuestionCategories& questions, const Verdicts& verdicts);

struct AlignmentReport {
  std::string video_id;
  std::string prompt_id;
  std::string model;
  Verdicts verdicts;
  Fraction score;
  std::map<Category, Fraction> categories;
  std::size_t answered = 0;
  std::size_t unanswered = 0;
};

AlignmentReport make_report(std::string video_id, std::string prompt_id, std::string model,
                            const QuestionCategories& questions, const Verdicts& verdicts,
                            std::size_t unanswered);

nlohmann::json to_json(const AlignmentReport& r);
AlignmentReport report_from_json(const nlohmann::json& doc);

/// How a video contributes to category slices.
///   PerQuestion: the video's per-category score (default).
///   PerPrompt: the video's overall score, in every category its prompt carries.
enum class Slicing { PerQuestion, PerPrompt };
Slicing parse_slicing(std::string_view s);

std::map<Category, double> category_scores(const AlignmentReport& r, Slicing slicing);

struct LeaderboardRow {
  std::string model;
  double overall = 0.0;
  std::map<Category, double> categories;
  std::size_t videos = 0;
};

/// Rows ordered by overall mean descending, ties by model name.
struct Leaderboard {
  std::vector<LeaderboardRow> rows;
};

/// Unweighted means over each model's videos. Every model needs at least one report.
Leaderboard leaderboard(const std::vector<AlignmentReport>& reports, Slicing slicing = Slicing::PerQuestion);

/// value x100 with three significant digits: 0.375 -> "37.5", 1 -> "100".
std::string format_percent(double value);

std::string render_csv(const Leaderboard& board);
std::string render_markdown(const Leaderboard& board);

}  // namespace etva::scoring
