#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etva/category.hpp"
#include "etva/verdict.hpp"

namespace etva::stats {

/// A correlation that may be undefined (a constant input vector).
using Coefficient = std::optional<double>;

/// Tie-corrected Kendall tau-b in O(n log n) (Knight's merge-sort method).
/// Throws ArgumentError on length mismatch or n < 2; nullopt if either side is constant.
Coefficient kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average-tied ranks.
Coefficient spearman_rho(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the positions they span.
std::vector<double> average_ranks(std::span<const double> v);

enum class Vote { No, Yes, Unresolved };

/// Strict plurality of two values; an exact tie is Unresolved. Throws on empty input.
Vote majority_vote(std::span<const Verdict> answers);

struct AccuracyResult {
  double value = 0.0;
  std::size_t matched = 0;
  std::size_t compared = 0;
  std::size_t unresolved_excluded = 0;
};

/// Fraction of matching verdicts over question ids present in both maps,
/// after dropping Unresolved gold. Throws EmptyInputError on an empty overlap.
AccuracyResult accuracy(const std::map<std::string, Verdict>& engine,
                        const std::map<std::string, Vote>& gold);

enum class HumanAggregator { Mean, Median };
double aggregate_likert(std::span<const double> scores, HumanAggregator how);

struct Correlation {
  Coefficient kendall_tau;
  Coefficient spearman_rho;
  std::size_t n = 0;
};

struct CorrelationSummary {
  Correlation overall;
  std::map<Category, Correlation> per_category;
};

/// One video's engine-vs-human pair plus its per-category engine scores.
struct VideoPair {
  std::string video_id;
  double engine = 0.0;
  double human = 0.0;
  std::map<Category, double> engine_by_category;
};

/// Overall tau/rho over all pairs; each category over the videos that carry a
/// score for it (categories with < 2 videos are left out).
/// Throws EmptyInputError with fewer than 2 pairs.
CorrelationSummary correlate(std::span<const VideoPair> pairs);

}  // namespace etva::stats
