#include "etva/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "etva/errors.hpp"

namespace etva::stats {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ArgumentError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw ArgumentError("need at least 2 observations");
}

std::int64_t tie_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts `v` by value and returns the number of inversions (strictly greater
// element before a smaller one).
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

Coefficient kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const auto total = static_cast<std::int64_t>(n * (n - 1) / 2);
  std::int64_t x_ties = 0, joint_ties = 0;
  std::int64_t x_run = 1, joint_run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t a = order[i - 1], b = order[i];
    if (x[a] == x[b]) {
      ++x_run;
      if (y[a] == y[b]) {
        ++joint_run;
      } else {
        joint_ties += tie_pairs(joint_run);
        joint_run = 1;
      }
    } else {
      x_ties += tie_pairs(x_run);
      joint_ties += tie_pairs(joint_run);
      x_run = joint_run = 1;
    }
  }
  x_ties += tie_pairs(x_run);
  joint_ties += tie_pairs(joint_run);

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t swaps = merge_count(ys, buf, 0, n);

  std::int64_t y_ties = 0, y_run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (ys[i] == ys[i - 1]) {
      ++y_run;
    } else {
      y_ties += tie_pairs(y_run);
      y_run = 1;
    }
  }
  y_ties += tie_pairs(y_run);

  const std::int64_t x_pairs = total - x_ties;
  const std::int64_t y_pairs = total - y_ties;
  if (x_pairs == 0 || y_pairs == 0) return std::nullopt;

  const std::int64_t concordant_minus_discordant = total - x_ties - y_ties + joint_ties - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(x_pairs) * static_cast<double>(y_pairs));
  return clamp_unit(static_cast<double>(concordant_minus_discordant) / denom);
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    // positions i..j-1 (0-based) -> ranks i+1..j, mean (i+1+j)/2
    const double r = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

Coefficient spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return clamp_unit(sxy / std::sqrt(sxx * syy));
}

Vote majority_vote(std::span<const Verdict> answers) {
  if (answers.empty()) throw ArgumentError("majority_vote needs at least one answer");
  const auto yes = std::count(answers.begin(), answers.end(), Verdict::Yes);
  const auto no = static_cast<std::ptrdiff_t>(answers.size()) - yes;
  if (yes > no) return Vote::Yes;
  if (no > yes) return Vote::No;
  return Vote::Unresolved;
}

AccuracyResult accuracy(const std::map<std::string, Verdict>& engine,
                        const std::map<std::string, Vote>& gold) {
  AccuracyResult r;
  for (const auto& [qid, vote] : gold) {
    auto it = engine.find(qid);
    if (it == engine.end()) continue;
    if (vote == Vote::Unresolved) {
      ++r.unresolved_excluded;
      continue;
    }
    ++r.compared;
    const Verdict want = vote == Vote::Yes ? Verdict::Yes : Verdict::No;
    if (it->second == want) ++r.matched;
  }
  if (r.compared == 0) throw EmptyInputError("no overlapping resolved questions");
  r.value = static_cast<double>(r.matched) / static_cast<double>(r.compared);
  return r;
}

double aggregate_likert(std::span<const double> scores, HumanAggregator how) {
  if (scores.empty()) throw EmptyInputError("no annotator scores");
  if (how == HumanAggregator::Mean)
    return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  const std::size_t m = s.size() / 2;
  return s.size() % 2 == 1 ? s[m] : (s[m - 1] + s[m]) / 2.0;
}

namespace {
Correlation correlation_of(const std::vector<double>& x, const std::vector<double>& y) {
  return Correlation{kendall_tau_b(x, y), spearman_rho(x, y), x.size()};
}
}  // namespace

CorrelationSummary correlate(std::span<const VideoPair> pairs) {
  if (pairs.size() < 2) throw EmptyInputError("need at least 2 videos with both scores");
  CorrelationSummary out;
  std::vector<double> engine, human;
  for (const auto& p : pairs) {
    engine.push_back(p.engine);
    human.push_back(p.human);
  }
  out.overall = correlation_of(engine, human);
  for (Category c : kAllCategories) {
    std::vector<double> e, h;
    for (const auto& p : pairs) {
      auto it = p.engine_by_category.find(c);
      if (it == p.engine_by_category.end()) continue;
      e.push_back(it->second);
      h.push_back(p.human);
    }
    if (e.size() >= 2) out.per_category.emplace(c, correlation_of(e, h));
  }
  return out;
}

}  // namespace etva::stats
