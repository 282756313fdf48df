#include "etva/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "etva/errors.hpp"

namespace etva::scoring {

Fraction aggregate(const Verdicts& verdicts) {
  if (verdicts.empty()) throw EmptyInputError("no answered questions to aggregate");
  Fraction f{0, verdicts.size()};
  for (const auto& [_, v] : verdicts)
    if (v == Verdict::Yes) ++f.num;
  return f;
}

std::map<Category, Fraction> per_category(const QuestionCategories& questions, const Verdicts& verdicts) {
  std::map<Category, Fraction> out;
  for (const auto& [qid, v] : verdicts) {
    auto it = questions.find(qid);
    if (it == questions.end()) throw ArgumentError("question " + qid + " has no category");
    auto [slot, fresh] = out.try_emplace(it->second, Fraction{0, 0});
    slot->second.den += 1;
    if (v == Verdict::Yes) slot->second.num += 1;
  }
  return out;
}

AlignmentReport make_report(std::string video_id, std::string prompt_id, std::string model,
                            const QuestionCategories& questions, const Verdicts& verdicts,
                            std::size_t unanswered) {
  AlignmentReport r;
  r.video_id = std::move(video_id);
  r.prompt_id = std::move(prompt_id);
  r.model = std::move(model);
  r.verdicts = verdicts;
  r.score = aggregate(verdicts);
  r.categories = per_category(questions, verdicts);
  r.answered = verdicts.size();
  r.unanswered = unanswered;
  return r;
}

namespace {
nlohmann::json fraction_json(const Fraction& f) { return {{"num", f.num}, {"den", f.den}}; }
Fraction fraction_from(const nlohmann::json& j) {
  return Fraction{j.at("num").get<std::uint64_t>(), j.at("den").get<std::uint64_t>()};
}
}  // namespace

nlohmann::json to_json(const AlignmentReport& r) {
  nlohmann::json verdicts = nlohmann::json::object();
  for (const auto& [qid, v] : r.verdicts) verdicts[qid] = v == Verdict::Yes ? 1 : 0;
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [c, f] : r.categories) cats[std::string(to_string(c))] = fraction_json(f);
  return {{"video_id", r.video_id},     {"prompt_id", r.prompt_id},
          {"model", r.model},           {"score", fraction_json(r.score)},
          {"display", format_percent(r.score.value())},
          {"verdicts", verdicts},       {"categories", cats},
          {"answered", r.answered},     {"unanswered", r.unanswered}};
}

AlignmentReport report_from_json(const nlohmann::json& doc) {
  try {
    AlignmentReport r;
    r.video_id = doc.at("video_id").get<std::string>();
    r.prompt_id = doc.at("prompt_id").get<std::string>();
    r.model = doc.at("model").get<std::string>();
    r.score = fraction_from(doc.at("score"));
    for (const auto& [qid, v] : doc.at("verdicts").items())
      r.verdicts.emplace(qid, v.get<int>() != 0 ? Verdict::Yes : Verdict::No);
    for (const auto& [tag, f] : doc.at("categories").items()) {
      auto c = parse_category(tag);
      if (!c) throw SchemaError("unknown category '" + tag + "' in report", doc.dump());
      r.categories.emplace(*c, fraction_from(f));
    }
    r.answered = doc.at("answered").get<std::size_t>();
    r.unanswered = doc.at("unanswered").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed report: ") + ex.what(), doc.dump());
  }
}

Slicing parse_slicing(std::string_view s) {
  if (s == "per_question") return Slicing::PerQuestion;
  if (s == "per_prompt") return Slicing::PerPrompt;
  throw ArgumentError("unknown slicing '" + std::string(s) + "' (per_question|per_prompt)");
}

std::map<Category, double> category_scores(const AlignmentReport& r, Slicing slicing) {
  std::map<Category, double> out;
  for (const auto& [c, f] : r.categories)
    out.emplace(c, slicing == Slicing::PerQuestion ? f.value() : r.score.value());
  return out;
}

Leaderboard leaderboard(const std::vector<AlignmentReport>& reports, Slicing slicing) {
  struct Acc {
    double sum = 0.0;
    std::size_t videos = 0;
    std::map<Category, std::pair<double, std::size_t>> cats;
  };
  std::map<std::string, Acc> by_model;
  for (const auto& r : reports) {
    Acc& a = by_model[r.model];
    a.sum += r.score.value();
    a.videos += 1;
    for (const auto& [c, v] : category_scores(r, slicing)) {
      auto& slot = a.cats[c];
      slot.first += v;
      slot.second += 1;
    }
  }
  Leaderboard board;
  for (const auto& [model, a] : by_model) {
    LeaderboardRow row{model, a.sum / static_cast<double>(a.videos), {}, a.videos};
    for (const auto& [c, s] : a.cats) row.categories.emplace(c, s.first / static_cast<double>(s.second));
    board.rows.push_back(std::move(row));
  }
  std::stable_sort(board.rows.begin(), board.rows.end(), [](const auto& a, const auto& b) {
    if (a.overall != b.overall) return a.overall > b.overall;
    return a.model < b.model;
  });
  return board;
}

std::string format_percent(double value) {
  const double pct = value * 100.0;
  const double mag = std::fabs(pct);
  int decimals = 0;
  if (mag < 10.0) {
    decimals = 2;
  } else if (mag < 100.0) {
    decimals = 1;
  }
  // rounding can carry into the next magnitude (99.96 -> 100.0)
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, pct);
  if (decimals > 0) {
    const double rounded = std::strtod(buf, nullptr);
    if (std::fabs(rounded) >= (decimals == 2 ? 10.0 : 100.0))
      std::snprintf(buf, sizeof buf, "%.*f", decimals - 1, pct);
  }
  return buf;
}

std::string render_csv(const Leaderboard& board) {
  std::ostringstream os;
  os << "model";
  for (Category c : kAllCategories) os << ',' << to_string(c);
  os << ",overall,videos\n";
  char buf[32];
  for (const auto& row : board.rows) {
    os << row.model;
    for (Category c : kAllCategories) {
      os << ',';
      if (auto it = row.categories.find(c); it != row.categories.end()) {
        std::snprintf(buf, sizeof buf, "%.6f", it->second);
        os << buf;
      }
    }
    std::snprintf(buf, sizeof buf, "%.6f", row.overall);
    os << ',' << buf << ',' << row.videos << '\n';
  }
  return os.str();
}

std::string render_markdown(const Leaderboard& board) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Model"};
  for (Category c : kAllCategories) {
    std::string name(to_string(c));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    header.push_back(name);
  }
  header.push_back("Avg");
  cells.push_back(header);
  char buf[32];
  for (const auto& row : board.rows) {
    std::vector<std::string> line{row.model};
    for (Category c : kAllCategories) {
      if (auto it = row.categories.find(c); it != row.categories.end()) {
        std::snprintf(buf, sizeof buf, "%.3f", it->second);
        line.emplace_back(buf);
      } else {
        line.emplace_back("-");
      }
    }
    std::snprintf(buf, sizeof buf, "%.3f", row.overall);
    line.emplace_back(buf);
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());

  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& line) {
    os << '|';
    for (std::size_t i = 0; i < line.size(); ++i)
      os << ' ' << line[i] << std::string(width[i] - line[i].size(), ' ') << " |";
    os << '\n';
  };
  emit(cells[0]);
  os << '|';
  for (std::size_t w : width) os << std::string(w + 2, '-') << '|';
  os << '\n';
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return os.str();
}

}  // namespace etva::scoring
