// Serial reference vs OpenMP kernel for the two batch hot spots.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "etva/commands.hpp"
#include "etva/corpus.hpp"
#include "etva/fixtures.hpp"
#include "etva/scene_graph.hpp"
#include "support/oracles.hpp"

using namespace etva;

namespace {

const std::vector<corpus::PromptRecord>& corpus_2k() {
  static const auto records = [] {
    const auto dir = fixtures::default_root() / "synthetic";
    auto r = corpus::ingest(dir / "prompts_2k.jsonl");
    std::vector<corpus::QuestionLabel> labels;
    for (const auto& q : cli::read_questions(dir / "questions_2k.jsonl"))
      labels.push_back({q.question_id, q.prompt_id, q.category});
    corpus::classify(r, labels);
    return r;
  }();
  return records;
}

const std::vector<graph::SceneGraph>& graphs(std::size_t n) {
  static std::map<std::size_t, std::vector<graph::SceneGraph>> cache;
  auto& v = cache[n];
  if (v.empty()) {
    std::mt19937_64 rng(42);
    for (std::size_t i = 0; i < n; ++i) v.push_back(oracle::random_graph(rng));
  }
  return v;
}

void BM_SampleSerial(benchmark::State& state) {
  const auto& records = corpus_2k();
  for (auto _ : state) benchmark::DoNotOptimize(corpus::stratified_sample_serial(records, state.range(0)));
}
void BM_SampleParallel(benchmark::State& state) {
  const auto& records = corpus_2k();
  for (auto _ : state) benchmark::DoNotOptimize(corpus::stratified_sample(records, state.range(0)));
}
void BM_ValidateSerial(benchmark::State& state) {
  const auto& g = graphs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(graph::validate_all_serial(g));
}
void BM_ValidateParallel(benchmark::State& state) {
  const auto& g = graphs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(graph::validate_all(g));
}

}  // namespace

BENCHMARK(BM_SampleSerial)->Arg(105)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleParallel)->Arg(105)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
