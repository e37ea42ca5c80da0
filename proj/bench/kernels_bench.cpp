// Serial reference vs OpenMP for each batch kernel. The second argument
// selects the path: 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <cmath>

#include "notai/kernels.hpp"
#include "support.hpp"

using namespace notai;
using namespace notai::kernels;
using namespace notai::testing;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::Parallel : Exec::Serial; }

void set_label(benchmark::State& state) { state.SetLabel(state.range(1) ? "parallel" : "serial"); }

void BM_Stylometrics(benchmark::State& state) {
  const auto corpus = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 1);
  std::vector<std::string> texts;
  for (const auto& r : corpus.dataset.records) texts.push_back(r.text);
  const auto lex = Lexicons::load_default();
  for (auto _ : state) benchmark::DoNotOptimize(batch_stylometrics(texts, lex, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  set_label(state);
}

void BM_TreeShap(benchmark::State& state) {
  SplitMix64 rng(2);
  const auto model = random_ensemble(rng, 12, 5, 100);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < state.range(0); ++i) rows.push_back(random_input(rng));
  for (auto _ : state) benchmark::DoNotOptimize(batch_tree_shap(model, rows, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  set_label(state);
}

void BM_SampleLogliks(benchmark::State& state) {
  SplitMix64 rng(3);
  const auto seq = random_sequence(rng, 200, 500);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_logliks(seq, n, 4, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  set_label(state);
}

void BM_FindBestSplits(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = noisy_separable(n, 0.1, 5);
  std::vector<double> grad(n), hess(n, 0.25);
  std::vector<int> slot(n);
  std::vector<NodeStats> nodes(8);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = 0.5 - d.labels[i];
    slot[i] = static_cast<int>(i % nodes.size());
    auto& s = nodes[i % nodes.size()];
    s.node = slot[i];
    s.grad += grad[i];
    s.hess += hess[i];
    ++s.count;
  }
  std::vector<std::vector<std::uint32_t>> sorted, missing;
  presort(d.rows, sorted, missing);
  SplitProblem p;
  p.rows = d.rows;
  p.grad = grad;
  p.hess = hess;
  p.row_slot = slot;
  p.sorted = &sorted;
  p.missing = &missing;
  p.allowed = FeatureSet::all();
  p.min_child_weight = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(find_best_splits(p, nodes, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  set_label(state);
}

}  // namespace

BENCHMARK(BM_Stylometrics)->ArgsProduct({{400}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TreeShap)->ArgsProduct({{2000}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SampleLogliks)->ArgsProduct({{20000}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FindBestSplits)->ArgsProduct({{20000}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
