#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "facetset/clustering.hpp"
#include "facetset/corpus.hpp"
#include "facetset/fusion.hpp"

namespace {

using namespace facetset;

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = g(rng);
  return x;
}

void BM_AffinityPropagation(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto x = gaussian(50, n, 1);
  std::vector<std::vector<double>> vecs;
  for (Eigen::Index j = 0; j < n; ++j) vecs.emplace_back(x.col(j).data(), x.col(j).data() + x.rows());
  auto g = build_similarity(vecs, SimilarityMetric::neg_sq_euclidean, 0.0);
  g.preference = median_off_diagonal(g);
  g.s.diagonal().setConstant(g.preference);
  for (auto _ : state) benchmark::DoNotOptimize(affinity_propagation(g));
  state.SetComplexityN(n);
}
BENCHMARK(BM_AffinityPropagation)->RangeMultiplier(2)->Range(16, 512)->Complexity();

void BM_ClusterCorrelation(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  const auto x = gaussian(300, m, 2), y = gaussian(300, m, 3);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_correlation(x, y, 1e-3).raw);
}
BENCHMARK(BM_ClusterCorrelation)->RangeMultiplier(4)->Range(4, 256);

void BM_BuildIndex(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<std::string> vocab;
  for (int i = 0; i < 2000; ++i) vocab.push_back("w" + std::to_string(i));
  std::vector<std::string> lines;
  for (int d = 0; d < state.range(0); ++d) {
    std::string line;
    for (int k = 0; k < 20; ++k) line += (k ? " " : "") + vocab[rng() % vocab.size()];
    lines.push_back(std::move(line));
  }
  IndexConfig cfg;
  cfg.threads = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(build_index(lines, cfg).skipgram_count());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Args({5000, 1})->Args({5000, 4});

}  // namespace

BENCHMARK_MAIN();
