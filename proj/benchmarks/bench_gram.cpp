#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include <gram/linalg.hpp>
#include <gram/loss.hpp>
#include <gram/matching_head.hpp>
#include <gram/similarity.hpp>

namespace {

Eigen::MatrixXd unit_rows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m.rowwise().normalized();
}

gram::MultimodalBatch make_batch(Eigen::Index b, Eigen::Index k, Eigen::Index n) {
  std::mt19937_64 rng(42);
  std::vector<gram::ModalityBatch> datas;
  for (Eigen::Index m = 1; m < k; ++m) datas.emplace_back("m" + std::to_string(m), unit_rows(rng, b, n));
  return gram::MultimodalBatch(gram::ModalityBatch("anchor", unit_rows(rng, b, n)), std::move(datas));
}

void BM_GramianVolume(benchmark::State& state) {
  const auto k = state.range(0);
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd rows = unit_rows(rng, k, 64);
  std::vector<gram::Vector> vs;
  for (Eigen::Index i = 0; i < k; ++i) vs.push_back(rows.row(i).transpose());
  for (auto _ : state) benchmark::DoNotOptimize(gram::gramian_volume(vs).value);
}
BENCHMARK(BM_GramianVolume)->DenseRange(2, 5);

void BM_VolumeGradient(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd rows = unit_rows(rng, state.range(0), 64);
  std::vector<gram::Vector> vs;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) vs.push_back(rows.row(i).transpose());
  for (auto _ : state) benchmark::DoNotOptimize(gram::volume_gradient(vs).volume);
}
BENCHMARK(BM_VolumeGradient)->DenseRange(2, 5);

void BM_CrossVolumeMatrix(benchmark::State& state) {
  const auto batch = make_batch(state.range(0), state.range(1), 64);
  const auto threads = static_cast<std::size_t>(state.range(2));
  for (auto _ : state) benchmark::DoNotOptimize(gram::cross_volume_matrix(batch, threads).values.data());
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_CrossVolumeMatrix)
    ->ArgNames({"B", "k", "threads"})
    ->Args({64, 3, 1})
    ->Args({256, 3, 1})
    ->Args({256, 5, 1})
    ->Args({256, 3, 4})
    ->UseRealTime();

void BM_ContrastiveGrad(benchmark::State& state) {
  const auto batch = make_batch(state.range(0), 3, 64);
  for (auto _ : state) benchmark::DoNotOptimize(gram::contrastive_grad(batch, gram::Temperature()).l_tot);
}
BENCHMARK(BM_ContrastiveGrad)->Arg(64)->Arg(256);

void BM_GramObjective(benchmark::State& state) {
  const auto batch = make_batch(state.range(0), 3, 64);
  gram::MatchingHead head(3, 64, 7);
  for (auto _ : state) benchmark::DoNotOptimize(gram::gram_objective(batch, gram::Temperature(), head).l_tot);
}
BENCHMARK(BM_GramObjective)->Arg(64)->Arg(256);

}  // namespace

// The distro libbenchmark_main.a carries LTO bytecode from another compiler
// release, so the entry point lives here.
BENCHMARK_MAIN();
