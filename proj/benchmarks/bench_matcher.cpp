#include <benchmark/benchmark.h>

#include <random>

#include "dmd/matcher.hpp"

namespace {

using namespace dmd;

DenseDescriptor RandomDescriptor(std::mt19937_64& rng, double x, double y) {
  std::normal_distribution<float> feat(0.0f, 1.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::array<float, kGridCells> mask;
  for (float& m : mask) m = unit(rng) < 0.8f ? 1.0f : 0.0f;
  std::vector<float> f(12 * kGridCells);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = feat(rng) * mask[i % kGridCells];
  return DenseDescriptor(6, std::move(f), mask, Minutia(x, y, unit(rng) * 6.28));
}

Template RandomTemplate(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(0.0, 400.0);
  std::vector<DenseDescriptor> d;
  for (std::size_t i = 0; i < n; ++i) d.push_back(RandomDescriptor(rng, pos(rng), pos(rng)));
  return MakeFloatTemplate(std::move(d));
}

void BM_LocalSimilarity(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const DenseDescriptor a = RandomDescriptor(rng, 0, 0), b = RandomDescriptor(rng, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(LocalSimilarity(a, b));
}
BENCHMARK(BM_LocalSimilarity);

void BM_BinaryLocalSimilarity(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const BinaryDescriptor a = Binarize(RandomDescriptor(rng, 0, 0)), b = Binarize(RandomDescriptor(rng, 0, 0));
  for (auto _ : state) benchmark::DoNotOptimize(BinaryLocalSimilarity(a, b));
}
BENCHMARK(BM_BinaryLocalSimilarity);

void BM_Relax(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Template a = RandomTemplate(rng, n), b = RandomTemplate(rng, n);
  const SimilarityMatrix s = ComputeSimilarityMatrix(a, b);
  const MinutiaSet ma = a.Minutiae(), mb = b.Minutiae();
  for (auto _ : state) benchmark::DoNotOptimize(Relax(s, ma, mb));
}
BENCHMARK(BM_Relax)->Arg(20)->Arg(40)->Arg(80);

void BM_Hungarian(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  SimilarityMatrix s(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) s(r, c) = unit(rng);
  for (auto _ : state) benchmark::DoNotOptimize(LsaHungarian(s));
}
BENCHMARK(BM_Hungarian)->Arg(12)->Arg(40)->Arg(100);

void BM_MatchScore(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Template a = RandomTemplate(rng, n), b = RandomTemplate(rng, n);
  const bool binary = state.range(1) != 0;
  const Template ta = binary ? MakeBinaryTemplate(a) : a, tb = binary ? MakeBinaryTemplate(b) : b;
  for (auto _ : state) benchmark::DoNotOptimize(MatchScore(ta, tb).score);
}
BENCHMARK(BM_MatchScore)->Args({40, 0})->Args({40, 1});

}  // namespace
