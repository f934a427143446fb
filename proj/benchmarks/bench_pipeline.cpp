#include <benchmark/benchmark.h>

#include "dmd/synth.hpp"

namespace {

using namespace dmd;

void BM_Synthesize(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(SynthesizeFingerprint(seed++, 256).minutiae.size());
}
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);

void BM_ExtractDescriptors(benchmark::State& state) {
  const SynthFingerprint fp = SynthesizeFingerprint(9, 256);
  const GroundTruth gt = GroundTruthOf(fp);
  for (auto _ : state) benchmark::DoNotOptimize(ExtractDescriptors(fp.image, gt).size());
  state.counters["minutiae"] = static_cast<double>(fp.minutiae.size());
}
BENCHMARK(BM_ExtractDescriptors)->Unit(benchmark::kMillisecond);

}  // namespace
