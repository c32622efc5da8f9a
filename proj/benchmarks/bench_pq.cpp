// Quantizer hot paths: vector quantization, table-based code distance and
// the Top-K candidate scan that dominates filter latency.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "capq/embedding.hpp"
#include "capq/pq.hpp"
#include "capq/rng.hpp"

using namespace capq;

namespace {

constexpr std::uint32_t kDim = 128;
constexpr std::uint32_t kM = 64;
constexpr std::uint32_t kN = 64;

EmbeddingSet random_set(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> data(count * kDim);
    for (auto& x : data) x = static_cast<float>(rng.gaussian());
    return EmbeddingSet(kDim, std::move(data));
}

const PqCodebook& codebook() {
    static PqCodebook cb = train_codebook(random_set(2000, 11), kM, kN, 12);
    return cb;
}

const DistanceTable& table() {
    static DistanceTable t = build_distance_table(codebook());
    return t;
}

}  // namespace

static void BM_Quantize(benchmark::State& state) {
    const PqCodebook& cb = codebook();
    EmbeddingSet set = random_set(64, 21);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(quantize(cb, set.vec(i)));
        i = (i + 1) % set.count();
    }
}
BENCHMARK(BM_Quantize);

static void BM_PqDistance(benchmark::State& state) {
    Rng rng(31);
    PqCode a(kM), b(kM);
    for (std::uint32_t j = 0; j < kM; ++j) {
        a[j] = static_cast<std::uint16_t>(rng.below(kN));
        b[j] = static_cast<std::uint16_t>(rng.below(kN));
    }
    for (auto _ : state) benchmark::DoNotOptimize(pq_distance(table(), a, b));
}
BENCHMARK(BM_PqDistance);

static void BM_TopkScan(benchmark::State& state) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0));
    PqIndex index(codebook(), table());
    index.add(random_set(rows, 41));
    PqCode query = quantize(codebook(), random_set(1, 42).vec(0));
    for (auto _ : state) benchmark::DoNotOptimize(topk_filter(index, query, 5));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_TopkScan)->Arg(1 << 12)->Arg(1 << 14)->Arg(1 << 16);

BENCHMARK_MAIN();
