// Protection-layer hot paths: key derivation, codebook permutation and the
// secure quantization applied to every query.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "capq/cancelable.hpp"
#include "capq/embedding.hpp"
#include "capq/pq.hpp"
#include "capq/rng.hpp"

using namespace capq;

namespace {

constexpr std::uint32_t kDim = 128;
constexpr std::uint32_t kM = 64;
constexpr std::uint32_t kN = 64;
constexpr float kSigma = 2e-3f;

EmbeddingSet random_set(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> data(count * kDim);
    for (auto& x : data) x = static_cast<float>(rng.gaussian());
    return EmbeddingSet(kDim, std::move(data));
}

struct Fixture {
    PqCodebook cb = train_codebook(random_set(2000, 11), kM, kN, 12);
    DistanceTable tab = build_distance_table(cb);
    CancelKey key = keygen(77, kM, kN, cb.d_sub, kSigma);
    ProtectedCodebook pcb = protect(cb, tab, key);
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

static void BM_Keygen(benchmark::State& state) {
    std::uint64_t seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(keygen(seed++, kM, kN, kDim / kM, kSigma));
    }
}
BENCHMARK(BM_Keygen);

static void BM_Protect(benchmark::State& state) {
    auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(protect(f.cb, f.tab, f.key));
}
BENCHMARK(BM_Protect);

static void BM_SecureQuantize(benchmark::State& state) {
    auto& f = fixture();
    EmbeddingSet set = random_set(64, 21);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(secure_quantize(f.pcb, f.key, set.vec(i)));
        i = (i + 1) % set.count();
    }
}
BENCHMARK(BM_SecureQuantize);

static void BM_CancelableTopk(benchmark::State& state) {
    auto& f = fixture();
    const std::size_t rows = static_cast<std::size_t>(state.range(0));
    ProtectedIndex index(f.pcb);
    index.add(random_set(rows, 41), f.key);
    PqCode query = secure_quantize(f.pcb, f.key, random_set(1, 42).vec(0));
    for (auto _ : state) benchmark::DoNotOptimize(cancelable_topk(index, query, 5));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_CancelableTopk)->Arg(1 << 12)->Arg(1 << 14);

BENCHMARK_MAIN();
