// Ring-scheme hot paths: the number-theoretic transform and the
// backend-level encrypt / inner-product / decrypt cycle.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "capq/ckks/ntt.hpp"
#include "capq/ckks/params.hpp"
#include "capq/he_backend.hpp"
#include "capq/rng.hpp"

using namespace capq;

namespace {

constexpr std::uint32_t kDim = 128;

std::vector<float> unit_vector(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(kDim);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.gaussian();
        norm2 += x * x;
    }
    std::vector<float> out(kDim);
    for (std::size_t i = 0; i < kDim; ++i)
        out[i] = static_cast<float>(v[i] / std::sqrt(norm2));
    return out;
}

struct CkksFixture {
    std::unique_ptr<HeBackend> backend = make_backend("ckks_lite");
    HeKeySet keys = backend->keygen(7, kDim);
    CipherVector query =
        backend->encrypt(keys.public_key, unit_vector(8), Packing::query);
    CipherVector db =
        backend->encrypt(keys.public_key, unit_vector(9), Packing::database);
    CipherScore score = backend->inner_product(keys.eval_key, query, db);
};

CkksFixture& fixture() {
    static CkksFixture f;
    return f;
}

}  // namespace

static void BM_NttForward(benchmark::State& state) {
    HeParams params = HeParams::defaults();
    NttTables tables(params.coeff_moduli[0], params.ring_degree);
    Rng rng(51);
    std::vector<std::uint64_t> poly(params.ring_degree);
    for (auto& c : poly) c = rng.next() % params.coeff_moduli[0];
    for (auto _ : state) {
        tables.forward(poly.data());
        benchmark::DoNotOptimize(poly.data());
    }
}
BENCHMARK(BM_NttForward);

static void BM_Encrypt(benchmark::State& state) {
    auto& f = fixture();
    std::vector<float> v = unit_vector(61);
    for (auto _ : state)
        benchmark::DoNotOptimize(f.backend->encrypt(f.keys.public_key, v, Packing::query));
}
BENCHMARK(BM_Encrypt);

static void BM_InnerProduct(benchmark::State& state) {
    auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(f.backend->inner_product(f.keys.eval_key, f.query, f.db));
}
BENCHMARK(BM_InnerProduct);

static void BM_DecryptScore(benchmark::State& state) {
    auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(f.backend->decrypt_score(f.keys.secret_key, f.score));
}
BENCHMARK(BM_DecryptScore);

BENCHMARK_MAIN();
