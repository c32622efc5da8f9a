#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "capq/error.hpp"
#include "capq/he_backend.hpp"
#include "capq/rng.hpp"

using namespace capq;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.gaussian());
    return v;
}

double dot_f32(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
    return s;
}

}  // namespace

TEST_CASE("masking backend round-trips vectors exactly") {
    auto backend = make_backend("sim");
    HeKeySet keys = backend->keygen(5, 16);
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        auto v = random_vec(rng, 16);
        for (Packing p : {Packing::query, Packing::database}) {
            CipherVector ct = backend->encrypt(keys.public_key, v, p);
            CHECK(ct.packing == p);
            std::vector<float> back = backend->decrypt_vector(keys.secret_key, ct);
            CHECK(back == v);  // bit-exact
        }
    }
}

TEST_CASE("masking backend keygen is deterministic, encryption is not") {
    auto backend = make_backend("sim");
    HeKeySet a = backend->keygen(42, 8);
    HeKeySet b = backend->keygen(42, 8);
    CHECK(a.fingerprint == b.fingerprint);
    CHECK(backend->keygen(43, 8).fingerprint != a.fingerprint);

    Rng rng(1);
    auto v = random_vec(rng, 8);
    CipherVector c1 = backend->encrypt(a.public_key, v, Packing::query);
    CipherVector c2 = backend->encrypt(a.public_key, v, Packing::query);
    CHECK(c1.payload != c2.payload);  // fresh nonce per encryption
}

TEST_CASE("masked inner product equals the double-precision dot oracle") {
    auto backend = make_backend("sim");
    HeKeySet keys = backend->keygen(7, 32);
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto q = random_vec(rng, 32);
        auto d = random_vec(rng, 32);
        CipherVector cq = backend->encrypt(keys.public_key, q, Packing::query);
        CipherVector cd = backend->encrypt(keys.public_key, d, Packing::database);
        CipherScore score = backend->inner_product(keys.eval_key, cq, cd);
        double got = backend->decrypt_score(keys.secret_key, score);
        CHECK(got == dot_f32(q, d));  // same arithmetic, bit-exact
    }
}

TEST_CASE("role keys are enforced by type") {
    auto backend = make_backend("sim");
    HeKeySet keys = backend->keygen(11, 4);
    Rng rng(12);
    auto v = random_vec(rng, 4);
    CipherVector cq = backend->encrypt(keys.public_key, v, Packing::query);
    CipherVector cd = backend->encrypt(keys.public_key, v, Packing::database);

    // A public key passed where an evaluation key is required.
    try {
        backend->inner_product(keys.public_key, cq, cd);
        FAIL("expected a key error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::key_mismatch);
    }
    // A public key cannot decrypt.
    CipherScore s = backend->inner_product(keys.eval_key, cq, cd);
    CHECK_THROWS_AS(backend->decrypt_score(keys.public_key, s), Error);
    CHECK_THROWS_AS(backend->decrypt_vector(keys.eval_key, cq), Error);
}

TEST_CASE("fingerprints from different keys are rejected") {
    auto backend = make_backend("sim");
    HeKeySet k1 = backend->keygen(1, 4);
    HeKeySet k2 = backend->keygen(2, 4);
    Rng rng(3);
    auto v = random_vec(rng, 4);
    CipherVector cq = backend->encrypt(k1.public_key, v, Packing::query);
    CipherVector cd = backend->encrypt(k2.public_key, v, Packing::database);
    try {
        backend->inner_product(k1.eval_key, cq, cd);
        FAIL("expected a key error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::key_mismatch);
    }
    CHECK_THROWS_AS(backend->decrypt_vector(k2.secret_key, cq), Error);
}

TEST_CASE("packing roles and dimensions are checked") {
    auto backend = make_backend("sim");
    HeKeySet keys = backend->keygen(21, 4);
    Rng rng(22);
    auto v = random_vec(rng, 4);
    CipherVector cq = backend->encrypt(keys.public_key, v, Packing::query);
    CipherVector cd = backend->encrypt(keys.public_key, v, Packing::database);
    // Two queries, two database vectors, swapped order: all parameter errors.
    CHECK_THROWS_AS(backend->inner_product(keys.eval_key, cq, cq), Error);
    CHECK_THROWS_AS(backend->inner_product(keys.eval_key, cd, cd), Error);
    CHECK_THROWS_AS(backend->inner_product(keys.eval_key, cd, cq), Error);

    Rng rng2(23);
    auto w = random_vec(rng2, 8);
    auto backend2 = make_backend("sim");
    HeKeySet keys2 = backend2->keygen(21, 8);
    CipherVector cw = backend2->encrypt(keys2.public_key, w, Packing::database);
    CHECK_THROWS_AS(backend->inner_product(keys.eval_key, cq, cw), Error);
}

TEST_CASE("operation counters track encrypt, inner product and decrypt") {
    auto backend = make_backend("sim");
    HeKeySet keys = backend->keygen(31, 4);
    Rng rng(32);
    auto v = random_vec(rng, 4);
    backend->reset_counts();
    CipherVector cq = backend->encrypt(keys.public_key, v, Packing::query);
    CipherVector cd = backend->encrypt(keys.public_key, v, Packing::database);
    CipherScore s = backend->inner_product(keys.eval_key, cq, cd);
    (void)backend->decrypt_score(keys.secret_key, s);
    CHECK(backend->counts().encryptions == 2);
    CHECK(backend->counts().inner_products == 1);
    CHECK(backend->counts().decryptions == 1);
    backend->reset_counts();
    CHECK(backend->counts().encryptions == 0);
}

TEST_CASE("cipher containers round-trip and reject corruption") {
    auto backend = make_backend("sim");
    HeKeySet keys = backend->keygen(41, 4);
    Rng rng(42);
    auto v = random_vec(rng, 4);
    CipherVector ct = backend->encrypt(keys.public_key, v, Packing::database);
    auto bytes = ct.serialize();
    CipherVector back = CipherVector::parse(bytes);
    CHECK(back.backend_id == ct.backend_id);
    CHECK(back.dim == ct.dim);
    CHECK(back.packing == ct.packing);
    CHECK(back.fingerprint == ct.fingerprint);
    CHECK(back.payload == ct.payload);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 1);
    CHECK_THROWS_AS(CipherVector::parse(truncated), Error);

    auto wrong_magic = bytes;
    wrong_magic[0] ^= 0xFF;
    CHECK_THROWS_AS(CipherVector::parse(wrong_magic), Error);
}

TEST_CASE("unknown backend names are rejected") {
    CHECK_THROWS_AS(make_backend("paillier"), Error);
}
