#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "capq/binio.hpp"
#include "capq/error.hpp"
#include "capq/he_backend.hpp"
#include "capq/protocol.hpp"
#include "capq/rng.hpp"

using namespace capq;

namespace {

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double n2 = 0.0;
    for (auto& x : v) {
        x = rng.gaussian();
        n2 += x * x;
    }
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / std::sqrt(n2));
    return out;
}

double dot_f32(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
    return s;
}

struct ProtocolFixture {
    std::unique_ptr<HeBackend> backend;
    HeKeySet keys;
    MapStore store;
    std::vector<std::vector<float>> db;
    QuContext qu;
    IoContext io;
    CspContext csp;

    ProtocolFixture(const std::string& name, std::size_t rows, std::size_t dim,
                    std::uint64_t seed) {
        backend = make_backend(name);
        keys = backend->keygen(seed, static_cast<std::uint32_t>(dim));
        Rng rng(seed + 1);
        for (std::size_t i = 0; i < rows; ++i) {
            db.push_back(random_unit(rng, dim));
            store.put(static_cast<std::uint32_t>(i),
                      backend->encrypt(keys.public_key, db.back(), Packing::database));
        }
        qu = QuContext{backend.get(), keys.public_key};
        io = IoContext{backend.get(), keys.secret_key};
        csp = CspContext{backend.get(), keys.eval_key, &store};
    }
};

bool contains_bytes(const std::vector<std::uint8_t>& haystack, const void* needle,
                    std::size_t len) {
    if (len == 0 || haystack.size() < len) return false;
    const auto* n = static_cast<const std::uint8_t*>(needle);
    auto it = std::search(haystack.begin(), haystack.end(), n, n + len);
    return it != haystack.end();
}

}  // namespace

TEST_CASE("protocol messages frame and parse losslessly") {
    const MsgKind kinds[] = {MsgKind::enc_query, MsgKind::candidate_ids, MsgKind::enc_scores,
                             MsgKind::result};
    const Role pairs[][2] = {{Role::query_unit, Role::compute_provider},
                             {Role::query_unit, Role::compute_provider},
                             {Role::compute_provider, Role::index_owner},
                             {Role::index_owner, Role::query_unit}};
    for (int i = 0; i < 4; ++i) {
        ProtocolMessage msg;
        msg.kind = kinds[i];
        msg.from = pairs[i][0];
        msg.to = pairs[i][1];
        msg.body.assign(std::size_t(i) * 7, static_cast<std::uint8_t>(0x40 + i));
        auto bytes = msg.frame();
        ByteReader r(bytes, "frame");
        ProtocolMessage back = ProtocolMessage::parse(r);
        r.expect_end();
        CHECK(back.kind == msg.kind);
        CHECK(back.from == msg.from);
        CHECK(back.to == msg.to);
        CHECK(back.body == msg.body);
    }
}

TEST_CASE("frame parsing rejects malformed headers") {
    ProtocolMessage msg;
    msg.kind = MsgKind::result;
    msg.from = Role::index_owner;
    msg.to = Role::query_unit;
    msg.body = {1, 2, 3};
    auto good = msg.frame();

    auto check_fails = [](std::vector<std::uint8_t> bytes, const char* fragment) {
        ByteReader r(bytes, "frame");
        try {
            (void)ProtocolMessage::parse(r);
            FAIL("expected a data error for ", fragment);
        } catch (const Error& e) {
            CHECK(e.code() == errc::bad_data);
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };

    auto bad_magic = good;
    bad_magic[0] = 'X';
    check_fails(bad_magic, "magic");

    auto bad_kind = good;
    bad_kind[4] = 9;
    check_fails(bad_kind, "kind");

    auto bad_role = good;
    bad_role[5] = 7;
    check_fails(bad_role, "role");

    auto self_addressed = good;
    self_addressed[6] = self_addressed[5];
    check_fails(self_addressed, "itself");

    auto oversize = good;
    oversize[7] = 0xFF;  // body length u32 far beyond the input
    check_fails(oversize, "length");
}

TEST_CASE("the encrypted store reports missing records by id") {
    MapStore store;
    CHECK(store.size() == 0);
    CHECK_FALSE(store.contains(5));
    try {
        (void)store.fetch(5);
        FAIL("expected a parameter error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::invalid_parameter);
        CHECK(std::string(e.what()).find("no record with id 5") != std::string::npos);
    }
}

TEST_CASE("rerank scores equal exact plaintext inner products under sim") {
    ProtocolFixture fx("sim", 12, 24, 400);
    Rng rng(401);
    std::vector<std::uint32_t> ids(12);
    for (std::uint32_t i = 0; i < 12; ++i) ids[i] = i;
    for (int trial = 0; trial < 10; ++trial) {
        auto q = random_unit(rng, 24);
        RerankResult res = rerank(fx.qu, fx.io, fx.csp, q, ids);
        REQUIRE(res.ranked.size() == 12);
        for (const RerankEntry& e : res.ranked) {
            // The sim backend computes the same double-precision dot.
            CHECK(e.score == dot_f32(q, fx.db[e.id]));
        }
    }
}

TEST_CASE("rerank orders by descending score with ascending-id ties") {
    ProtocolFixture fx("sim", 6, 8, 410);
    // Duplicate rows force exact score ties.
    fx.db[3] = fx.db[1];
    fx.db[5] = fx.db[1];
    fx.store.put(3, fx.backend->encrypt(fx.keys.public_key, fx.db[3], Packing::database));
    fx.store.put(5, fx.backend->encrypt(fx.keys.public_key, fx.db[5], Packing::database));
    Rng rng(411);
    std::vector<std::uint32_t> ids{0, 1, 2, 3, 4, 5};
    for (int trial = 0; trial < 5; ++trial) {
        auto q = random_unit(rng, 8);
        RerankResult res = rerank(fx.qu, fx.io, fx.csp, q, ids);

        std::vector<RerankEntry> oracle;
        for (std::uint32_t id : ids) oracle.push_back({id, dot_f32(q, fx.db[id])});
        std::sort(oracle.begin(), oracle.end(), [](const RerankEntry& a, const RerankEntry& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        REQUIRE(res.ranked.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(res.ranked[i].id == oracle[i].id);
            CHECK(res.ranked[i].score == oracle[i].score);
        }
        // The three duplicates tie exactly and resolve by id.
        std::vector<std::size_t> pos(6);
        for (std::size_t i = 0; i < res.ranked.size(); ++i) pos[res.ranked[i].id] = i;
        CHECK(pos[1] < pos[3]);
        CHECK(pos[3] < pos[5]);
    }
}

TEST_CASE("rerank handles an empty candidate set") {
    ProtocolFixture fx("sim", 3, 8, 420);
    Rng rng(421);
    auto q = random_unit(rng, 8);
    RerankResult res = rerank(fx.qu, fx.io, fx.csp, q, {});
    CHECK(res.ranked.empty());
}

TEST_CASE("rerank rejects candidate ids missing from the store") {
    ProtocolFixture fx("sim", 3, 8, 430);
    Rng rng(431);
    auto q = random_unit(rng, 8);
    std::vector<std::uint32_t> ids{0, 99};
    try {
        (void)rerank(fx.qu, fx.io, fx.csp, q, ids);
        FAIL("expected a parameter error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::invalid_parameter);
        CHECK(std::string(e.what()).find("99") != std::string::npos);
    }
}

TEST_CASE("rerank requires wired-up contexts") {
    ProtocolFixture fx("sim", 2, 8, 440);
    Rng rng(441);
    auto q = random_unit(rng, 8);
    std::vector<std::uint32_t> ids{0};
    QuContext no_backend{nullptr, fx.keys.public_key};
    CHECK_THROWS_AS(rerank(no_backend, fx.io, fx.csp, q, ids), Error);
    CspContext no_store{fx.backend.get(), fx.keys.eval_key, nullptr};
    CHECK_THROWS_AS(rerank(fx.qu, fx.io, no_store, q, ids), Error);
}

TEST_CASE("the transcript records the four protocol steps in order") {
    ProtocolFixture fx("sim", 5, 16, 450);
    Rng rng(451);
    auto q = random_unit(rng, 16);
    std::vector<std::uint32_t> ids{0, 2, 4};
    Transcript t;
    (void)rerank(fx.qu, fx.io, fx.csp, q, ids, &t);
    REQUIRE(t.messages().size() == 4);

    const auto& m = t.messages();
    CHECK(m[0].kind == MsgKind::enc_query);
    CHECK(m[0].from == Role::query_unit);
    CHECK(m[0].to == Role::compute_provider);
    CHECK(m[1].kind == MsgKind::candidate_ids);
    CHECK(m[1].from == Role::query_unit);
    CHECK(m[1].to == Role::compute_provider);
    CHECK(m[2].kind == MsgKind::enc_scores);
    CHECK(m[2].from == Role::compute_provider);
    CHECK(m[2].to == Role::index_owner);
    CHECK(m[3].kind == MsgKind::result);
    CHECK(m[3].from == Role::index_owner);
    CHECK(m[3].to == Role::query_unit);

    // A second query appends four more messages.
    (void)rerank(fx.qu, fx.io, fx.csp, q, ids, &t);
    CHECK(t.messages().size() == 8);
}

TEST_CASE("compute-provider traffic never carries plaintext vector bytes") {
    ProtocolFixture fx("sim", 8, 32, 460);
    Rng rng(461);
    std::vector<std::uint32_t> ids{0, 1, 2, 3, 4, 5, 6, 7};
    for (int trial = 0; trial < 20; ++trial) {
        auto q = random_unit(rng, 32);
        Transcript t;
        (void)rerank(fx.qu, fx.io, fx.csp, q, ids, &t);
        for (const ProtocolMessage& m : t.messages()) {
            if (m.to != Role::compute_provider) continue;
            // Eight consecutive query floats would betray the plaintext.
            CHECK_FALSE(contains_bytes(m.body, q.data(), 8 * sizeof(float)));
            for (const auto& row : fx.db)
                CHECK_FALSE(contains_bytes(m.body, row.data(), 8 * sizeof(float)));
        }
    }
}

TEST_CASE("transcripts save and load byte-identically") {
    ProtocolFixture fx("sim", 4, 8, 470);
    Rng rng(471);
    auto q = random_unit(rng, 8);
    std::vector<std::uint32_t> ids{0, 1, 2, 3};
    Transcript t;
    (void)rerank(fx.qu, fx.io, fx.csp, q, ids, &t);

    auto path = std::filesystem::temp_directory_path() / "capq_transcript_test.cpqt";
    t.save(path);
    Transcript back = Transcript::load(path);
    std::filesystem::remove(path);

    REQUIRE(back.messages().size() == t.messages().size());
    for (std::size_t i = 0; i < t.messages().size(); ++i) {
        CHECK(back.messages()[i].kind == t.messages()[i].kind);
        CHECK(back.messages()[i].from == t.messages()[i].from);
        CHECK(back.messages()[i].to == t.messages()[i].to);
        CHECK(back.messages()[i].body == t.messages()[i].body);
    }
}

TEST_CASE("rerank under the ring backend stays within its score tolerance") {
    ProtocolFixture fx("ckks_lite", 6, 32, 480);
    Rng rng(481);
    std::vector<std::uint32_t> ids{0, 1, 2, 3, 4, 5};
    double tol = fx.backend->capabilities().score_tolerance;
    for (int trial = 0; trial < 3; ++trial) {
        auto q = random_unit(rng, 32);
        RerankResult res = rerank(fx.qu, fx.io, fx.csp, q, ids);
        REQUIRE(res.ranked.size() == 6);
        for (const RerankEntry& e : res.ranked)
            CHECK(std::abs(e.score - dot_f32(q, fx.db[e.id])) < tol);
    }
}
