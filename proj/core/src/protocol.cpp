#include "capq/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "capq/binio.hpp"
#include "capq/error.hpp"

namespace capq {

std::vector<std::uint8_t> ProtocolMessage::frame() const {
    ByteWriter w;
    w.magic("CPQM");
    w.u8(static_cast<std::uint8_t>(kind));
    w.u8(static_cast<std::uint8_t>(from));
    w.u8(static_cast<std::uint8_t>(to));
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.bytes(body);
    return w.data();
}

ProtocolMessage ProtocolMessage::parse(ByteReader& r) {
    r.expect_magic("CPQM");
    ProtocolMessage msg;
    std::uint8_t kind = r.u8();
    if (kind > 3) r.fail("unknown message kind " + std::to_string(kind));
    msg.kind = static_cast<MsgKind>(kind);
    std::uint8_t from = r.u8();
    std::uint8_t to = r.u8();
    if (from > 2 || to > 2) r.fail("unknown role");
    if (from == to) r.fail("message from a role to itself");
    msg.from = static_cast<Role>(from);
    msg.to = static_cast<Role>(to);
    std::uint32_t len = r.u32();
    if (len > r.remaining()) r.fail("body length exceeds input");
    msg.body.resize(len);
    r.bytes(msg.body);
    return msg;
}

void Transcript::save(const std::filesystem::path& path) const {
    ByteWriter w;
    for (const ProtocolMessage& m : messages_) {
        auto f = m.frame();
        w.bytes(f);
    }
    w.save(path);
}

Transcript Transcript::load(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    Transcript t;
    while (!r.at_end()) t.log(ProtocolMessage::parse(r));
    return t;
}

void MapStore::put(std::uint32_t id, CipherVector ct) {
    store_[id] = std::move(ct);
}

bool MapStore::contains(std::uint32_t id) const {
    return store_.find(id) != store_.end();
}

CipherVector MapStore::fetch(std::uint32_t id) const {
    auto it = store_.find(id);
    if (it == store_.end()) {
        throw_param("EncryptedStore: no record with id " + std::to_string(id));
    }
    return it->second;
}

namespace {

ProtocolMessage roundtrip(const ProtocolMessage& msg, Transcript* transcript) {
    if (transcript) transcript->log(msg);
    auto bytes = msg.frame();
    ByteReader r(bytes, "protocol message");
    ProtocolMessage parsed = ProtocolMessage::parse(r);
    r.expect_end();
    return parsed;
}

}  // namespace

RerankResult rerank(const QuContext& qu, const IoContext& io, const CspContext& csp,
                    std::span<const float> query, std::span<const std::uint32_t> candidate_ids,
                    Transcript* transcript) {
    if (!qu.backend || !io.backend || !csp.backend) throw_param("rerank: missing backend");
    if (!csp.store) throw_state("rerank: compute provider has no store attached");

    // Query unit: encrypt the query, then announce the candidate set.
    CipherVector enc_query = qu.backend->encrypt(qu.public_key, query, Packing::query);
    ProtocolMessage m_query{MsgKind::enc_query, Role::query_unit, Role::compute_provider,
                            enc_query.serialize()};
    ProtocolMessage m_ids;
    m_ids.kind = MsgKind::candidate_ids;
    m_ids.from = Role::query_unit;
    m_ids.to = Role::compute_provider;
    {
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(candidate_ids.size()));
        w.u32_array(candidate_ids);
        m_ids.body = w.data();
    }

    // Compute provider: score each candidate under the evaluation key.
    ProtocolMessage r_query = roundtrip(m_query, transcript);
    ProtocolMessage r_ids = roundtrip(m_ids, transcript);
    CipherVector cq = CipherVector::parse(r_query.body);
    std::vector<std::uint32_t> ids;
    {
        ByteReader r(r_ids.body, "candidate ids");
        std::uint32_t count = r.u32();
        if (std::size_t(count) * 4 != r.remaining()) r.fail("candidate count mismatch");
        ids.resize(count);
        r.u32_array(ids);
        r.expect_end();
    }
    ProtocolMessage m_scores;
    m_scores.kind = MsgKind::enc_scores;
    m_scores.from = Role::compute_provider;
    m_scores.to = Role::index_owner;
    {
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(ids.size()));
        for (std::uint32_t id : ids) {
            if (!csp.store->contains(id)) {
                throw_param("rerank: candidate id " + std::to_string(id) + " not in store");
            }
            CipherVector cx = csp.store->fetch(id);
            CipherScore cs = csp.backend->inner_product(csp.eval_key, cq, cx);
            auto bytes = cs.serialize();
            w.u32(id);
            w.u32(static_cast<std::uint32_t>(bytes.size()));
            w.bytes(bytes);
        }
        m_scores.body = w.data();
    }

    // Index owner: decrypt and rank.
    ProtocolMessage r_scores = roundtrip(m_scores, transcript);
    std::vector<RerankEntry> entries;
    {
        ByteReader r(r_scores.body, "encrypted scores");
        std::uint32_t count = r.u32();
        entries.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            RerankEntry e;
            e.id = r.u32();
            std::uint32_t len = r.u32();
            if (len > r.remaining()) r.fail("score length exceeds input");
            std::vector<std::uint8_t> bytes(len);
            r.bytes(bytes);
            CipherScore cs = CipherScore::parse(bytes);
            e.score = io.backend->decrypt_score(io.secret_key, cs);
            entries.push_back(e);
        }
        r.expect_end();
    }
    std::sort(entries.begin(), entries.end(), [](const RerankEntry& a, const RerankEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    ProtocolMessage m_result;
    m_result.kind = MsgKind::result;
    m_result.from = Role::index_owner;
    m_result.to = Role::query_unit;
    {
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(entries.size()));
        for (const RerankEntry& e : entries) {
            w.u32(e.id);
            w.f64(e.score);
        }
        m_result.body = w.data();
    }

    // Query unit: read the final ranking.
    ProtocolMessage r_result = roundtrip(m_result, transcript);
    RerankResult result;
    {
        ByteReader r(r_result.body, "result");
        std::uint32_t count = r.u32();
        result.ranked.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            result.ranked[i].id = r.u32();
            result.ranked[i].score = r.f64();
        }
        r.expect_end();
    }
    return result;
}

}  // namespace capq
