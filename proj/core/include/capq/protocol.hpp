/** \file
 * Three-role re-ranking protocol with framed messages and a transcript.
 *
 * Roles: the query unit encrypts the query and receives the final ranking;
 * the compute provider scores candidates under the evaluation key without
 * ever holding a decryption capability; the index owner decrypts scores and
 * ranks.  Each step crosses a real serialization boundary, so the
 * transcript holds exactly the bytes a network would carry.
 *
 * Frame layout: magic "CPQM", kind u8, from u8, to u8, length u32, body.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "capq/he_backend.hpp"

namespace capq {

enum class Role : std::uint8_t {
    query_unit = 0,
    index_owner = 1,
    compute_provider = 2,
};

enum class MsgKind : std::uint8_t {
    enc_query = 0,
    candidate_ids = 1,
    enc_scores = 2,
    result = 3,
};

struct ProtocolMessage {
    MsgKind kind = MsgKind::enc_query;
    Role from = Role::query_unit;
    Role to = Role::query_unit;
    std::vector<std::uint8_t> body;

    std::vector<std::uint8_t> frame() const;
    /// Consumes one frame from the reader.
    static ProtocolMessage parse(class ByteReader& r);
};

class Transcript {
public:
    void log(const ProtocolMessage& msg) { messages_.push_back(msg); }
    const std::vector<ProtocolMessage>& messages() const noexcept { return messages_; }

    void save(const std::filesystem::path& path) const;
    static Transcript load(const std::filesystem::path& path);

private:
    std::vector<ProtocolMessage> messages_;
};

/// Ciphertext collection addressed by record id, held by the compute
/// provider.
class EncryptedStore {
public:
    virtual ~EncryptedStore() = default;
    virtual bool contains(std::uint32_t id) const = 0;
    virtual CipherVector fetch(std::uint32_t id) const = 0;
    virtual std::size_t size() const = 0;
};

class MapStore final : public EncryptedStore {
public:
    void put(std::uint32_t id, CipherVector ct);
    bool contains(std::uint32_t id) const override;
    CipherVector fetch(std::uint32_t id) const override;
    std::size_t size() const override { return store_.size(); }

private:
    std::unordered_map<std::uint32_t, CipherVector> store_;
};

/// Capability objects: each role holds exactly the key material its part of
/// the protocol needs, so misuse is structurally impossible (the compute
/// provider has no decryption handle to call).
struct QuContext {
    HeBackend* backend = nullptr;
    PublicKey public_key;
};

struct IoContext {
    HeBackend* backend = nullptr;
    SecretKey secret_key;
};

struct CspContext {
    HeBackend* backend = nullptr;
    EvalKey eval_key;
    const EncryptedStore* store = nullptr;
};

struct RerankEntry {
    std::uint32_t id = 0;
    double score = 0.0;
};

struct RerankResult {
    std::vector<RerankEntry> ranked;  // descending score, ties by ascending id
};

/// Runs the full protocol for one query over the given candidate ids.
/// Every message is framed, optionally logged, and re-parsed by the
/// receiving role.  Unknown candidate ids are a parameter error.
RerankResult rerank(const QuContext& qu, const IoContext& io, const CspContext& csp,
                    std::span<const float> query, std::span<const std::uint32_t> candidate_ids,
                    Transcript* transcript = nullptr);

}  // namespace capq
