/** \file
 * Backend interface for encrypted inner-product scoring.
 *
 * Two implementations exist: a keyed-masking simulation that mirrors the
 * protocol and serialization exactly while computing in plaintext
 * internally, and a leveled homomorphic scheme over polynomial rings.  Both
 * enforce key separation: scoring requires only the evaluation key, and
 * decryption requires the secret key.  Every ciphertext records the
 * fingerprint of the key set it was produced under; mixing fingerprints is
 * a key error.
 */
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace capq {

/// Query vectors and database vectors are packed differently so that one
/// ring multiplication aligns their inner product on a fixed coefficient.
enum class Packing : std::uint8_t { query = 0, database = 1 };

/// Opaque key material; concrete backends subclass it.  Key material is
/// never serialized.
struct KeyMaterial {
    virtual ~KeyMaterial() = default;
    std::uint64_t fingerprint = 0;
};

using PublicKey = std::shared_ptr<const KeyMaterial>;
using SecretKey = std::shared_ptr<const KeyMaterial>;
using EvalKey = std::shared_ptr<const KeyMaterial>;

struct HeKeySet {
    PublicKey public_key;
    SecretKey secret_key;
    EvalKey eval_key;
    std::uint64_t fingerprint = 0;
};

struct CipherVector {
    std::uint8_t backend_id = 0;
    std::uint32_t dim = 0;
    Packing packing = Packing::query;
    std::uint64_t fingerprint = 0;
    std::vector<std::uint8_t> payload;

    std::vector<std::uint8_t> serialize() const;
    static CipherVector parse(std::span<const std::uint8_t> data);
};

struct CipherScore {
    std::uint8_t backend_id = 0;
    std::uint64_t fingerprint = 0;
    std::vector<std::uint8_t> payload;

    std::vector<std::uint8_t> serialize() const;
    static CipherScore parse(std::span<const std::uint8_t> data);
};

struct HeCapabilities {
    std::uint32_t max_dim = 0;
    /// Worst expected absolute error of a decrypted score; zero means the
    /// backend is exact up to float rounding.
    double score_tolerance = 0.0;
};

struct HeOpCounts {
    std::uint64_t encryptions = 0;
    std::uint64_t inner_products = 0;
    std::uint64_t decryptions = 0;
};

class HeBackend {
public:
    virtual ~HeBackend() = default;

    virtual std::string_view name() const = 0;
    virtual std::uint8_t id() const = 0;
    virtual HeCapabilities capabilities() const = 0;

    /// Deterministic in the seed.  dim above the backend capacity is a
    /// parameter error.
    virtual HeKeySet keygen(std::uint64_t seed, std::uint32_t dim) = 0;

    virtual CipherVector encrypt(const PublicKey& key, std::span<const float> v,
                                 Packing packing) = 0;
    /// query must use query packing, db database packing, fingerprints must
    /// agree with the evaluation key's.
    virtual CipherScore inner_product(const EvalKey& key, const CipherVector& query,
                                      const CipherVector& db) = 0;
    virtual double decrypt_score(const SecretKey& key, const CipherScore& score) = 0;
    virtual std::vector<float> decrypt_vector(const SecretKey& key, const CipherVector& ct) = 0;

    const HeOpCounts& counts() const noexcept { return counts_; }
    void reset_counts() noexcept { counts_ = {}; }

protected:
    HeOpCounts counts_;
};

/// "sim" or "ckks_lite" (the latter with default parameters).
std::unique_ptr<HeBackend> make_backend(const std::string& name);

constexpr std::uint8_t kBackendIdSim = 0;
constexpr std::uint8_t kBackendIdCkks = 1;

}  // namespace capq
