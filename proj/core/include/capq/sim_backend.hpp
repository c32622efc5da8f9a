/** \file
 * Keyed-masking simulation backend.
 *
 * Payloads are plaintext values XORed with a SHA-256 counter keystream under
 * a per-keyset root, so serialized ciphertexts reveal nothing without the
 * key material while scoring stays exact: decrypted inner products equal the
 * plaintext double-precision dot product bit for bit.
 */
#pragma once

#include "capq/he_backend.hpp"

namespace capq {

class SimBackend final : public HeBackend {
public:
    std::string_view name() const override { return "sim"; }
    std::uint8_t id() const override { return kBackendIdSim; }
    HeCapabilities capabilities() const override;

    HeKeySet keygen(std::uint64_t seed, std::uint32_t dim) override;
    CipherVector encrypt(const PublicKey& key, std::span<const float> v,
                         Packing packing) override;
    CipherScore inner_product(const EvalKey& key, const CipherVector& query,
                              const CipherVector& db) override;
    double decrypt_score(const SecretKey& key, const CipherScore& score) override;
    std::vector<float> decrypt_vector(const SecretKey& key, const CipherVector& ct) override;

private:
    std::uint64_t nonce_counter_ = 0;
};

}  // namespace capq
