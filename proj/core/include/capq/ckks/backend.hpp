/** \file
 * HeBackend adapter over the leveled ring scheme.
 */
#pragma once

#include "capq/ckks/scheme.hpp"
#include "capq/he_backend.hpp"

namespace capq {

class CkksBackend final : public HeBackend {
public:
    explicit CkksBackend(HeParams params);

    std::string_view name() const override { return "ckks_lite"; }
    std::uint8_t id() const override { return kBackendIdCkks; }
    HeCapabilities capabilities() const override;

    HeKeySet keygen(std::uint64_t seed, std::uint32_t dim) override;
    CipherVector encrypt(const PublicKey& key, std::span<const float> v,
                         Packing packing) override;
    CipherScore inner_product(const EvalKey& key, const CipherVector& query,
                              const CipherVector& db) override;
    double decrypt_score(const SecretKey& key, const CipherScore& score) override;
    std::vector<float> decrypt_vector(const SecretKey& key, const CipherVector& ct) override;

    const CkksScheme& scheme() const noexcept { return scheme_; }

private:
    CkksScheme scheme_;
    std::uint64_t enc_counter_ = 0;
};

}  // namespace capq
