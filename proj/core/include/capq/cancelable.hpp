/** \file
 * Cancelable index transform: per-subspace codebook permutations plus small
 * random projections, both derived from a revocable user key.
 *
 * The permutation relocates centroids without changing their values, so
 * distances between codes are preserved exactly.  The projection perturbs
 * sub-vectors before quantization by R = I + sigma_proj * G with G standard
 * normal, trading a controlled amount of accuracy for key diversity.
 * Revoking a key and reissuing under a fresh seed rebuilds the protected
 * index from the same trained codebook.
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "capq/embedding.hpp"
#include "capq/pq.hpp"

namespace capq {

using KeyId = std::array<std::uint8_t, 16>;

struct CancelKey {
    KeyId key_id{};
    std::uint32_t m = 0;
    std::uint32_t n = 0;
    std::uint32_t d_sub = 0;
    float sigma_proj = 0.0f;
    std::vector<std::uint32_t> perms;  // m blocks of n entries; perm(j)[k] is the
                                       // protected position of centroid k
    std::vector<float> projs;          // m blocks of d_sub x d_sub, row-major

    std::span<const std::uint32_t> perm(std::uint32_t j) const;
    std::span<const float> proj(std::uint32_t j) const;
    void validate() const;
};

/// Permuted codebook and distance table bound to one key id.  Centroid values
/// equal the original codebook's; only their positions change.
struct ProtectedCodebook {
    std::uint32_t m = 0;
    std::uint32_t n = 0;
    std::uint32_t d_sub = 0;
    KeyId key_id{};
    std::vector<float> centroids;  // layout as PqCodebook
    DistanceTable table;

    std::span<const float> centroid(std::uint32_t j, std::uint32_t k) const;
    std::uint32_t dim() const noexcept { return m * d_sub; }
};

class ProtectedIndex {
public:
    explicit ProtectedIndex(ProtectedCodebook pcb);

    void add(const EmbeddingSet& set, const CancelKey& key, bool use_labels = false);
    void add_code(std::span<const std::uint16_t> code, std::uint32_t id);

    std::size_t size() const noexcept { return ids_.size(); }
    const ProtectedCodebook& pcb() const noexcept { return pcb_; }
    std::span<const std::uint16_t> flat_codes() const noexcept { return codes_; }
    std::span<const std::uint32_t> ids() const noexcept { return ids_; }

private:
    ProtectedCodebook pcb_;
    std::vector<std::uint16_t> codes_;
    std::vector<std::uint32_t> ids_;
};

/// Derives permutations and projections from the seed; sigma_proj = 0 yields
/// exact identity projections.  The key id is a digest of the key content.
CancelKey keygen(std::uint64_t seed, std::uint32_t m, std::uint32_t n, std::uint32_t d_sub,
                 float sigma_proj);

/// Applies the key's permutations to codebook and distance table.
ProtectedCodebook protect(const PqCodebook& codebook, const DistanceTable& table,
                          const CancelKey& key);

/// Projects each sub-vector by the key's R_j, then picks the nearest centroid
/// in the permuted codebook.  The key id must match the protected codebook's.
PqCode secure_quantize(const ProtectedCodebook& pcb, const CancelKey& key,
                       std::span<const float> x);

ProtectedIndex build_protected_index(const EmbeddingSet& set, const ProtectedCodebook& pcb,
                                     const CancelKey& key, bool use_labels = false);

/// Top-K scan over protected codes; ordering matches topk_filter's contract.
CandidateList cancelable_topk(const ProtectedIndex& index, const PqCode& query_code,
                              std::uint32_t k);

/// Concatenation of the centroids addressed by the code.
std::vector<float> reconstruct(const ProtectedCodebook& pcb, const PqCode& code);

/// Fresh key under a new seed plus a rebuilt protected index; the trained
/// codebook is reused unchanged.
std::pair<CancelKey, ProtectedIndex> revoke_and_reissue(const EmbeddingSet& set,
                                                        const PqCodebook& codebook,
                                                        const DistanceTable& table,
                                                        std::uint64_t new_seed, float sigma_proj,
                                                        bool use_labels = false);

/// log2 of the brute-force key search space (n!)^m, via the log-gamma
/// function so large parameters do not overflow.
double log2_bruteforce_cost(std::uint32_t n, std::uint32_t m);

CancelKey load_key(const std::filesystem::path& path);
void write_key(const CancelKey& key, const std::filesystem::path& path);
ProtectedIndex load_protected_index(const std::filesystem::path& path);
void write_protected_index(const ProtectedIndex& index, const std::filesystem::path& path);

}  // namespace capq
