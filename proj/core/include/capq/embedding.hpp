/** \file
 * Embedding vector sets: binary container, synthetic generation, PCA
 * reduction and normalization.
 *
 * The on-disk container ("EVEC") stores a count x dim matrix of 32-bit
 * little-endian reals, with an optional trailing label block ("LBLS").
 * Loading and rewriting a valid file reproduces it byte for byte.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace capq {

/// Immutable set of fixed-dimension float vectors with optional identity labels.
class EmbeddingSet {
public:
    /// Validates shape, finiteness and label count; throws on violation.
    EmbeddingSet(std::size_t dim, std::vector<float> data,
                 std::optional<std::vector<std::uint32_t>> labels = std::nullopt);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return count_; }

    std::span<const float> vec(std::size_t i) const;
    const std::vector<float>& data() const noexcept { return data_; }

    bool has_labels() const noexcept { return labels_.has_value(); }
    const std::vector<std::uint32_t>& labels() const;
    std::uint32_t label(std::size_t i) const;

private:
    std::size_t dim_;
    std::size_t count_;
    std::vector<float> data_;
    std::optional<std::vector<std::uint32_t>> labels_;
};

/// Mean-centered linear projection fitted by PCA.  `components` holds
/// output_dim rows of input_dim coefficients, ordered by decreasing
/// explained variance; rows are orthonormal.
struct PcaModel {
    std::uint32_t input_dim = 0;
    std::uint32_t output_dim = 0;
    std::vector<float> mean;                // input_dim
    std::vector<float> components;          // output_dim x input_dim, row-major
    std::vector<float> explained_variance;  // output_dim, non-increasing
};

/// Parameters for the clustered synthetic benchmark data.
struct SyntheticSpec {
    std::uint32_t n_identities = 0;
    std::uint32_t samples_per_identity = 0;
    std::uint32_t dim = 0;
    float intra_class_noise = 0.0f;
    std::uint64_t seed = 0;
};

EmbeddingSet load_evec(const std::filesystem::path& path);
void write_evec(const EmbeddingSet& set, const std::filesystem::path& path);

/// Unit-norm samples clustered around unit-norm identity centers; labels are
/// identity indices, rows are identity-major.  Deterministic in the seed.
EmbeddingSet gen_synthetic(const SyntheticSpec& spec);

/// Requires 1 <= target_dim <= min(set.count, set.dim).
PcaModel fit_pca(const EmbeddingSet& set, std::size_t target_dim);

EmbeddingSet apply_pca(const PcaModel& model, const EmbeddingSet& set);

/// Scales every vector to unit norm; a zero vector is a data error.
EmbeddingSet l2_normalize(const EmbeddingSet& set);

PcaModel load_pca(const std::filesystem::path& path);
void write_pca(const PcaModel& model, const std::filesystem::path& path);

}  // namespace capq
