/** \file
 * Product quantizer: per-subspace codebooks, symmetric distance tables and
 * Top-K candidate filtering over compact codes.
 *
 * A vector of dimension dim is split into m contiguous subspaces of
 * d_sub = dim / m components; each subspace is quantized independently to one
 * of n centroids.  Symmetric distances between codes are read from a
 * precomputed m x n x n table of squared centroid distances.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "capq/embedding.hpp"

namespace capq {

/// One centroid index per subspace.
using PqCode = std::vector<std::uint16_t>;

struct PqCodebook {
    std::uint32_t m = 0;
    std::uint32_t n = 0;
    std::uint32_t d_sub = 0;
    std::vector<float> centroids;  // [(j * n + k) * d_sub + t]

    std::span<const float> centroid(std::uint32_t j, std::uint32_t k) const;
    std::uint32_t dim() const noexcept { return m * d_sub; }
    void validate() const;
};

/// Squared distances between centroid pairs, one n x n block per subspace.
struct DistanceTable {
    std::uint32_t m = 0;
    std::uint32_t n = 0;
    std::vector<float> d;  // [(j * n + a) * n + b]

    float at(std::uint32_t j, std::uint32_t a, std::uint32_t b) const {
        return d[(std::size_t(j) * n + a) * n + b];
    }
    std::span<const float> row(std::uint32_t j, std::uint32_t a) const {
        return {d.data() + (std::size_t(j) * n + a) * n, n};
    }
    void validate() const;
};

/// Candidates ordered by ascending distance, ties by ascending id.
struct CandidateList {
    std::vector<std::uint32_t> ids;
    std::vector<float> distances;

    std::size_t size() const noexcept { return ids.size(); }
};

/// Codes and ids for a vector collection, scannable against a query code.
class PqIndex {
public:
    PqIndex(PqCodebook codebook, DistanceTable table);

    /// Quantizes and appends every row of the set.  Ids are the set's labels
    /// when use_labels is set, otherwise ordinal positions.
    void add(const EmbeddingSet& set, bool use_labels = false);
    void add_code(std::span<const std::uint16_t> code, std::uint32_t id);

    std::size_t size() const noexcept { return ids_.size(); }
    const PqCodebook& codebook() const noexcept { return codebook_; }
    const DistanceTable& table() const noexcept { return table_; }
    std::span<const std::uint16_t> code(std::size_t row) const;
    std::span<const std::uint16_t> flat_codes() const noexcept { return codes_; }
    std::span<const std::uint32_t> ids() const noexcept { return ids_; }

private:
    PqCodebook codebook_;
    DistanceTable table_;
    std::vector<std::uint16_t> codes_;
    std::vector<std::uint32_t> ids_;
};

/// Trains per-subspace codebooks with k-means (k-means++ seeding, at most 25
/// Lloyd iterations, convergence when under 0.1% of assignments change).
/// Requires set.count >= n and set.dim divisible by m.
PqCodebook train_codebook(const EmbeddingSet& set, std::uint32_t m, std::uint32_t n,
                          std::uint64_t seed);

/// Nearest centroid index per subspace; ties resolve to the lowest index.
PqCode quantize(const PqCodebook& codebook, std::span<const float> x);

DistanceTable build_distance_table(const PqCodebook& codebook);

/// Code-to-code distance as the sum of per-subspace table entries.
double pq_distance(const DistanceTable& table, const PqCode& a, const PqCode& b);

/// Top-K scan of the whole index against a query code.  Ordering is
/// (distance ascending, id ascending); equal to sorting the full scan and
/// taking the head.  K is clamped to the index size.
CandidateList topk_filter(const PqIndex& index, const PqCode& query_code, std::uint32_t k);

/// Shared scan core, also used by the key-protected index.
CandidateList scan_topk(const DistanceTable& table, std::span<const std::uint16_t> flat_codes,
                        std::span<const std::uint32_t> ids, std::span<const std::uint16_t> query_code,
                        std::uint32_t k);

PqCodebook load_codebook(const std::filesystem::path& path);
void write_codebook(const PqCodebook& codebook, const std::filesystem::path& path);
DistanceTable load_distance_table(const std::filesystem::path& path);
void write_distance_table(const DistanceTable& table, const std::filesystem::path& path);

/// The index container holds codes and ids only; codebook and table travel
/// in their own containers and are reattached on load.
PqIndex load_index(const std::filesystem::path& index_path, PqCodebook codebook,
                   DistanceTable table);
void write_index(const PqIndex& index, const std::filesystem::path& path);

}  // namespace capq
