/** \file
 * Security evaluation: score distributions across keys, distribution
 * statistics, unlinkability and key-diversity reports.
 *
 * Four score populations are sampled from a labeled dataset: genuine
 * (same identity, same key), imposter (different identity, same key),
 * pseudo-genuine (same identity, different keys) and pseudo-imposter
 * (different identity, different keys).  Codes are compared by decoding
 * both through the shared reference codebook and taking the cosine of the
 * reconstructions; cross-key comparability therefore assumes a common
 * trained codebook, and every report states that assumption.
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "capq/cancelable.hpp"
#include "capq/embedding.hpp"
#include "capq/pq.hpp"

namespace capq {

enum class ScoreKind : std::uint8_t {
    genuine = 0,
    imposter = 1,
    pseudo_genuine = 2,
    pseudo_imposter = 3,
};

const char* to_string(ScoreKind kind);

struct ScoreSet {
    ScoreKind kind = ScoreKind::genuine;
    std::vector<float> scores;
    // Provenance.
    std::string dataset_id;
    std::vector<std::uint64_t> key_seeds;
    std::string pairing;
};

struct ScoreSets {
    ScoreSet genuine;
    ScoreSet imposter;
    ScoreSet pseudo_genuine;
    ScoreSet pseudo_imposter;
};

/// Cosine similarity of the two codes' reconstructions through the common
/// reference codebook.  Identical codes score exactly 1.
double protected_similarity(const PqCodebook& reference, const PqCode& a, const PqCode& b);

/// Samples pair populations (uniform, without replacement, deterministic in
/// the key seeds and budget) and scores them under keys derived from
/// key_seeds at the given sigma_proj.  Genuine and pseudo-genuine share one
/// pair list, as do imposter and pseudo-imposter, so identical keys make
/// the pseudo sets collapse onto their plain counterparts exactly.
ScoreSets score_sets(const EmbeddingSet& data, const PqCodebook& codebook,
                     const DistanceTable& table, std::span<const std::uint64_t> key_seeds,
                     float sigma_proj, std::size_t pair_budget);

struct DistStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // population variance, divided by count
    float min_value = 0.0f;
    float max_value = 0.0f;
    std::array<std::uint64_t, 64> histogram{};  // equal-width bins over [-1, 1]
};

DistStats dist_stats(const ScoreSet& set);

/// Jensen-Shannon divergence between two 64-bin histograms with add-one
/// smoothing, natural log.  Bounded by ln 2.
double jensen_shannon(const std::array<std::uint64_t, 64>& a,
                      const std::array<std::uint64_t, 64>& b);

struct UnlinkabilityReport {
    double mean_gap = 0.0;          // |mean(pseudo-genuine) - mean(pseudo-imposter)|
    double standardized_gap = 0.0;  // mean gap over the pooled standard deviation
    double jsd = 0.0;
    double tau_u = 0.0;  // 95th percentile of bootstrap half-split JSDs
    std::uint32_t bootstrap_iters = 0;
    bool unlinkable = false;  // jsd <= tau_u
};

/// tau_u comes from `iters` seeded half-splits of the pseudo-imposter set.
UnlinkabilityReport unlinkability_report(const ScoreSet& pseudo_genuine,
                                         const ScoreSet& pseudo_imposter,
                                         std::uint64_t bootstrap_seed, std::uint32_t iters = 200);

struct DiversityReport {
    double standardized_gap = 0.0;  // (mean genuine - mean pseudo-genuine), standardized
    double tau_d = 2.0;
    bool diverse = false;  // standardized_gap >= tau_d
};

DiversityReport diversity_report(const ScoreSet& genuine, const ScoreSet& pseudo_genuine);

std::string render_text_report(const ScoreSets& sets, const UnlinkabilityReport& unlink,
                               const DiversityReport& diversity);
std::string render_json_report(const ScoreSets& sets, const UnlinkabilityReport& unlink,
                               const DiversityReport& diversity);
std::string render_histogram_csv(const ScoreSets& sets);

}  // namespace capq
