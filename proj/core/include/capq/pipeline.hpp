#pragma once

// End-to-end retrieval pipeline: data preparation, index construction,
// protected coarse filtering, encrypted re-ranking, and timing/recall
// measurement.  Also hosts the scaling harness used to benchmark filter
// cost against database size.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capq/embedding.hpp"

namespace capq {

struct SyntheticDataConfig {
    std::uint32_t identities = 500;
    std::uint32_t samples_per_identity = 20;
    std::uint32_t dim = 512;
    float noise = 0.08f;

    bool operator==(const SyntheticDataConfig&) const = default;
};

struct PipelineConfig {
    // Empty path means synthetic data.
    std::filesystem::path data_file;
    SyntheticDataConfig synthetic;

    std::uint32_t pca_dim = 128;
    std::uint32_t pq_m = 64;
    std::uint32_t pq_n = 64;
    std::uint32_t top_k = 5;
    float sigma_proj = 2e-3f;
    std::string backend = "sim";
    std::uint32_t runs = 5;
    std::uint64_t seed = 1;
    // 0 means evaluate every held-out query.
    std::uint32_t max_queries = 0;

    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

// Flat key=value configuration text; '#' starts a comment, blank lines skipped.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig parse_config_file(const std::filesystem::path& path);
// Applies one key=value override; unknown keys are parameter errors.
void apply_config_override(PipelineConfig& cfg, const std::string& key,
                           const std::string& value);

struct RunMetrics {
    std::uint64_t run_seed = 0;
    std::uint32_t queries = 0;
    double coarse_recall = 0.0;
    double rerank_recall = 0.0;
    // Per-query wall time, milliseconds.
    double filter_ms = 0.0;
    double rerank_ms = 0.0;
    double total_ms = 0.0;
    double filter_ms_median = 0.0;
    double rerank_ms_median = 0.0;
    double total_ms_median = 0.0;
    std::uint64_t he_encryptions = 0;
    std::uint64_t he_inner_products = 0;
    std::uint64_t he_decryptions = 0;

    bool operator==(const RunMetrics&) const = default;
};

struct BenchReport {
    PipelineConfig config;
    // "retrieval" for labeled-recall runs, "scale" for the sizing harness.
    std::string mode = "retrieval";
    std::uint64_t database_size = 0;
    std::uint32_t query_dim = 0;
    std::vector<RunMetrics> runs;
    // Aggregates over runs.
    double coarse_recall = 0.0;
    double rerank_recall = 0.0;
    double filter_ms = 0.0;
    double rerank_ms = 0.0;
    double total_ms = 0.0;
    double he_inner_products_per_query = 0.0;

    bool operator==(const BenchReport&) const = default;
};

// Runs the full retrieval pipeline: hold out the first sample of every
// identity as queries, fit PCA and the quantizer on the rest, protect the
// index under a fresh key per run, then answer each query with the coarse
// filter followed by encrypted re-ranking.
BenchReport run_pipeline(const PipelineConfig& cfg);

// Fraction of rows where the predicted label matches the true label.
double recall_at_1(std::span<const std::uint32_t> predicted,
                   std::span<const std::uint32_t> truth);

enum class SweepAxis { top_k, pq_m, sigma_proj, scale };

SweepAxis parse_sweep_axis(const std::string& name);

// One report per value.  For the scale axis the value is the database size
// and the run uses unlabeled synthetic vectors generated at query_dim
// directly, with encrypted records materialized lazily at fetch time.
std::vector<BenchReport> run_sweep(const PipelineConfig& base, SweepAxis axis,
                                   std::span<const double> values);

// Accuracy/latency table, one row per report; renders the header alone when
// the list is empty.
std::string render_sweep_table(std::span<const BenchReport> reports);

std::string render_report_text(const BenchReport& report);
std::string report_to_json(const BenchReport& report);
BenchReport report_from_json(const std::string& text);

}  // namespace capq
