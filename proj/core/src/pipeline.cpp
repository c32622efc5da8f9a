#include "capq/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <sstream>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "capq/binio.hpp"
#include "capq/cancelable.hpp"
#include "capq/error.hpp"
#include "capq/he_backend.hpp"
#include "capq/pq.hpp"
#include "capq/protocol.hpp"
#include "capq/rng.hpp"

namespace capq {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw_param("config: invalid integer for '" + key + "': '" + value + "'");
    return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
    std::uint64_t v = parse_u64(key, value);
    if (v > 0xFFFFFFFFull)
        throw_param("config: value for '" + key + "' exceeds 32 bits: '" + value + "'");
    return static_cast<std::uint32_t>(v);
}

float parse_f32(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size() || !std::isfinite(out))
        throw_param("config: invalid number for '" + key + "': '" + value + "'");
    return static_cast<float>(out);
}

EmbeddingSet subset_rows(const EmbeddingSet& set, std::span<const std::size_t> rows) {
    std::vector<float> data;
    data.reserve(rows.size() * set.dim());
    std::vector<std::uint32_t> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) {
        auto v = set.vec(r);
        data.insert(data.end(), v.begin(), v.end());
        labels.push_back(set.label(r));
    }
    return EmbeddingSet(set.dim(), std::move(data), std::move(labels));
}

/// Unit-norm pseudo-random vector used by the sizing harness.
std::vector<float> scale_vector(std::uint64_t seed, std::uint32_t index, std::uint32_t dim,
                                std::string_view tag) {
    Rng rng = Rng::derive(seed, index, tag);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.gaussian();
        norm2 += x * x;
    }
    double inv = 1.0 / std::sqrt(norm2);
    std::vector<float> out(dim);
    for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
    return out;
}

/// Store that synthesizes and encrypts records on demand so the sizing
/// harness never materializes the encrypted database.
class LazyScaleStore final : public EncryptedStore {
public:
    LazyScaleStore(HeBackend& backend, PublicKey key, std::uint64_t seed, std::uint32_t dim,
                   std::uint64_t count)
        : backend_(backend), key_(std::move(key)), seed_(seed), dim_(dim), count_(count) {}

    bool contains(std::uint32_t id) const override { return id < count_; }

    CipherVector fetch(std::uint32_t id) const override {
        if (!contains(id)) throw_param("store: no record with id " + std::to_string(id));
        auto v = scale_vector(seed_, id, dim_, "scale-vec");
        return backend_.encrypt(key_, v, Packing::database);
    }

    std::size_t size() const override { return count_; }

private:
    HeBackend& backend_;
    PublicKey key_;
    std::uint64_t seed_;
    std::uint32_t dim_;
    std::uint64_t count_;
};

struct QueryTimings {
    std::vector<double> filter_ms, rerank_ms, total_ms;

    void record(Clock::time_point t0, Clock::time_point t1, Clock::time_point t2) {
        filter_ms.push_back(ms_between(t0, t1));
        rerank_ms.push_back(ms_between(t1, t2));
        total_ms.push_back(ms_between(t0, t2));
    }
};

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void fill_timings(RunMetrics& m, const QueryTimings& t) {
    m.filter_ms = mean_of(t.filter_ms);
    m.rerank_ms = mean_of(t.rerank_ms);
    m.total_ms = mean_of(t.total_ms);
    m.filter_ms_median = median_of(t.filter_ms);
    m.rerank_ms_median = median_of(t.rerank_ms);
    m.total_ms_median = median_of(t.total_ms);
}

}  // namespace

void PipelineConfig::validate() const {
    if (pca_dim == 0) throw_param("pipeline: pca_dim must be positive");
    if (pq_m == 0) throw_param("pipeline: pq_m must be positive");
    if (pq_n == 0 || pq_n > 65535)
        throw_param("pipeline: pq_n must be in [1, 65535], got " + std::to_string(pq_n));
    if (top_k == 0) throw_param("pipeline: top_k must be positive");
    if (!std::isfinite(sigma_proj) || sigma_proj < 0.0f)
        throw_param("pipeline: sigma_proj must be finite and non-negative");
    if (backend.empty()) throw_param("pipeline: backend name must not be empty");
    if (runs == 0) throw_param("pipeline: runs must be positive");
    if (data_file.empty()) {
        if (synthetic.identities == 0 || synthetic.samples_per_identity == 0)
            throw_param("pipeline: synthetic identities and samples must be positive");
        if (synthetic.dim == 0) throw_param("pipeline: synthetic dim must be positive");
        if (!std::isfinite(synthetic.noise) || synthetic.noise < 0.0f)
            throw_param("pipeline: synthetic noise must be finite and non-negative");
    }
}

void apply_config_override(PipelineConfig& cfg, const std::string& key,
                           const std::string& value) {
    if (key == "data") {
        cfg.data_file = value;
    } else if (key == "identities") {
        cfg.synthetic.identities = parse_u32(key, value);
    } else if (key == "samples") {
        cfg.synthetic.samples_per_identity = parse_u32(key, value);
    } else if (key == "dim") {
        cfg.synthetic.dim = parse_u32(key, value);
    } else if (key == "noise") {
        cfg.synthetic.noise = parse_f32(key, value);
    } else if (key == "pca_dim") {
        cfg.pca_dim = parse_u32(key, value);
    } else if (key == "pq_m") {
        cfg.pq_m = parse_u32(key, value);
    } else if (key == "pq_n") {
        cfg.pq_n = parse_u32(key, value);
    } else if (key == "top_k") {
        cfg.top_k = parse_u32(key, value);
    } else if (key == "sigma_proj") {
        cfg.sigma_proj = parse_f32(key, value);
    } else if (key == "backend") {
        cfg.backend = value;
    } else if (key == "runs") {
        cfg.runs = parse_u32(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "max_queries") {
        cfg.max_queries = parse_u32(key, value);
    } else {
        throw_param("config: unknown key '" + key + "'");
    }
}

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw_param("config: line " + std::to_string(lineno) +
                        " is not of the form key=value: '" + t + "'");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty())
            throw_param("config: line " + std::to_string(lineno) + " has an empty key");
        apply_config_override(cfg, key, value);
    }
    return cfg;
}

PipelineConfig parse_config_file(const std::filesystem::path& path) {
    auto bytes = load_file(path);
    return parse_config_text(std::string(bytes.begin(), bytes.end()));
}

double recall_at_1(std::span<const std::uint32_t> predicted,
                   std::span<const std::uint32_t> truth) {
    if (predicted.size() != truth.size())
        throw_param("recall: prediction and truth counts differ (" +
                    std::to_string(predicted.size()) + " vs " + std::to_string(truth.size()) +
                    ")");
    if (predicted.empty()) throw_param("recall: empty prediction set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

BenchReport run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();

    EmbeddingSet raw = [&] {
        if (!cfg.data_file.empty()) return load_evec(cfg.data_file);
        SyntheticSpec spec;
        spec.n_identities = cfg.synthetic.identities;
        spec.samples_per_identity = cfg.synthetic.samples_per_identity;
        spec.dim = cfg.synthetic.dim;
        spec.intra_class_noise = cfg.synthetic.noise;
        spec.seed = Rng::derive_seed(cfg.seed, 0, "data");
        return gen_synthetic(spec);
    }();
    if (!raw.has_labels())
        throw_data("pipeline: embeddings carry no identity labels, recall is undefined");

    // Hold out the first sample of every identity that has at least two;
    // singletons stay in the database.
    std::map<std::uint32_t, std::size_t> label_count;
    for (std::size_t i = 0; i < raw.count(); ++i) ++label_count[raw.label(i)];
    std::vector<std::size_t> query_rows, db_rows;
    std::map<std::uint32_t, bool> held;
    for (std::size_t i = 0; i < raw.count(); ++i) {
        std::uint32_t lab = raw.label(i);
        if (label_count[lab] >= 2 && !held[lab]) {
            held[lab] = true;
            query_rows.push_back(i);
        } else {
            db_rows.push_back(i);
        }
    }
    if (query_rows.empty())
        throw_data("pipeline: no identity has at least two samples, nothing to query");
    if (db_rows.empty()) throw_data("pipeline: database split is empty");
    if (cfg.max_queries != 0 && query_rows.size() > cfg.max_queries)
        query_rows.resize(cfg.max_queries);

    EmbeddingSet db_raw = subset_rows(raw, db_rows);
    EmbeddingSet q_raw = subset_rows(raw, query_rows);

    if (cfg.pca_dim > raw.dim())
        throw_param("pipeline: pca_dim " + std::to_string(cfg.pca_dim) +
                    " exceeds the data dimension " + std::to_string(raw.dim()));
    auto [db, queries] = [&]() -> std::pair<EmbeddingSet, EmbeddingSet> {
        if (cfg.pca_dim == raw.dim()) return {l2_normalize(db_raw), l2_normalize(q_raw)};
        PcaModel model = fit_pca(db_raw, cfg.pca_dim);
        return {l2_normalize(apply_pca(model, db_raw)), l2_normalize(apply_pca(model, q_raw))};
    }();

    const std::uint32_t dim = static_cast<std::uint32_t>(db.dim());
    if (dim % cfg.pq_m != 0)
        throw_param("pipeline: dimension " + std::to_string(dim) +
                    " is not divisible by pq_m " + std::to_string(cfg.pq_m));

    BenchReport report;
    report.config = cfg;
    report.mode = "retrieval";
    report.database_size = db.count();
    report.query_dim = dim;

    double sum_coarse = 0.0, sum_rerank = 0.0;
    double sum_filter_ms = 0.0, sum_rerank_ms = 0.0, sum_total_ms = 0.0;
    std::uint64_t sum_ip = 0, sum_queries = 0;

    for (std::uint32_t r = 0; r < cfg.runs; ++r) {
        std::uint64_t run_seed = Rng::derive_seed(cfg.seed, r, "run");
        std::uint64_t fit_seed = Rng::derive_seed(run_seed, 0, "fit");
        std::uint64_t key_seed = Rng::derive_seed(run_seed, 1, "key");
        std::uint64_t he_seed = Rng::derive_seed(run_seed, 2, "he");

        PqCodebook codebook = train_codebook(db, cfg.pq_m, cfg.pq_n, fit_seed);
        DistanceTable table = build_distance_table(codebook);
        CancelKey key = keygen(key_seed, cfg.pq_m, cfg.pq_n, dim / cfg.pq_m, cfg.sigma_proj);
        ProtectedCodebook pcb = protect(codebook, table, key);
        ProtectedIndex pidx = build_protected_index(db, pcb, key);

        auto backend = make_backend(cfg.backend);
        if (backend->capabilities().max_dim < dim)
            throw_param("pipeline: backend '" + cfg.backend + "' supports dimensions up to " +
                        std::to_string(backend->capabilities().max_dim) + ", need " +
                        std::to_string(dim));
        HeKeySet he_keys = backend->keygen(he_seed, dim);

        MapStore store;
        for (std::size_t i = 0; i < db.count(); ++i)
            store.put(static_cast<std::uint32_t>(i),
                      backend->encrypt(he_keys.public_key, db.vec(i), Packing::database));
        backend->reset_counts();

        QuContext qu{backend.get(), he_keys.public_key};
        IoContext io{backend.get(), he_keys.secret_key};
        CspContext csp{backend.get(), he_keys.eval_key, &store};

        std::vector<std::uint32_t> coarse_pred, rerank_pred, truth;
        QueryTimings t;
        for (std::size_t qi = 0; qi < queries.count(); ++qi) {
            auto t0 = Clock::now();
            PqCode code = secure_quantize(pcb, key, queries.vec(qi));
            CandidateList cand = cancelable_topk(pidx, code, cfg.top_k);
            auto t1 = Clock::now();
            RerankResult res = rerank(qu, io, csp, queries.vec(qi), cand.ids);
            auto t2 = Clock::now();
            if (res.ranked.empty()) throw_state("pipeline: re-ranking returned no results");
            coarse_pred.push_back(db.label(cand.ids[0]));
            rerank_pred.push_back(db.label(res.ranked[0].id));
            truth.push_back(queries.label(qi));
            t.record(t0, t1, t2);
        }

        RunMetrics m;
        m.run_seed = run_seed;
        m.queries = static_cast<std::uint32_t>(queries.count());
        m.coarse_recall = recall_at_1(coarse_pred, truth);
        m.rerank_recall = recall_at_1(rerank_pred, truth);
        fill_timings(m, t);
        m.he_encryptions = backend->counts().encryptions;
        m.he_inner_products = backend->counts().inner_products;
        m.he_decryptions = backend->counts().decryptions;
        report.runs.push_back(m);

        sum_coarse += m.coarse_recall;
        sum_rerank += m.rerank_recall;
        sum_filter_ms += m.filter_ms;
        sum_rerank_ms += m.rerank_ms;
        sum_total_ms += m.total_ms;
        sum_ip += m.he_inner_products;
        sum_queries += m.queries;
    }

    report.coarse_recall = sum_coarse / cfg.runs;
    report.rerank_recall = sum_rerank / cfg.runs;
    report.filter_ms = sum_filter_ms / cfg.runs;
    report.rerank_ms = sum_rerank_ms / cfg.runs;
    report.total_ms = sum_total_ms / cfg.runs;
    report.he_inner_products_per_query =
        static_cast<double>(sum_ip) / static_cast<double>(sum_queries);
    return report;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "top_k" || name == "k" || name == "K") return SweepAxis::top_k;
    if (name == "pq_m" || name == "m" || name == "M") return SweepAxis::pq_m;
    if (name == "sigma_proj" || name == "sigma") return SweepAxis::sigma_proj;
    if (name == "scale" || name == "n" || name == "N") return SweepAxis::scale;
    throw_param("sweep: unknown axis '" + name + "' (expected top_k, pq_m, sigma_proj or scale)");
}

namespace {

std::uint64_t sweep_integer(double v, const char* what, std::uint64_t max) {
    if (!std::isfinite(v) || v < 1.0 || v != std::floor(v) || v > static_cast<double>(max))
        throw_param(std::string("sweep: ") + what + " value must be a positive integer, got " +
                    std::to_string(v));
    return static_cast<std::uint64_t>(v);
}

/// One fixed-seed sizing run: the quantizer is trained once on a dummy
/// sample independent of N, so filter timings across sizes are comparable.
BenchReport run_scale_point(const PipelineConfig& base, const PqCodebook& codebook,
                            const DistanceTable& table, const CancelKey& key,
                            std::uint64_t n_records) {
    const std::uint32_t dim = codebook.dim();
    ProtectedCodebook pcb = protect(codebook, table, key);
    ProtectedIndex pidx(pcb);
    if (n_records > 0xFFFFFFFFull)
        throw_param("sweep: scale value exceeds the 32-bit record id space");
    std::uint64_t data_seed = Rng::derive_seed(base.seed, 1, "scale-data");
    for (std::uint64_t i = 0; i < n_records; ++i) {
        auto v = scale_vector(data_seed, static_cast<std::uint32_t>(i), dim, "scale-vec");
        PqCode code = secure_quantize(pcb, key, v);
        pidx.add_code(code, static_cast<std::uint32_t>(i));
    }

    auto backend = make_backend(base.backend);
    if (backend->capabilities().max_dim < dim)
        throw_param("sweep: backend '" + base.backend + "' supports dimensions up to " +
                    std::to_string(backend->capabilities().max_dim) + ", need " +
                    std::to_string(dim));
    std::uint64_t he_seed = Rng::derive_seed(base.seed, 2, "scale-he");
    HeKeySet he_keys = backend->keygen(he_seed, dim);
    LazyScaleStore store(*backend, he_keys.public_key, data_seed, dim, n_records);
    backend->reset_counts();

    QuContext qu{backend.get(), he_keys.public_key};
    IoContext io{backend.get(), he_keys.secret_key};
    CspContext csp{backend.get(), he_keys.eval_key, &store};

    constexpr std::uint32_t kScaleQueries = 16;
    std::uint64_t query_seed = Rng::derive_seed(base.seed, 3, "scale-query");
    QueryTimings t;
    for (std::uint32_t qi = 0; qi < kScaleQueries; ++qi) {
        auto v = scale_vector(query_seed, qi, dim, "scale-query-vec");
        auto t0 = Clock::now();
        PqCode code = secure_quantize(pcb, key, v);
        CandidateList cand = cancelable_topk(pidx, code, base.top_k);
        auto t1 = Clock::now();
        RerankResult res = rerank(qu, io, csp, v, cand.ids);
        auto t2 = Clock::now();
        if (res.ranked.empty()) throw_state("sweep: re-ranking returned no results");
        t.record(t0, t1, t2);
    }

    BenchReport report;
    report.config = base;
    report.mode = "scale";
    report.database_size = n_records;
    report.query_dim = dim;

    RunMetrics m;
    m.run_seed = base.seed;
    m.queries = kScaleQueries;
    fill_timings(m, t);
    m.he_encryptions = backend->counts().encryptions;
    m.he_inner_products = backend->counts().inner_products;
    m.he_decryptions = backend->counts().decryptions;
    report.runs.push_back(m);

    report.filter_ms = m.filter_ms;
    report.rerank_ms = m.rerank_ms;
    report.total_ms = m.total_ms;
    report.he_inner_products_per_query =
        static_cast<double>(m.he_inner_products) / kScaleQueries;
    return report;
}

}  // namespace

std::vector<BenchReport> run_sweep(const PipelineConfig& base, SweepAxis axis,
                                   std::span<const double> values) {
    base.validate();
    std::vector<BenchReport> reports;
    reports.reserve(values.size());

    if (axis == SweepAxis::scale) {
        const std::uint32_t dim = base.pca_dim;
        if (dim % base.pq_m != 0)
            throw_param("sweep: dimension " + std::to_string(dim) +
                        " is not divisible by pq_m " + std::to_string(base.pq_m));
        // Training sample independent of N so every size shares one quantizer.
        constexpr std::uint32_t kTrainRows = 8192;
        std::uint64_t train_seed = Rng::derive_seed(base.seed, 0, "scale-train");
        std::vector<float> data;
        data.reserve(std::size_t(kTrainRows) * dim);
        for (std::uint32_t i = 0; i < kTrainRows; ++i) {
            auto v = scale_vector(train_seed, i, dim, "scale-train-vec");
            data.insert(data.end(), v.begin(), v.end());
        }
        EmbeddingSet train(dim, std::move(data));
        PqCodebook codebook =
            train_codebook(train, base.pq_m, base.pq_n,
                           Rng::derive_seed(base.seed, 4, "scale-fit"));
        DistanceTable table = build_distance_table(codebook);
        CancelKey key = keygen(Rng::derive_seed(base.seed, 5, "scale-key"), base.pq_m,
                               base.pq_n, dim / base.pq_m, base.sigma_proj);
        for (double v : values)
            reports.push_back(
                run_scale_point(base, codebook, table, key, sweep_integer(v, "scale", ~0u)));
        return reports;
    }

    for (double v : values) {
        PipelineConfig cfg = base;
        switch (axis) {
            case SweepAxis::top_k:
                cfg.top_k = static_cast<std::uint32_t>(sweep_integer(v, "top_k", 0xFFFFFFFFull));
                break;
            case SweepAxis::pq_m:
                cfg.pq_m = static_cast<std::uint32_t>(sweep_integer(v, "pq_m", 0xFFFFFFFFull));
                break;
            case SweepAxis::sigma_proj:
                if (!std::isfinite(v) || v < 0.0)
                    throw_param("sweep: sigma_proj value must be finite and non-negative");
                cfg.sigma_proj = static_cast<float>(v);
                break;
            case SweepAxis::scale:
                break;  // handled above
        }
        reports.push_back(run_pipeline(cfg));
    }
    return reports;
}

namespace {

std::string format_ms(double ms) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f ms", ms);
    return buf;
}

std::string method_label(const BenchReport& r) {
    std::ostringstream os;
    os << "cancelable-pq+" << r.config.backend << " K=" << r.config.top_k << " m="
       << r.config.pq_m << " sigma=" << r.config.sigma_proj;
    if (r.mode == "scale") os << " N=" << r.database_size;
    return os.str();
}

}  // namespace

std::string render_sweep_table(std::span<const BenchReport> reports) {
    std::vector<std::array<std::string, 4>> rows;
    rows.push_back({"Method", "Dim", "ACC", "Time"});
    for (const auto& r : reports) {
        std::string acc = "n/a";
        if (r.mode == "retrieval") {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f%%", r.rerank_recall * 100.0);
            acc = buf;
        }
        rows.push_back(
            {method_label(r), std::to_string(r.query_dim), acc, format_ms(r.total_ms)});
    }

    std::array<std::size_t, 4> width{};
    for (const auto& row : rows)
        for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());

    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < 4; ++c) {
            os << rows[i][c] << std::string(width[c] - rows[i][c].size(), ' ');
            os << (c + 1 < 4 ? " | " : "\n");
        }
        if (i == 0) {
            for (std::size_t c = 0; c < 4; ++c) {
                os << std::string(width[c], '-') << (c + 1 < 4 ? "-+-" : "\n");
            }
        }
    }
    return os.str();
}

std::string render_report_text(const BenchReport& r) {
    std::ostringstream os;
    os << "mode:            " << r.mode << "\n";
    os << "backend:         " << r.config.backend << "\n";
    os << "database size:   " << r.database_size << "\n";
    os << "query dim:       " << r.query_dim << "\n";
    os << "top K:           " << r.config.top_k << "\n";
    os << "pq m/n:          " << r.config.pq_m << "/" << r.config.pq_n << "\n";
    os << "sigma_proj:      " << r.config.sigma_proj << "\n";
    if (r.mode == "retrieval") {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", r.coarse_recall);
        os << "coarse recall@1: " << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.4f", r.rerank_recall);
        os << "rerank recall@1: " << buf << "\n";
    }
    os << "filter time:     " << format_ms(r.filter_ms) << "/query\n";
    os << "rerank time:     " << format_ms(r.rerank_ms) << "/query\n";
    os << "total time:      " << format_ms(r.total_ms) << "/query\n";
    os << "HE inner products/query: " << r.he_inner_products_per_query << "\n";
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const RunMetrics& m = r.runs[i];
        os << "run " << i << ": seed=" << m.run_seed << " queries=" << m.queries;
        if (r.mode == "retrieval") {
            char buf[64];
            std::snprintf(buf, sizeof buf, " coarse=%.4f rerank=%.4f", m.coarse_recall,
                          m.rerank_recall);
            os << buf;
        }
        os << " filter=" << format_ms(m.filter_ms) << " rerank=" << format_ms(m.rerank_ms)
           << " median=" << format_ms(m.total_ms_median) << " ops=" << m.he_encryptions << "/"
           << m.he_inner_products << "/" << m.he_decryptions << "\n";
    }
    return os.str();
}

std::string report_to_json(const BenchReport& r) {
    nlohmann::json j;
    nlohmann::json jc;
    jc["data_file"] = r.config.data_file.string();
    jc["identities"] = r.config.synthetic.identities;
    jc["samples_per_identity"] = r.config.synthetic.samples_per_identity;
    jc["dim"] = r.config.synthetic.dim;
    jc["noise"] = r.config.synthetic.noise;
    jc["pca_dim"] = r.config.pca_dim;
    jc["pq_m"] = r.config.pq_m;
    jc["pq_n"] = r.config.pq_n;
    jc["top_k"] = r.config.top_k;
    jc["sigma_proj"] = r.config.sigma_proj;
    jc["backend"] = r.config.backend;
    jc["runs"] = r.config.runs;
    jc["seed"] = r.config.seed;
    jc["max_queries"] = r.config.max_queries;
    j["config"] = jc;
    j["mode"] = r.mode;
    j["database_size"] = r.database_size;
    j["query_dim"] = r.query_dim;
    nlohmann::json jruns = nlohmann::json::array();
    for (const RunMetrics& m : r.runs) {
        nlohmann::json jm;
        jm["run_seed"] = m.run_seed;
        jm["queries"] = m.queries;
        jm["coarse_recall"] = m.coarse_recall;
        jm["rerank_recall"] = m.rerank_recall;
        jm["filter_ms"] = m.filter_ms;
        jm["rerank_ms"] = m.rerank_ms;
        jm["total_ms"] = m.total_ms;
        jm["filter_ms_median"] = m.filter_ms_median;
        jm["rerank_ms_median"] = m.rerank_ms_median;
        jm["total_ms_median"] = m.total_ms_median;
        jm["he_encryptions"] = m.he_encryptions;
        jm["he_inner_products"] = m.he_inner_products;
        jm["he_decryptions"] = m.he_decryptions;
        jruns.push_back(std::move(jm));
    }
    j["runs"] = std::move(jruns);
    j["coarse_recall"] = r.coarse_recall;
    j["rerank_recall"] = r.rerank_recall;
    j["filter_ms"] = r.filter_ms;
    j["rerank_ms"] = r.rerank_ms;
    j["total_ms"] = r.total_ms;
    j["he_inner_products_per_query"] = r.he_inner_products_per_query;
    return j.dump(2) + "\n";
}

BenchReport report_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        BenchReport r;
        const auto& jc = j.at("config");
        r.config.data_file = jc.at("data_file").get<std::string>();
        r.config.synthetic.identities = jc.at("identities").get<std::uint32_t>();
        r.config.synthetic.samples_per_identity =
            jc.at("samples_per_identity").get<std::uint32_t>();
        r.config.synthetic.dim = jc.at("dim").get<std::uint32_t>();
        r.config.synthetic.noise = jc.at("noise").get<float>();
        r.config.pca_dim = jc.at("pca_dim").get<std::uint32_t>();
        r.config.pq_m = jc.at("pq_m").get<std::uint32_t>();
        r.config.pq_n = jc.at("pq_n").get<std::uint32_t>();
        r.config.top_k = jc.at("top_k").get<std::uint32_t>();
        r.config.sigma_proj = jc.at("sigma_proj").get<float>();
        r.config.backend = jc.at("backend").get<std::string>();
        r.config.runs = jc.at("runs").get<std::uint32_t>();
        r.config.seed = jc.at("seed").get<std::uint64_t>();
        r.config.max_queries = jc.at("max_queries").get<std::uint32_t>();
        r.mode = j.at("mode").get<std::string>();
        r.database_size = j.at("database_size").get<std::uint64_t>();
        r.query_dim = j.at("query_dim").get<std::uint32_t>();
        for (const auto& jm : j.at("runs")) {
            RunMetrics m;
            m.run_seed = jm.at("run_seed").get<std::uint64_t>();
            m.queries = jm.at("queries").get<std::uint32_t>();
            m.coarse_recall = jm.at("coarse_recall").get<double>();
            m.rerank_recall = jm.at("rerank_recall").get<double>();
            m.filter_ms = jm.at("filter_ms").get<double>();
            m.rerank_ms = jm.at("rerank_ms").get<double>();
            m.total_ms = jm.at("total_ms").get<double>();
            m.filter_ms_median = jm.at("filter_ms_median").get<double>();
            m.rerank_ms_median = jm.at("rerank_ms_median").get<double>();
            m.total_ms_median = jm.at("total_ms_median").get<double>();
            m.he_encryptions = jm.at("he_encryptions").get<std::uint64_t>();
            m.he_inner_products = jm.at("he_inner_products").get<std::uint64_t>();
            m.he_decryptions = jm.at("he_decryptions").get<std::uint64_t>();
            r.runs.push_back(m);
        }
        r.coarse_recall = j.at("coarse_recall").get<double>();
        r.rerank_recall = j.at("rerank_recall").get<double>();
        r.filter_ms = j.at("filter_ms").get<double>();
        r.rerank_ms = j.at("rerank_ms").get<double>();
        r.total_ms = j.at("total_ms").get<double>();
        r.he_inner_products_per_query = j.at("he_inner_products_per_query").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("report: malformed JSON: ") + e.what());
    }
}

}  // namespace capq
