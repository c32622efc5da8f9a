// Command-line front end for the secure retrieval engine.
//
// Subcommands cover the whole artifact lifecycle: synthetic data generation,
// PCA + quantizer fitting, key generation and index protection, coarse
// querying, encrypted re-ranking, security evaluation, benchmarking,
// parameter sweeps and key revocation.
//
// Exit codes: 0 success, 2 parameter error, 3 data/format error,
// 4 key/authorization error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "capq/cancelable.hpp"
#include "capq/digest.hpp"
#include "capq/embedding.hpp"
#include "capq/error.hpp"
#include "capq/he_backend.hpp"
#include "capq/pipeline.hpp"
#include "capq/pq.hpp"
#include "capq/protocol.hpp"
#include "capq/rng.hpp"
#include "capq/sec_eval.hpp"

namespace fs = std::filesystem;
using namespace capq;

namespace {

int exit_code(errc code) {
    switch (code) {
        case errc::bad_data: return 3;
        case errc::key_mismatch: return 4;
        case errc::invalid_parameter:
        case errc::invalid_state: return 2;
    }
    return 2;
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_param("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw_param("short write to '" + path.string() + "'");
}

bool path_inside(const fs::path& p, const fs::path& dir) {
    auto norm = [](const fs::path& x) {
        fs::path c = fs::weakly_canonical(fs::absolute(x)).lexically_normal();
        if (c.filename().empty()) c = c.parent_path();
        return c;
    };
    fs::path cp = norm(p), cd = norm(dir);
    auto mm = std::mismatch(cd.begin(), cd.end(), cp.begin(), cp.end());
    return mm.first == cd.end();
}

// Keys are secret material and must not travel with the index artifacts.
void refuse_key_in_out(const fs::path& key_path, const fs::path& out_dir) {
    if (path_inside(key_path, out_dir))
        throw_param("refusing to write the key file '" + key_path.string() +
                    "' inside the index output directory '" + out_dir.string() + "'");
}

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
            throw_param("invalid sweep value '" + tok + "'");
        values.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (values.empty()) throw_param("sweep value list is empty");
    return values;
}

std::string hex_key_id(const KeyId& id) {
    return to_hex(std::span<const std::uint8_t>(id.data(), id.size()));
}

// Reduces and renormalizes rows when a projection model is supplied;
// otherwise the vectors are used as-is.
EmbeddingSet prepare_vectors(const fs::path& evec, const std::string& pca_path) {
    EmbeddingSet set = load_evec(evec);
    if (!pca_path.empty()) {
        PcaModel model = load_pca(pca_path);
        return l2_normalize(apply_pca(model, set));
    }
    return l2_normalize(set);
}

struct SyntheticFlags {
    std::uint32_t identities = 500;
    std::uint32_t samples = 20;
    std::uint32_t dim = 512;
    float noise = 0.08f;

    void attach(CLI::App* cmd) {
        cmd->add_option("--identities", identities, "Number of synthetic identities");
        cmd->add_option("--samples", samples, "Samples per identity");
        cmd->add_option("--dim", dim, "Embedding dimension");
        cmd->add_option("--noise", noise, "Intra-identity noise level");
    }

    EmbeddingSet generate(std::uint64_t seed) const {
        SyntheticSpec spec;
        spec.n_identities = identities;
        spec.samples_per_identity = samples;
        spec.dim = dim;
        spec.intra_class_noise = noise;
        spec.seed = seed;
        return gen_synthetic(spec);
    }
};

// Config file plus per-flag overrides shared by bench and sweep.
struct BenchFlags {
    std::string config_path;
    std::vector<std::pair<std::string, CLI::Option*>> overrides;
    std::vector<std::string> values;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Flat key=value configuration file");
        values.resize(14);
        auto opt = [&](const char* flag, const char* key, std::size_t slot, const char* help) {
            overrides.emplace_back(key, cmd->add_option(flag, values[slot], help));
        };
        opt("--data", "data", 0, "EVEC input (empty: synthetic data)");
        opt("--identities", "identities", 1, "Synthetic identities");
        opt("--samples", "samples", 2, "Synthetic samples per identity");
        opt("--dim", "dim", 3, "Synthetic embedding dimension");
        opt("--noise", "noise", 4, "Synthetic intra-identity noise");
        opt("--pca-dim", "pca_dim", 5, "Reduced dimension");
        opt("--pq-m", "pq_m", 6, "Quantizer subspaces");
        opt("--pq-n", "pq_n", 7, "Centroids per subspace");
        opt("--top-k", "top_k", 8, "Coarse candidate count");
        opt("--sigma", "sigma_proj", 9, "Projection noise level");
        opt("--backend", "backend", 10, "Re-ranking backend (sim or ckks_lite)");
        opt("--runs", "runs", 11, "Independent runs");
        opt("--seed", "seed", 12, "Master seed");
        opt("--max-queries", "max_queries", 13, "Cap on evaluated queries (0: all)");
    }

    PipelineConfig build() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = parse_config_file(config_path);
        for (std::size_t i = 0; i < overrides.size(); ++i)
            if (overrides[i].second->count() > 0)
                apply_config_override(cfg, overrides[i].first, values[i]);
        return cfg;
    }
};

int cmd_gen_data(const SyntheticFlags& syn, std::uint64_t seed, const std::string& out) {
    EmbeddingSet set = syn.generate(seed);
    write_evec(set, out);
    std::cout << "wrote " << set.count() << " vectors of dimension " << set.dim() << " to "
              << out << "\n";
    return 0;
}

int cmd_fit(const std::string& data, std::uint32_t pca_dim, std::uint32_t pq_m,
            std::uint32_t pq_n, std::uint64_t seed, const std::string& out) {
    EmbeddingSet raw = load_evec(data);
    fs::create_directories(out);
    fs::path out_dir(out);

    EmbeddingSet reduced = [&] {
        if (pca_dim == raw.dim()) return l2_normalize(raw);
        PcaModel model = fit_pca(raw, pca_dim);
        write_pca(model, out_dir / "pca.pcam");
        return l2_normalize(apply_pca(model, raw));
    }();

    PqCodebook codebook = train_codebook(reduced, pq_m, pq_n, seed);
    DistanceTable table = build_distance_table(codebook);
    write_codebook(codebook, out_dir / "codebook.pqcb");
    write_distance_table(table, out_dir / "table.pqdt");
    write_evec(reduced, out_dir / "reduced.evec");

    std::cout << "fitted quantizer: m=" << codebook.m << " n=" << codebook.n
              << " d_sub=" << codebook.d_sub << "\n";
    std::cout << "artifacts in " << out_dir.string() << ": ";
    if (pca_dim != raw.dim()) std::cout << "pca.pcam ";
    std::cout << "codebook.pqcb table.pqdt reduced.evec\n";
    return 0;
}

int cmd_protect(const std::string& codebook_path, const std::string& table_path,
                const std::string& data, const std::string& key_out, float sigma,
                std::uint64_t seed, bool use_labels, const std::string& out) {
    refuse_key_in_out(key_out, out);
    PqCodebook codebook = load_codebook(codebook_path);
    DistanceTable table = load_distance_table(table_path);
    EmbeddingSet set = load_evec(data);

    CancelKey key = keygen(seed, codebook.m, codebook.n, codebook.d_sub, sigma);
    ProtectedCodebook pcb = protect(codebook, table, key);
    ProtectedIndex index = build_protected_index(set, pcb, key, use_labels);

    fs::create_directories(out);
    ensure_parent(key_out);
    write_key(key, key_out);
    write_protected_index(index, fs::path(out) / "index.cpqi");

    std::cout << "key id " << hex_key_id(key.key_id) << ", protected " << index.size()
              << " records\n";
    std::cout << "key: " << key_out << "\nindex: " << (fs::path(out) / "index.cpqi").string()
              << "\n";
    return 0;
}

void write_candidates(std::ostream& os, std::size_t query, const CandidateList& cand) {
    char buf[64];
    for (std::size_t r = 0; r < cand.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.9g", cand.distances[r]);
        os << query << "," << r << "," << cand.ids[r] << "," << buf << "\n";
    }
}

int cmd_query(const std::string& index_path, const std::string& key_path,
              const std::string& queries_path, const std::string& pca_path,
              std::uint32_t top_k, const std::string& out) {
    ProtectedIndex index = load_protected_index(index_path);
    CancelKey key = load_key(key_path);
    EmbeddingSet queries = prepare_vectors(queries_path, pca_path);

    std::ostringstream os;
    os << "query,rank,id,distance\n";
    for (std::size_t q = 0; q < queries.count(); ++q) {
        PqCode code = secure_quantize(index.pcb(), key, queries.vec(q));
        CandidateList cand = cancelable_topk(index, code, top_k);
        write_candidates(os, q, cand);
    }
    if (out.empty())
        std::cout << os.str();
    else {
        write_text(out, os.str());
        std::cout << "wrote " << queries.count() << " query results to " << out << "\n";
    }
    return 0;
}

int cmd_rerank(const std::string& index_path, const std::string& key_path,
               const std::string& db_path, const std::string& queries_path,
               const std::string& pca_path, std::uint32_t top_k, const std::string& backend_name,
               std::uint64_t seed, const std::string& transcript_path, const std::string& out) {
    ProtectedIndex index = load_protected_index(index_path);
    CancelKey key = load_key(key_path);
    EmbeddingSet db = prepare_vectors(db_path, pca_path);
    EmbeddingSet queries = prepare_vectors(queries_path, pca_path);

    auto backend = make_backend(backend_name);
    HeKeySet he_keys = backend->keygen(Rng::derive_seed(seed, 0, "he"),
                                       static_cast<std::uint32_t>(db.dim()));
    MapStore store;
    for (std::size_t i = 0; i < db.count(); ++i)
        store.put(static_cast<std::uint32_t>(i),
                  backend->encrypt(he_keys.public_key, db.vec(i), Packing::database));

    QuContext qu{backend.get(), he_keys.public_key};
    IoContext io{backend.get(), he_keys.secret_key};
    CspContext csp{backend.get(), he_keys.eval_key, &store};
    Transcript transcript;
    Transcript* tp = transcript_path.empty() ? nullptr : &transcript;

    std::ostringstream os;
    os << "query,rank,id,score\n";
    char buf[64];
    for (std::size_t q = 0; q < queries.count(); ++q) {
        PqCode code = secure_quantize(index.pcb(), key, queries.vec(q));
        CandidateList cand = cancelable_topk(index, code, top_k);
        RerankResult res = rerank(qu, io, csp, queries.vec(q), cand.ids, tp);
        for (std::size_t r = 0; r < res.ranked.size(); ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", res.ranked[r].score);
            os << q << "," << r << "," << res.ranked[r].id << "," << buf << "\n";
        }
    }
    if (tp) {
        ensure_parent(transcript_path);
        transcript.save(transcript_path);
    }
    if (out.empty())
        std::cout << os.str();
    else {
        write_text(out, os.str());
        std::cout << "wrote " << queries.count() << " re-ranked results to " << out << "\n";
    }
    if (tp)
        std::cout << "transcript with " << transcript.messages().size() << " messages in "
                  << transcript_path << "\n";
    return 0;
}

int cmd_eval_security(const std::string& data, const SyntheticFlags& syn,
                      const std::string& pca_path, std::uint32_t pca_dim, std::uint32_t pq_m,
                      std::uint32_t pq_n, float sigma, std::uint32_t n_keys,
                      std::uint32_t pair_budget, std::uint64_t seed, const std::string& out) {
    EmbeddingSet raw = data.empty() ? syn.generate(Rng::derive_seed(seed, 0, "data"))
                                    : load_evec(data);
    EmbeddingSet reduced = [&] {
        if (!pca_path.empty()) return l2_normalize(apply_pca(load_pca(pca_path), raw));
        if (pca_dim == raw.dim() || pca_dim == 0) return l2_normalize(raw);
        return l2_normalize(apply_pca(fit_pca(raw, pca_dim), raw));
    }();

    PqCodebook codebook =
        train_codebook(reduced, pq_m, pq_n, Rng::derive_seed(seed, 0, "eval-fit"));
    DistanceTable table = build_distance_table(codebook);

    std::vector<std::uint64_t> key_seeds(n_keys);
    for (std::uint32_t i = 0; i < n_keys; ++i)
        key_seeds[i] = Rng::derive_seed(seed, i, "eval-key");

    ScoreSets sets = score_sets(reduced, codebook, table, key_seeds, sigma, pair_budget);
    UnlinkabilityReport unlink = unlinkability_report(
        sets.pseudo_genuine, sets.pseudo_imposter, Rng::derive_seed(seed, 0, "eval-bootstrap"));
    DiversityReport diversity = diversity_report(sets.genuine, sets.pseudo_genuine);

    std::string text = render_text_report(sets, unlink, diversity);
    std::cout << text;
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "security_report.txt", text);
        write_text(fs::path(out) / "security_report.json",
                   render_json_report(sets, unlink, diversity));
        write_text(fs::path(out) / "score_histograms.csv", render_histogram_csv(sets));
        std::cout << "reports in " << out << "\n";
    }
    return 0;
}

int cmd_bench(const BenchFlags& flags, const std::string& out) {
    PipelineConfig cfg = flags.build();
    BenchReport report = run_pipeline(cfg);
    std::string text = render_report_text(report);
    std::cout << text;
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "report.txt", text);
        write_text(fs::path(out) / "report.json", report_to_json(report));
        std::cout << "report files in " << out << "\n";
    }
    return 0;
}

int cmd_sweep(const BenchFlags& flags, const std::string& axis_name,
              const std::string& values_text, const std::string& out) {
    PipelineConfig cfg = flags.build();
    SweepAxis axis = parse_sweep_axis(axis_name);
    std::vector<double> values = parse_value_list(values_text);
    std::vector<BenchReport> reports = run_sweep(cfg, axis, values);

    std::string table = render_sweep_table(reports);
    std::cout << table;
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "sweep.txt", table);
        nlohmann::json arr = nlohmann::json::array();
        for (const BenchReport& r : reports) arr.push_back(nlohmann::json::parse(report_to_json(r)));
        write_text(fs::path(out) / "sweep.json", arr.dump(2) + "\n");
        std::cout << "sweep files in " << out << "\n";
    }
    return 0;
}

int cmd_revoke(const std::string& codebook_path, const std::string& table_path,
               const std::string& data, const std::string& key_out, float sigma,
               std::uint64_t seed, bool use_labels, const std::string& out) {
    refuse_key_in_out(key_out, out);
    PqCodebook codebook = load_codebook(codebook_path);
    DistanceTable table = load_distance_table(table_path);
    EmbeddingSet set = load_evec(data);

    auto [key, index] = revoke_and_reissue(set, codebook, table, seed, sigma, use_labels);

    fs::create_directories(out);
    ensure_parent(key_out);
    write_key(key, key_out);
    write_protected_index(index, fs::path(out) / "index.cpqi");

    std::cout << "reissued key id " << hex_key_id(key.key_id) << ", rebuilt " << index.size()
              << " records\n";
    std::cout << "key: " << key_out << "\nindex: " << (fs::path(out) / "index.cpqi").string()
              << "\n";
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Secure approximate nearest-neighbor retrieval over protected embeddings"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate labeled synthetic embeddings");
    SyntheticFlags gen_syn;
    gen_syn.attach(gen);
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "Generation seed");
    gen->add_option("--out", gen_out, "Output EVEC path")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit PCA and the product quantizer");
    std::string fit_data, fit_out;
    std::uint32_t fit_pca_dim = 128, fit_m = 64, fit_n = 64;
    std::uint64_t fit_seed = 1;
    fit->add_option("--data", fit_data, "Training EVEC file")->required();
    fit->add_option("--pca-dim", fit_pca_dim, "Reduced dimension");
    fit->add_option("--pq-m", fit_m, "Quantizer subspaces");
    fit->add_option("--pq-n", fit_n, "Centroids per subspace");
    fit->add_option("--seed", fit_seed, "Training seed");
    fit->add_option("--out", fit_out, "Artifact output directory")->required();

    // protect
    auto* prot = app.add_subcommand("protect", "Generate a key and build a protected index");
    std::string prot_cb, prot_tab, prot_data, prot_key_out, prot_out;
    float prot_sigma = 2e-3f;
    std::uint64_t prot_seed = 1;
    bool prot_labels = false;
    prot->add_option("--codebook", prot_cb, "Trained codebook file")->required();
    prot->add_option("--table", prot_tab, "Distance table file")->required();
    prot->add_option("--data", prot_data, "Reduced database EVEC file")->required();
    prot->add_option("--key-out", prot_key_out, "Key file path (kept outside --out)")->required();
    prot->add_option("--sigma", prot_sigma, "Projection noise level");
    prot->add_option("--seed", prot_seed, "Key seed");
    prot->add_flag("--use-labels", prot_labels, "Use embedded labels as record ids");
    prot->add_option("--out", prot_out, "Index output directory")->required();

    // query
    auto* qry = app.add_subcommand("query", "Coarse Top-K over a protected index");
    std::string qry_index, qry_key, qry_queries, qry_pca, qry_out;
    std::uint32_t qry_k = 5;
    qry->add_option("--index", qry_index, "Protected index file")->required();
    qry->add_option("--key", qry_key, "Key file")->required();
    qry->add_option("--queries", qry_queries, "Query EVEC file")->required();
    qry->add_option("--pca", qry_pca, "Optional projection model applied to queries");
    qry->add_option("--top-k", qry_k, "Candidates per query");
    qry->add_option("--out", qry_out, "Result CSV path (default: stdout)");

    // rerank
    auto* rrk = app.add_subcommand("rerank", "Coarse filter plus encrypted re-ranking");
    std::string rrk_index, rrk_key, rrk_db, rrk_queries, rrk_pca, rrk_backend = "sim";
    std::string rrk_transcript, rrk_out;
    std::uint32_t rrk_k = 5;
    std::uint64_t rrk_seed = 1;
    rrk->add_option("--index", rrk_index, "Protected index file")->required();
    rrk->add_option("--key", rrk_key, "Key file")->required();
    rrk->add_option("--db", rrk_db, "Reduced database EVEC file (encrypted at ingest)")
        ->required();
    rrk->add_option("--queries", rrk_queries, "Query EVEC file")->required();
    rrk->add_option("--pca", rrk_pca, "Optional projection model applied to both files");
    rrk->add_option("--top-k", rrk_k, "Candidates per query");
    rrk->add_option("--backend", rrk_backend, "Re-ranking backend (sim or ckks_lite)");
    rrk->add_option("--seed", rrk_seed, "Key generation seed");
    rrk->add_option("--transcript", rrk_transcript, "Write the full message transcript here");
    rrk->add_option("--out", rrk_out, "Result CSV path (default: stdout)");

    // eval-security
    auto* sec = app.add_subcommand("eval-security", "Score-distribution security evaluation");
    SyntheticFlags sec_syn;
    sec_syn.attach(sec);
    std::string sec_data, sec_pca, sec_out;
    std::uint32_t sec_pca_dim = 128, sec_m = 64, sec_n = 64, sec_keys = 5, sec_pairs = 2000;
    float sec_sigma = 2e-3f;
    std::uint64_t sec_seed = 1;
    sec->add_option("--data", sec_data, "EVEC input (default: synthetic data)");
    sec->add_option("--pca", sec_pca, "Optional pre-fitted projection model");
    sec->add_option("--pca-dim", sec_pca_dim, "Reduced dimension (0: keep input dimension)");
    sec->add_option("--pq-m", sec_m, "Quantizer subspaces");
    sec->add_option("--pq-n", sec_n, "Centroids per subspace");
    sec->add_option("--sigma", sec_sigma, "Projection noise level");
    sec->add_option("--key-seeds", sec_keys, "Number of independent keys");
    sec->add_option("--pairs", sec_pairs, "Pair budget per score population");
    sec->add_option("--seed", sec_seed, "Master seed");
    sec->add_option("--out", sec_out, "Report output directory (default: stdout only)");

    // bench
    auto* bch = app.add_subcommand("bench", "Run the full pipeline and report metrics");
    BenchFlags bch_flags;
    bch_flags.attach(bch);
    std::string bch_out;
    bch->add_option("--out", bch_out, "Report output directory (default: stdout only)");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Run the pipeline across one parameter axis");
    BenchFlags swp_flags;
    swp_flags.attach(swp);
    std::string swp_axis, swp_values, swp_out;
    swp->add_option("--axis", swp_axis, "Axis: top_k, pq_m, sigma_proj or scale")->required();
    swp->add_option("--values", swp_values, "Comma-separated axis values")->required();
    swp->add_option("--out", swp_out, "Output directory (default: stdout only)");

    // revoke
    auto* rvk = app.add_subcommand("revoke", "Reissue a key and rebuild the protected index");
    std::string rvk_cb, rvk_tab, rvk_data, rvk_key_out, rvk_out;
    float rvk_sigma = 2e-3f;
    std::uint64_t rvk_seed = 0;
    bool rvk_labels = false;
    rvk->add_option("--codebook", rvk_cb, "Trained codebook file")->required();
    rvk->add_option("--table", rvk_tab, "Distance table file")->required();
    rvk->add_option("--data", rvk_data, "Reduced database EVEC file")->required();
    rvk->add_option("--key-out", rvk_key_out, "New key file path (kept outside --out)")
        ->required();
    rvk->add_option("--sigma", rvk_sigma, "Projection noise level");
    rvk->add_option("--seed", rvk_seed, "Fresh key seed")->required();
    rvk->add_flag("--use-labels", rvk_labels, "Use embedded labels as record ids");
    rvk->add_option("--out", rvk_out, "Index output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (gen->parsed()) return cmd_gen_data(gen_syn, gen_seed, gen_out);
    if (fit->parsed()) return cmd_fit(fit_data, fit_pca_dim, fit_m, fit_n, fit_seed, fit_out);
    if (prot->parsed())
        return cmd_protect(prot_cb, prot_tab, prot_data, prot_key_out, prot_sigma, prot_seed,
                           prot_labels, prot_out);
    if (qry->parsed()) return cmd_query(qry_index, qry_key, qry_queries, qry_pca, qry_k, qry_out);
    if (rrk->parsed())
        return cmd_rerank(rrk_index, rrk_key, rrk_db, rrk_queries, rrk_pca, rrk_k, rrk_backend,
                          rrk_seed, rrk_transcript, rrk_out);
    if (sec->parsed())
        return cmd_eval_security(sec_data, sec_syn, sec_pca, sec_pca_dim, sec_m, sec_n,
                                 sec_sigma, sec_keys, sec_pairs, sec_seed, sec_out);
    if (bch->parsed()) return cmd_bench(bch_flags, bch_out);
    if (swp->parsed()) return cmd_sweep(swp_flags, swp_axis, swp_values, swp_out);
    if (rvk->parsed())
        return cmd_revoke(rvk_cb, rvk_tab, rvk_data, rvk_key_out, rvk_sigma, rvk_seed,
                          rvk_labels, rvk_out);
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
