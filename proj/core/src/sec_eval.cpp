#include "capq/sec_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "capq/digest.hpp"
#include "capq/error.hpp"
#include "capq/rng.hpp"

namespace capq {

const char* to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::genuine: return "genuine";
        case ScoreKind::imposter: return "imposter";
        case ScoreKind::pseudo_genuine: return "pseudo_genuine";
        case ScoreKind::pseudo_imposter: return "pseudo_imposter";
    }
    return "unknown";
}

double protected_similarity(const PqCodebook& reference, const PqCode& a, const PqCode& b) {
    if (a.size() != reference.m || b.size() != reference.m) {
        throw_param("protected_similarity: code length does not match codebook");
    }
    if (a == b) return 1.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::uint32_t j = 0; j < reference.m; ++j) {
        if (a[j] >= reference.n || b[j] >= reference.n) {
            throw_param("protected_similarity: code entry out of range");
        }
        auto ca = reference.centroid(j, a[j]);
        auto cb = reference.centroid(j, b[j]);
        for (std::uint32_t t = 0; t < reference.d_sub; ++t) {
            dot += double(ca[t]) * double(cb[t]);
            na += double(ca[t]) * double(ca[t]);
            nb += double(cb[t]) * double(cb[t]);
        }
    }
    if (na == 0.0 || nb == 0.0) {
        throw_data("protected_similarity: zero-norm reconstruction");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

struct Pair {
    std::uint32_t a, b;
};

std::uint64_t seeds_digest(std::span<const std::uint64_t> key_seeds, std::size_t budget) {
    DigestStream ds;
    ds.text("score-sampler");
    for (std::uint64_t s : key_seeds) ds.u64(s);
    ds.u64(budget);
    Sha256Digest d = ds.finish();
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= std::uint64_t(d[i]) << (8 * i);
    return out;
}

/// Uniform same-identity sample pairs, without replacement.  Pairs are
/// indexed globally across per-identity blocks so a draw is uniform over
/// the whole universe without enumerating it.
std::vector<Pair> sample_same_pairs(const std::vector<std::vector<std::uint32_t>>& groups,
                                    std::size_t budget, Rng& rng) {
    std::vector<std::uint64_t> block_sizes, prefix{0};
    for (const auto& g : groups) {
        std::uint64_t s = std::uint64_t(g.size()) * (g.size() - 1) / 2;
        block_sizes.push_back(s);
        prefix.push_back(prefix.back() + s);
    }
    const std::uint64_t total = prefix.back();
    std::vector<Pair> out;
    auto pair_at = [&](std::uint64_t global) {
        std::size_t block = std::size_t(
            std::upper_bound(prefix.begin(), prefix.end(), global) - prefix.begin() - 1);
        std::uint64_t k = global - prefix[block];
        // Row-major upper triangle walk inside the block.
        const auto& g = groups[block];
        std::uint64_t i = 0, remaining = k;
        while (remaining >= g.size() - 1 - i) {
            remaining -= g.size() - 1 - i;
            ++i;
        }
        return Pair{g[i], g[i + 1 + remaining]};
    };
    if (total <= budget) {
        for (std::uint64_t k = 0; k < total; ++k) out.push_back(pair_at(k));
        return out;
    }
    std::unordered_set<std::uint64_t> seen;
    while (out.size() < budget) {
        std::uint64_t k = rng.below(total);
        if (seen.insert(k).second) out.push_back(pair_at(k));
    }
    return out;
}

std::vector<Pair> sample_diff_pairs(const EmbeddingSet& data, std::size_t budget, Rng& rng) {
    const std::uint32_t n = static_cast<std::uint32_t>(data.count());
    const auto& labels = data.labels();
    std::uint64_t total_diff = 0;
    {
        std::unordered_map<std::uint32_t, std::uint64_t> sizes;
        for (std::uint32_t l : labels) ++sizes[l];
        std::uint64_t same = 0;
        for (auto& [l, s] : sizes) same += s * (s - 1) / 2;
        total_diff = std::uint64_t(n) * (n - 1) / 2 - same;
    }
    std::vector<Pair> out;
    if (total_diff <= budget) {
        for (std::uint32_t i = 0; i < n; ++i) {
            for (std::uint32_t j = i + 1; j < n; ++j) {
                if (labels[i] != labels[j]) out.push_back({i, j});
            }
        }
        return out;
    }
    auto key64 = [n](std::uint32_t a, std::uint32_t b) { return std::uint64_t(a) * n + b; };
    std::unordered_set<std::uint64_t> seen;
    while (out.size() < budget) {
        std::uint32_t a = static_cast<std::uint32_t>(rng.below(n));
        std::uint32_t b = static_cast<std::uint32_t>(rng.below(n));
        if (a == b || labels[a] == labels[b]) continue;
        if (a > b) std::swap(a, b);
        if (seen.insert(key64(a, b)).second) out.push_back({a, b});
    }
    return out;
}

class CodeCache {
public:
    CodeCache(const EmbeddingSet& data, const ProtectedCodebook& pcb, const CancelKey& key)
        : data_(data), pcb_(pcb), key_(key) {}

    const PqCode& at(std::uint32_t row) {
        auto it = cache_.find(row);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(row, secure_quantize(pcb_, key_, data_.vec(row))).first->second;
    }

private:
    const EmbeddingSet& data_;
    const ProtectedCodebook& pcb_;
    const CancelKey& key_;
    std::unordered_map<std::uint32_t, PqCode> cache_;
};

}  // namespace

ScoreSets score_sets(const EmbeddingSet& data, const PqCodebook& codebook,
                     const DistanceTable& table, std::span<const std::uint64_t> key_seeds,
                     float sigma_proj, std::size_t pair_budget) {
    if (!data.has_labels()) throw_param("score_sets: dataset has no identity labels");
    if (key_seeds.empty()) throw_param("score_sets: need at least one key seed");
    if (pair_budget == 0) throw_param("score_sets: pair budget must be positive");

    std::map<std::uint32_t, std::vector<std::uint32_t>> by_label;
    for (std::uint32_t i = 0; i < data.count(); ++i) by_label[data.label(i)].push_back(i);
    std::vector<std::vector<std::uint32_t>> groups;
    for (auto& [label, rows] : by_label) {
        if (rows.size() >= 2) groups.push_back(rows);
    }
    if (groups.empty()) throw_param("score_sets: no identity has two samples");

    const std::size_t n_keys = key_seeds.size();
    std::vector<CancelKey> keys;
    std::vector<ProtectedCodebook> pcbs;
    keys.reserve(n_keys);
    pcbs.reserve(n_keys);
    for (std::uint64_t s : key_seeds) {
        keys.push_back(keygen(s, codebook.m, codebook.n, codebook.d_sub, sigma_proj));
        pcbs.push_back(protect(codebook, table, keys.back()));
    }
    std::vector<CodeCache> caches;
    caches.reserve(n_keys);
    for (std::size_t t = 0; t < n_keys; ++t) caches.emplace_back(data, pcbs[t], keys[t]);

    const std::uint64_t sampler = seeds_digest(key_seeds, pair_budget);
    Rng same_rng = Rng::derive(sampler, 0, "pairs-same");
    Rng diff_rng = Rng::derive(sampler, 0, "pairs-diff");
    std::vector<Pair> same_pairs = sample_same_pairs(groups, pair_budget, same_rng);
    std::vector<Pair> diff_pairs = sample_diff_pairs(data, pair_budget, diff_rng);

    std::string dataset_id;
    {
        DigestStream ds;
        for (float v : data.data()) ds.f32(v);
        for (std::uint32_t l : data.labels()) ds.u32(l);
        dataset_id = to_hex(std::span<const std::uint8_t>(ds.finish().data(), 8));
    }
    std::vector<std::uint64_t> seeds_copy(key_seeds.begin(), key_seeds.end());
    auto init_set = [&](ScoreKind kind, const char* pairing) {
        ScoreSet s;
        s.kind = kind;
        s.dataset_id = dataset_id;
        s.key_seeds = seeds_copy;
        s.pairing = pairing;
        return s;
    };
    ScoreSets out{
        init_set(ScoreKind::genuine, "same identity, distinct samples, one key"),
        init_set(ScoreKind::imposter, "different identities, one key"),
        init_set(ScoreKind::pseudo_genuine, "same identity, distinct samples, two keys"),
        init_set(ScoreKind::pseudo_imposter, "different identities, two keys"),
    };

    auto pick_two = [&](Rng& rng) {
        std::size_t a = std::size_t(rng.below(n_keys));
        std::size_t b = n_keys == 1 ? a : (a + 1 + std::size_t(rng.below(n_keys - 1))) % n_keys;
        return std::pair<std::size_t, std::size_t>{a, b};
    };

    Rng gk = Rng::derive(sampler, 0, "keys-genuine");
    for (const Pair& p : same_pairs) {
        std::size_t t = std::size_t(gk.below(n_keys));
        out.genuine.scores.push_back(static_cast<float>(
            protected_similarity(codebook, caches[t].at(p.a), caches[t].at(p.b))));
    }
    Rng ik = Rng::derive(sampler, 0, "keys-imposter");
    for (const Pair& p : diff_pairs) {
        std::size_t t = std::size_t(ik.below(n_keys));
        out.imposter.scores.push_back(static_cast<float>(
            protected_similarity(codebook, caches[t].at(p.a), caches[t].at(p.b))));
    }
    Rng pgk = Rng::derive(sampler, 0, "keys-pseudo-genuine");
    for (const Pair& p : same_pairs) {
        auto [ta, tb] = pick_two(pgk);
        out.pseudo_genuine.scores.push_back(static_cast<float>(
            protected_similarity(codebook, caches[ta].at(p.a), caches[tb].at(p.b))));
    }
    Rng pik = Rng::derive(sampler, 0, "keys-pseudo-imposter");
    for (const Pair& p : diff_pairs) {
        auto [ta, tb] = pick_two(pik);
        out.pseudo_imposter.scores.push_back(static_cast<float>(
            protected_similarity(codebook, caches[ta].at(p.a), caches[tb].at(p.b))));
    }
    return out;
}

DistStats dist_stats(const ScoreSet& set) {
    if (set.scores.empty()) throw_param("dist_stats: empty score set");
    DistStats st;
    st.count = set.scores.size();
    double sum = 0.0;
    st.min_value = set.scores[0];
    st.max_value = set.scores[0];
    for (float x : set.scores) {
        sum += double(x);
        st.min_value = std::min(st.min_value, x);
        st.max_value = std::max(st.max_value, x);
        double clamped = std::clamp(double(x), -1.0, 1.0);
        int bin = std::min(63, int((clamped + 1.0) * 32.0));
        ++st.histogram[std::size_t(bin)];
    }
    st.mean = sum / double(st.count);
    double ss = 0.0;
    for (float x : set.scores) {
        double d = double(x) - st.mean;
        ss += d * d;
    }
    st.variance = ss / double(st.count);
    return st;
}

double jensen_shannon(const std::array<std::uint64_t, 64>& a,
                      const std::array<std::uint64_t, 64>& b) {
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
        na += double(a[i]);
        nb += double(b[i]);
    }
    na += 64.0;
    nb += 64.0;
    double jsd = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
        double p = (double(a[i]) + 1.0) / na;
        double q = (double(b[i]) + 1.0) / nb;
        double m = 0.5 * (p + q);
        jsd += 0.5 * p * std::log(p / m) + 0.5 * q * std::log(q / m);
    }
    return jsd;
}

UnlinkabilityReport unlinkability_report(const ScoreSet& pseudo_genuine,
                                         const ScoreSet& pseudo_imposter,
                                         std::uint64_t bootstrap_seed, std::uint32_t iters) {
    if (iters == 0) throw_param("unlinkability_report: need at least one bootstrap iteration");
    DistStats pg = dist_stats(pseudo_genuine);
    DistStats pi = dist_stats(pseudo_imposter);
    if (pseudo_imposter.scores.size() < 4) {
        throw_param("unlinkability_report: pseudo-imposter set too small to split");
    }

    UnlinkabilityReport rep;
    rep.mean_gap = std::abs(pg.mean - pi.mean);
    double pooled = std::sqrt(0.5 * (pg.variance + pi.variance));
    rep.standardized_gap = pooled > 0.0 ? rep.mean_gap / pooled : 0.0;
    rep.jsd = jensen_shannon(pg.histogram, pi.histogram);
    rep.bootstrap_iters = iters;

    // Null distribution: JSD between random halves of the pseudo-imposter
    // scores; tau_u is its 95th percentile.
    std::vector<float> pool(pseudo_imposter.scores);
    std::vector<double> null_jsd(iters);
    Rng rng = Rng::derive(bootstrap_seed, 0, "unlink-bootstrap");
    auto hist_of = [](std::span<const float> xs) {
        std::array<std::uint64_t, 64> h{};
        for (float x : xs) {
            double clamped = std::clamp(double(x), -1.0, 1.0);
            ++h[std::size_t(std::min(63, int((clamped + 1.0) * 32.0)))];
        }
        return h;
    };
    for (std::uint32_t it = 0; it < iters; ++it) {
        rng.shuffle(pool);
        std::size_t half = pool.size() / 2;
        auto ha = hist_of(std::span<const float>(pool.data(), half));
        auto hb = hist_of(std::span<const float>(pool.data() + half, pool.size() - half));
        null_jsd[it] = jensen_shannon(ha, hb);
    }
    std::sort(null_jsd.begin(), null_jsd.end());
    std::size_t idx = std::size_t(std::ceil(0.95 * double(iters)));
    idx = idx == 0 ? 0 : idx - 1;
    rep.tau_u = null_jsd[std::min(idx, null_jsd.size() - 1)];
    rep.unlinkable = rep.jsd <= rep.tau_u;
    return rep;
}

DiversityReport diversity_report(const ScoreSet& genuine, const ScoreSet& pseudo_genuine) {
    DistStats g = dist_stats(genuine);
    DistStats pg = dist_stats(pseudo_genuine);
    DiversityReport rep;
    double pooled = std::sqrt(0.5 * (g.variance + pg.variance));
    rep.standardized_gap = pooled > 0.0 ? (g.mean - pg.mean) / pooled : 0.0;
    rep.diverse = rep.standardized_gap >= rep.tau_d;
    return rep;
}

namespace {

constexpr const char* kScoringAssumption =
    "scoring: codes decoded through the shared reference codebook; "
    "cross-key comparability assumes a common trained codebook";

void append_stats(std::ostringstream& os, const ScoreSet& set) {
    DistStats st = dist_stats(set);
    os << "  " << to_string(set.kind) << ": count=" << st.count << " mean=" << st.mean
       << " variance=" << st.variance << " min=" << st.min_value << " max=" << st.max_value
       << "\n    pairing: " << set.pairing << "\n";
}

}  // namespace

std::string render_text_report(const ScoreSets& sets, const UnlinkabilityReport& unlink,
                               const DiversityReport& diversity) {
    std::ostringstream os;
    os << "security evaluation\n";
    os << "assumption: " << kScoringAssumption << "\n";
    os << "dataset: " << sets.genuine.dataset_id << ", key seeds: " << sets.genuine.key_seeds.size()
       << "\n";
    os << "score distributions\n";
    append_stats(os, sets.genuine);
    append_stats(os, sets.imposter);
    append_stats(os, sets.pseudo_genuine);
    append_stats(os, sets.pseudo_imposter);
    os << "unlinkability\n";
    os << "  jsd(pseudo_genuine, pseudo_imposter)=" << unlink.jsd << " tau_u=" << unlink.tau_u
       << " (bootstrap " << unlink.bootstrap_iters << " half-splits, 95th percentile)\n";
    os << "  mean_gap=" << unlink.mean_gap << " standardized_gap=" << unlink.standardized_gap
       << "\n";
    os << "  unlinkable: " << (unlink.unlinkable ? "yes" : "no") << "\n";
    os << "key diversity\n";
    os << "  standardized_gap(genuine, pseudo_genuine)=" << diversity.standardized_gap
       << " tau_d=" << diversity.tau_d << "\n";
    os << "  diverse: " << (diversity.diverse ? "yes" : "no") << "\n";
    return os.str();
}

std::string render_json_report(const ScoreSets& sets, const UnlinkabilityReport& unlink,
                               const DiversityReport& diversity) {
    nlohmann::json j;
    j["assumption"] = kScoringAssumption;
    j["dataset_id"] = sets.genuine.dataset_id;
    j["key_seeds"] = sets.genuine.key_seeds;
    auto stats_json = [](const ScoreSet& set) {
        DistStats st = dist_stats(set);
        nlohmann::json s;
        s["count"] = st.count;
        s["mean"] = st.mean;
        s["variance"] = st.variance;
        s["min"] = st.min_value;
        s["max"] = st.max_value;
        s["pairing"] = set.pairing;
        s["histogram"] = st.histogram;
        return s;
    };
    j["distributions"]["genuine"] = stats_json(sets.genuine);
    j["distributions"]["imposter"] = stats_json(sets.imposter);
    j["distributions"]["pseudo_genuine"] = stats_json(sets.pseudo_genuine);
    j["distributions"]["pseudo_imposter"] = stats_json(sets.pseudo_imposter);
    j["unlinkability"] = {{"jsd", unlink.jsd},
                          {"tau_u", unlink.tau_u},
                          {"bootstrap_iters", unlink.bootstrap_iters},
                          {"mean_gap", unlink.mean_gap},
                          {"standardized_gap", unlink.standardized_gap},
                          {"unlinkable", unlink.unlinkable}};
    j["diversity"] = {{"standardized_gap", diversity.standardized_gap},
                      {"tau_d", diversity.tau_d},
                      {"diverse", diversity.diverse}};
    return j.dump(2);
}

std::string render_histogram_csv(const ScoreSets& sets) {
    std::ostringstream os;
    os << "bin_low,bin_high,genuine,imposter,pseudo_genuine,pseudo_imposter\n";
    DistStats g = dist_stats(sets.genuine);
    DistStats i = dist_stats(sets.imposter);
    DistStats pg = dist_stats(sets.pseudo_genuine);
    DistStats pi = dist_stats(sets.pseudo_imposter);
    for (std::size_t b = 0; b < 64; ++b) {
        double lo = -1.0 + double(b) / 32.0;
        double hi = lo + 1.0 / 32.0;
        os << lo << "," << hi << "," << g.histogram[b] << "," << i.histogram[b] << ","
           << pg.histogram[b] << "," << pi.histogram[b] << "\n";
    }
    return os.str();
}

}  // namespace capq
