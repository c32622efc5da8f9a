#include "capq/pq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "capq/binio.hpp"
#include "capq/error.hpp"
#include "capq/rng.hpp"

namespace capq {

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint32_t kMaxCentroids = 65535;  // codes are stored as u16

double sq_dist(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        double diff = double(a[t]) - double(b[t]);
        s += diff * diff;
    }
    return s;
}

double sq_dist_d(const float* a, const double* c, std::size_t d) {
    double s = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
        double diff = double(a[t]) - c[t];
        s += diff * diff;
    }
    return s;
}

/// Lloyd's algorithm over `count` points of dimension `d`, returning n
/// centroids.  Seeding is k-means++; empty clusters are repaired by stealing
/// the point farthest from its own centroid.  All ties resolve to the lowest
/// index, which keeps the result deterministic in the stream.
std::vector<float> kmeans(const float* pts, std::size_t count, std::size_t d, std::uint32_t n,
                          Rng& rng) {
    constexpr int kMaxIter = 25;
    std::vector<double> centroids(std::size_t(n) * d);
    auto point = [&](std::size_t i) { return std::span<const float>(pts + i * d, d); };

    // k-means++ seeding.
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    std::vector<double> mind(count, std::numeric_limits<double>::infinity());
    std::vector<char> is_chosen(count, 0);
    std::size_t first = static_cast<std::size_t>(rng.below(count));
    chosen.push_back(first);
    is_chosen[first] = 1;
    for (std::size_t i = 0; i < count; ++i) mind[i] = sq_dist(point(i), point(first));
    while (chosen.size() < n) {
        double total = 0.0;
        for (double x : mind) total += x;
        std::size_t pick = count;
        if (total > 0.0) {
            double r = rng.uniform01() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                acc += mind[i];
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
            if (pick == count) pick = count - 1;
        } else {
            // All remaining points coincide with chosen centroids; take the
            // lowest index not yet chosen.
            for (std::size_t i = 0; i < count; ++i) {
                if (!is_chosen[i]) {
                    pick = i;
                    break;
                }
            }
            if (pick == count) pick = static_cast<std::size_t>(rng.below(count));
        }
        chosen.push_back(pick);
        is_chosen[pick] = 1;
        for (std::size_t i = 0; i < count; ++i) {
            double dd = sq_dist(point(i), point(pick));
            if (dd < mind[i]) mind[i] = dd;
        }
    }
    for (std::uint32_t k = 0; k < n; ++k) {
        auto p = point(chosen[k]);
        for (std::size_t t = 0; t < d; ++t) centroids[std::size_t(k) * d + t] = p[t];
    }

    std::vector<std::uint32_t> assign(count, n);
    std::vector<std::size_t> sizes(n, 0);
    for (int iter = 0; iter < kMaxIter; ++iter) {
        std::size_t changed = 0;
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < count; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_k = 0;
            for (std::uint32_t k = 0; k < n; ++k) {
                double dd = sq_dist_d(pts + i * d, centroids.data() + std::size_t(k) * d, d);
                if (dd < best) {
                    best = dd;
                    best_k = k;
                }
            }
            if (best_k != assign[i]) ++changed;
            assign[i] = best_k;
            ++sizes[best_k];
        }
        for (std::uint32_t c = 0; c < n; ++c) {
            if (sizes[c] != 0) continue;
            double far = -1.0;
            std::size_t steal = count;
            for (std::size_t i = 0; i < count; ++i) {
                if (sizes[assign[i]] <= 1) continue;
                double dd = sq_dist_d(pts + i * d, centroids.data() + std::size_t(assign[i]) * d, d);
                if (dd > far) {
                    far = dd;
                    steal = i;
                }
            }
            if (steal == count) continue;
            --sizes[assign[steal]];
            assign[steal] = c;
            sizes[c] = 1;
            ++changed;
        }
        bool converged = iter > 0 && changed * 1000 < count;
        std::fill(centroids.begin(), centroids.end(), 0.0);
        for (std::size_t i = 0; i < count; ++i) {
            double* c = centroids.data() + std::size_t(assign[i]) * d;
            const float* p = pts + i * d;
            for (std::size_t t = 0; t < d; ++t) c[t] += p[t];
        }
        for (std::uint32_t k = 0; k < n; ++k) {
            if (sizes[k] == 0) continue;
            double inv = 1.0 / double(sizes[k]);
            for (std::size_t t = 0; t < d; ++t) centroids[std::size_t(k) * d + t] *= inv;
        }
        if (converged) break;
    }

    std::vector<float> out(centroids.size());
    for (std::size_t i = 0; i < centroids.size(); ++i) out[i] = static_cast<float>(centroids[i]);
    return out;
}

}  // namespace

std::span<const float> PqCodebook::centroid(std::uint32_t j, std::uint32_t k) const {
    return {centroids.data() + (std::size_t(j) * n + k) * d_sub, d_sub};
}

void PqCodebook::validate() const {
    if (m == 0 || n == 0 || d_sub == 0) throw_param("PqCodebook: m, n, d_sub must be positive");
    if (n > kMaxCentroids) throw_param("PqCodebook: n exceeds code range");
    if (centroids.size() != std::size_t(m) * n * d_sub) {
        throw_param("PqCodebook: centroid array has wrong size");
    }
    for (float v : centroids) {
        if (!std::isfinite(v)) throw_data("PqCodebook: non-finite centroid component");
    }
}

void DistanceTable::validate() const {
    if (m == 0 || n == 0) throw_param("DistanceTable: m and n must be positive");
    if (d.size() != std::size_t(m) * n * n) throw_param("DistanceTable: wrong size");
    for (float v : d) {
        if (!std::isfinite(v) || v < 0.0f) throw_data("DistanceTable: invalid entry");
    }
}

PqIndex::PqIndex(PqCodebook codebook, DistanceTable table)
    : codebook_(std::move(codebook)), table_(std::move(table)) {
    codebook_.validate();
    table_.validate();
    if (table_.m != codebook_.m || table_.n != codebook_.n) {
        throw_param("PqIndex: table shape does not match codebook");
    }
}

void PqIndex::add(const EmbeddingSet& set, bool use_labels) {
    if (set.dim() != codebook_.dim()) {
        throw_param("PqIndex::add: set dim " + std::to_string(set.dim()) +
                    " does not match codebook dim " + std::to_string(codebook_.dim()));
    }
    if (use_labels && !set.has_labels()) throw_param("PqIndex::add: set has no labels");
    const std::uint32_t base = static_cast<std::uint32_t>(ids_.size());
    for (std::size_t i = 0; i < set.count(); ++i) {
        PqCode code = quantize(codebook_, set.vec(i));
        codes_.insert(codes_.end(), code.begin(), code.end());
        ids_.push_back(use_labels ? set.label(i) : base + static_cast<std::uint32_t>(i));
    }
}

void PqIndex::add_code(std::span<const std::uint16_t> code, std::uint32_t id) {
    if (code.size() != codebook_.m) throw_param("PqIndex::add_code: wrong code length");
    for (std::uint16_t c : code) {
        if (c >= codebook_.n) throw_param("PqIndex::add_code: code entry out of range");
    }
    codes_.insert(codes_.end(), code.begin(), code.end());
    ids_.push_back(id);
}

std::span<const std::uint16_t> PqIndex::code(std::size_t row) const {
    if (row >= ids_.size()) throw_param("PqIndex::code: row out of range");
    return {codes_.data() + row * codebook_.m, codebook_.m};
}

PqCodebook train_codebook(const EmbeddingSet& set, std::uint32_t m, std::uint32_t n,
                          std::uint64_t seed) {
    if (m == 0 || n == 0) throw_param("train_codebook: m and n must be positive");
    if (n > kMaxCentroids) throw_param("train_codebook: n exceeds code range");
    if (set.dim() % m != 0) {
        throw_param("train_codebook: dim " + std::to_string(set.dim()) +
                    " is not divisible by m " + std::to_string(m));
    }
    if (set.count() < n) {
        throw_param("train_codebook: need at least n " + std::to_string(n) + " vectors, have " +
                    std::to_string(set.count()));
    }
    const std::size_t d_sub = set.dim() / m;
    const std::size_t count = set.count();

    PqCodebook cb;
    cb.m = m;
    cb.n = n;
    cb.d_sub = static_cast<std::uint32_t>(d_sub);
    cb.centroids.resize(std::size_t(m) * n * d_sub);

    std::vector<float> slice(count * d_sub);
    for (std::uint32_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < count; ++i) {
            const float* src = set.data().data() + i * set.dim() + std::size_t(j) * d_sub;
            std::copy(src, src + d_sub, slice.data() + i * d_sub);
        }
        Rng rng = Rng::derive(seed, j, "kmeans");
        std::vector<float> cents = kmeans(slice.data(), count, d_sub, n, rng);
        std::copy(cents.begin(), cents.end(),
                  cb.centroids.begin() + std::size_t(j) * n * d_sub);
    }
    return cb;
}

PqCode quantize(const PqCodebook& codebook, std::span<const float> x) {
    if (x.size() != codebook.dim()) {
        throw_param("quantize: vector dim " + std::to_string(x.size()) +
                    " does not match codebook dim " + std::to_string(codebook.dim()));
    }
    PqCode code(codebook.m);
    const std::size_t d = codebook.d_sub;
    for (std::uint32_t j = 0; j < codebook.m; ++j) {
        std::span<const float> sub = x.subspan(std::size_t(j) * d, d);
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_k = 0;
        for (std::uint32_t k = 0; k < codebook.n; ++k) {
            double dd = sq_dist(sub, codebook.centroid(j, k));
            if (dd < best) {
                best = dd;
                best_k = k;
            }
        }
        code[j] = static_cast<std::uint16_t>(best_k);
    }
    return code;
}

DistanceTable build_distance_table(const PqCodebook& codebook) {
    codebook.validate();
    DistanceTable table;
    table.m = codebook.m;
    table.n = codebook.n;
    table.d.assign(std::size_t(codebook.m) * codebook.n * codebook.n, 0.0f);
    for (std::uint32_t j = 0; j < codebook.m; ++j) {
        for (std::uint32_t a = 0; a < codebook.n; ++a) {
            for (std::uint32_t b = a + 1; b < codebook.n; ++b) {
                float dd = static_cast<float>(sq_dist(codebook.centroid(j, a), codebook.centroid(j, b)));
                table.d[(std::size_t(j) * table.n + a) * table.n + b] = dd;
                table.d[(std::size_t(j) * table.n + b) * table.n + a] = dd;
            }
        }
    }
    return table;
}

double pq_distance(const DistanceTable& table, const PqCode& a, const PqCode& b) {
    if (a.size() != table.m || b.size() != table.m) {
        throw_param("pq_distance: code length does not match table");
    }
    double s = 0.0;
    for (std::uint32_t j = 0; j < table.m; ++j) {
        if (a[j] >= table.n || b[j] >= table.n) throw_param("pq_distance: code entry out of range");
        s += double(table.at(j, a[j], b[j]));
    }
    return s;
}

CandidateList scan_topk(const DistanceTable& table, std::span<const std::uint16_t> flat_codes,
                        std::span<const std::uint32_t> ids, std::span<const std::uint16_t> query_code,
                        std::uint32_t k) {
    if (k == 0) throw_param("scan_topk: k must be positive");
    if (query_code.size() != table.m) throw_param("scan_topk: query code length mismatch");
    for (std::uint16_t c : query_code) {
        if (c >= table.n) throw_param("scan_topk: query code entry out of range");
    }
    const std::size_t count = ids.size();
    if (count == 0) throw_state("scan_topk: index is empty");
    const std::uint32_t m = table.m;

    // One table row per subspace, selected by the query's code entry.
    std::vector<const float*> rows(m);
    for (std::uint32_t j = 0; j < m; ++j) rows[j] = table.row(j, query_code[j]).data();

    const std::size_t k_eff = std::min<std::size_t>(k, count);
    // Max-heap of (distance, id): the worst kept candidate sits on top.
    std::priority_queue<std::pair<double, std::uint32_t>> heap;
    const std::uint16_t* code = flat_codes.data();
    for (std::size_t r = 0; r < count; ++r, code += m) {
        double dist = 0.0;
        for (std::uint32_t j = 0; j < m; ++j) dist += double(rows[j][code[j]]);
        std::pair<double, std::uint32_t> cand{dist, ids[r]};
        if (heap.size() < k_eff) {
            heap.push(cand);
        } else if (cand < heap.top()) {
            heap.pop();
            heap.push(cand);
        }
    }

    CandidateList out;
    out.ids.resize(heap.size());
    out.distances.resize(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
        out.ids[i] = heap.top().second;
        out.distances[i] = static_cast<float>(heap.top().first);
        heap.pop();
    }
    return out;
}

CandidateList topk_filter(const PqIndex& index, const PqCode& query_code, std::uint32_t k) {
    return scan_topk(index.table(), index.flat_codes(), index.ids(),
                     std::span<const std::uint16_t>(query_code.data(), query_code.size()), k);
}

PqCodebook load_codebook(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    r.expect_magic("PQCB");
    if (std::uint8_t v = r.u8(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
    if (std::uint8_t dt = r.u8(); dt != kDtypeF32) r.fail("unsupported dtype");
    for (int i = 0; i < 3; ++i) {
        if (r.u8() != 0) r.fail("nonzero reserved byte");
    }
    PqCodebook cb;
    cb.m = r.u32();
    cb.n = r.u32();
    cb.d_sub = r.u32();
    if (cb.m == 0 || cb.n == 0 || cb.d_sub == 0) r.fail("invalid codebook shape");
    cb.centroids.resize(std::size_t(cb.m) * cb.n * cb.d_sub);
    r.f32_array(cb.centroids);
    r.expect_end();
    cb.validate();
    return cb;
}

void write_codebook(const PqCodebook& codebook, const std::filesystem::path& path) {
    codebook.validate();
    ByteWriter w;
    w.magic("PQCB");
    w.u8(kVersion);
    w.u8(kDtypeF32);
    for (int i = 0; i < 3; ++i) w.u8(0);
    w.u32(codebook.m);
    w.u32(codebook.n);
    w.u32(codebook.d_sub);
    w.f32_array(codebook.centroids);
    w.save(path);
}

DistanceTable load_distance_table(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    r.expect_magic("PQDT");
    if (std::uint8_t v = r.u8(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
    if (std::uint8_t dt = r.u8(); dt != kDtypeF32) r.fail("unsupported dtype");
    for (int i = 0; i < 3; ++i) {
        if (r.u8() != 0) r.fail("nonzero reserved byte");
    }
    DistanceTable t;
    t.m = r.u32();
    t.n = r.u32();
    if (t.m == 0 || t.n == 0) r.fail("invalid table shape");
    t.d.resize(std::size_t(t.m) * t.n * t.n);
    r.f32_array(t.d);
    r.expect_end();
    t.validate();
    return t;
}

void write_distance_table(const DistanceTable& table, const std::filesystem::path& path) {
    table.validate();
    ByteWriter w;
    w.magic("PQDT");
    w.u8(kVersion);
    w.u8(kDtypeF32);
    for (int i = 0; i < 3; ++i) w.u8(0);
    w.u32(table.m);
    w.u32(table.n);
    w.f32_array(table.d);
    w.save(path);
}

PqIndex load_index(const std::filesystem::path& index_path, PqCodebook codebook,
                   DistanceTable table) {
    auto raw = load_file(index_path);
    ByteReader r(raw, index_path.string());
    r.expect_magic("PQIX");
    if (std::uint8_t v = r.u8(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
    if (std::uint8_t dt = r.u8(); dt != kDtypeF32) r.fail("unsupported dtype");
    for (int i = 0; i < 3; ++i) {
        if (r.u8() != 0) r.fail("nonzero reserved byte");
    }
    std::uint32_t m = r.u32();
    std::uint32_t n = r.u32();
    std::uint32_t count = r.u32();
    if (m != codebook.m || n != codebook.n) r.fail("index shape does not match codebook");

    PqIndex index(std::move(codebook), std::move(table));
    std::vector<std::uint32_t> ids(count);
    r.u32_array(ids);
    std::vector<std::uint16_t> code(m);
    for (std::uint32_t i = 0; i < count; ++i) {
        for (std::uint32_t j = 0; j < m; ++j) {
            std::uint32_t c = r.u32();
            if (c >= n) r.fail("code entry out of range");
            code[j] = static_cast<std::uint16_t>(c);
        }
        index.add_code(code, ids[i]);
    }
    r.expect_end();
    return index;
}

void write_index(const PqIndex& index, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("PQIX");
    w.u8(kVersion);
    w.u8(kDtypeF32);
    for (int i = 0; i < 3; ++i) w.u8(0);
    w.u32(index.codebook().m);
    w.u32(index.codebook().n);
    w.u32(static_cast<std::uint32_t>(index.size()));
    w.u32_array(index.ids());
    for (std::uint16_t c : index.flat_codes()) w.u32(c);
    w.save(path);
}

}  // namespace capq
