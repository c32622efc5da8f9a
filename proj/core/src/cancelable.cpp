#include "capq/cancelable.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "capq/binio.hpp"
#include "capq/digest.hpp"
#include "capq/error.hpp"
#include "capq/rng.hpp"

namespace capq {

namespace {

constexpr std::uint8_t kKeyVersion = 1;
constexpr std::uint8_t kIndexVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

KeyId compute_key_id(std::uint32_t m, std::uint32_t n, std::uint32_t d_sub, float sigma_proj,
                     std::span<const std::uint32_t> perms, std::span<const float> projs) {
    DigestStream ds;
    ds.u32(m).u32(n).u32(d_sub).f32(sigma_proj);
    for (std::uint32_t p : perms) ds.u32(p);
    for (float v : projs) ds.f32(v);
    Sha256Digest d = ds.finish();
    KeyId id{};
    std::copy(d.begin(), d.begin() + id.size(), id.begin());
    return id;
}

std::string key_id_hex(const KeyId& id) {
    return to_hex(std::span<const std::uint8_t>(id.data(), id.size()));
}

}  // namespace

std::span<const std::uint32_t> CancelKey::perm(std::uint32_t j) const {
    return {perms.data() + std::size_t(j) * n, n};
}

std::span<const float> CancelKey::proj(std::uint32_t j) const {
    return {projs.data() + std::size_t(j) * d_sub * d_sub, std::size_t(d_sub) * d_sub};
}

void CancelKey::validate() const {
    if (m == 0 || n == 0 || d_sub == 0) throw_param("CancelKey: m, n, d_sub must be positive");
    if (!(sigma_proj >= 0.0f)) throw_param("CancelKey: sigma_proj must be non-negative");
    if (perms.size() != std::size_t(m) * n) throw_param("CancelKey: wrong permutation size");
    if (projs.size() != std::size_t(m) * d_sub * d_sub) {
        throw_param("CancelKey: wrong projection size");
    }
    std::vector<char> seen(n);
    for (std::uint32_t j = 0; j < m; ++j) {
        std::fill(seen.begin(), seen.end(), 0);
        for (std::uint32_t p : perm(j)) {
            if (p >= n || seen[p]) {
                throw_data("CancelKey: subspace " + std::to_string(j) +
                           " entries do not form a permutation");
            }
            seen[p] = 1;
        }
    }
    for (float v : projs) {
        if (!std::isfinite(v)) throw_data("CancelKey: non-finite projection entry");
    }
}

std::span<const float> ProtectedCodebook::centroid(std::uint32_t j, std::uint32_t k) const {
    return {centroids.data() + (std::size_t(j) * n + k) * d_sub, d_sub};
}

CancelKey keygen(std::uint64_t seed, std::uint32_t m, std::uint32_t n, std::uint32_t d_sub,
                 float sigma_proj) {
    if (m == 0 || n == 0 || d_sub == 0) throw_param("keygen: m, n, d_sub must be positive");
    if (!(sigma_proj >= 0.0f) || !std::isfinite(sigma_proj)) {
        throw_param("keygen: sigma_proj must be finite and non-negative");
    }
    CancelKey key;
    key.m = m;
    key.n = n;
    key.d_sub = d_sub;
    key.sigma_proj = sigma_proj;
    key.perms.resize(std::size_t(m) * n);
    key.projs.resize(std::size_t(m) * d_sub * d_sub);

    std::vector<std::uint32_t> ident(n);
    for (std::uint32_t j = 0; j < m; ++j) {
        Rng perm_rng = Rng::derive(seed, j, "perm");
        std::iota(ident.begin(), ident.end(), 0u);
        perm_rng.shuffle(ident);
        std::copy(ident.begin(), ident.end(), key.perms.begin() + std::size_t(j) * n);

        float* r = key.projs.data() + std::size_t(j) * d_sub * d_sub;
        if (sigma_proj == 0.0f) {
            // Exact identity: the protected quantizer then reproduces the
            // plain quantizer bit for bit.
            for (std::uint32_t s = 0; s < d_sub; ++s) {
                for (std::uint32_t t = 0; t < d_sub; ++t) r[s * d_sub + t] = (s == t) ? 1.0f : 0.0f;
            }
        } else {
            Rng proj_rng = Rng::derive(seed, j, "proj");
            for (std::uint32_t s = 0; s < d_sub; ++s) {
                for (std::uint32_t t = 0; t < d_sub; ++t) {
                    double g = proj_rng.gaussian();
                    double base = (s == t) ? 1.0 : 0.0;
                    r[s * d_sub + t] = static_cast<float>(base + double(sigma_proj) * g);
                }
            }
        }
    }
    key.key_id = compute_key_id(m, n, d_sub, sigma_proj, key.perms, key.projs);
    return key;
}

ProtectedCodebook protect(const PqCodebook& codebook, const DistanceTable& table,
                          const CancelKey& key) {
    codebook.validate();
    table.validate();
    key.validate();
    if (key.m != codebook.m || key.n != codebook.n || key.d_sub != codebook.d_sub) {
        throw_key("protect: key shape (" + std::to_string(key.m) + "," + std::to_string(key.n) +
                  "," + std::to_string(key.d_sub) + ") does not match codebook");
    }
    if (table.m != codebook.m || table.n != codebook.n) {
        throw_param("protect: table shape does not match codebook");
    }

    ProtectedCodebook pcb;
    pcb.m = key.m;
    pcb.n = key.n;
    pcb.d_sub = key.d_sub;
    pcb.key_id = key.key_id;
    pcb.centroids.resize(codebook.centroids.size());
    pcb.table.m = table.m;
    pcb.table.n = table.n;
    pcb.table.d.resize(table.d.size());

    const std::size_t d = key.d_sub;
    for (std::uint32_t j = 0; j < key.m; ++j) {
        auto p = key.perm(j);
        for (std::uint32_t k = 0; k < key.n; ++k) {
            const float* src = codebook.centroid(j, k).data();
            float* dst = pcb.centroids.data() + (std::size_t(j) * key.n + p[k]) * d;
            std::copy(src, src + d, dst);
        }
        for (std::uint32_t a = 0; a < key.n; ++a) {
            for (std::uint32_t b = 0; b < key.n; ++b) {
                pcb.table.d[(std::size_t(j) * key.n + p[a]) * key.n + p[b]] = table.at(j, a, b);
            }
        }
    }
    return pcb;
}

PqCode secure_quantize(const ProtectedCodebook& pcb, const CancelKey& key,
                       std::span<const float> x) {
    if (key.key_id != pcb.key_id) {
        throw_key("secure_quantize: key id " + key_id_hex(key.key_id) +
                  " does not match protected codebook key id " + key_id_hex(pcb.key_id));
    }
    if (x.size() != pcb.dim()) {
        throw_param("secure_quantize: vector dim " + std::to_string(x.size()) +
                    " does not match codebook dim " + std::to_string(pcb.dim()));
    }
    const std::size_t d = pcb.d_sub;
    PqCode code(pcb.m);
    std::vector<double> y(d);
    for (std::uint32_t j = 0; j < pcb.m; ++j) {
        const float* sub = x.data() + std::size_t(j) * d;
        const float* r = key.proj(j).data();
        for (std::size_t t = 0; t < d; ++t) {
            double acc = 0.0;
            for (std::size_t s = 0; s < d; ++s) acc += double(sub[s]) * double(r[s * d + t]);
            y[t] = acc;
        }
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_k = 0;
        for (std::uint32_t k = 0; k < pcb.n; ++k) {
            const float* c = pcb.centroid(j, k).data();
            double dist = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                double diff = y[t] - double(c[t]);
                dist += diff * diff;
            }
            if (dist < best) {
                best = dist;
                best_k = k;
            }
        }
        code[j] = static_cast<std::uint16_t>(best_k);
    }
    return code;
}

ProtectedIndex::ProtectedIndex(ProtectedCodebook pcb) : pcb_(std::move(pcb)) {
    pcb_.table.validate();
    if (pcb_.m == 0 || pcb_.n == 0 || pcb_.d_sub == 0) {
        throw_param("ProtectedIndex: invalid codebook shape");
    }
    if (pcb_.centroids.size() != std::size_t(pcb_.m) * pcb_.n * pcb_.d_sub) {
        throw_param("ProtectedIndex: centroid array has wrong size");
    }
}

void ProtectedIndex::add(const EmbeddingSet& set, const CancelKey& key, bool use_labels) {
    if (use_labels && !set.has_labels()) throw_param("ProtectedIndex::add: set has no labels");
    const std::uint32_t base = static_cast<std::uint32_t>(ids_.size());
    for (std::size_t i = 0; i < set.count(); ++i) {
        PqCode code = secure_quantize(pcb_, key, set.vec(i));
        codes_.insert(codes_.end(), code.begin(), code.end());
        ids_.push_back(use_labels ? set.label(i) : base + static_cast<std::uint32_t>(i));
    }
}

void ProtectedIndex::add_code(std::span<const std::uint16_t> code, std::uint32_t id) {
    if (code.size() != pcb_.m) throw_param("ProtectedIndex::add_code: wrong code length");
    for (std::uint16_t c : code) {
        if (c >= pcb_.n) throw_param("ProtectedIndex::add_code: code entry out of range");
    }
    codes_.insert(codes_.end(), code.begin(), code.end());
    ids_.push_back(id);
}

ProtectedIndex build_protected_index(const EmbeddingSet& set, const ProtectedCodebook& pcb,
                                     const CancelKey& key, bool use_labels) {
    ProtectedIndex index(pcb);
    index.add(set, key, use_labels);
    return index;
}

CandidateList cancelable_topk(const ProtectedIndex& index, const PqCode& query_code,
                              std::uint32_t k) {
    return scan_topk(index.pcb().table, index.flat_codes(), index.ids(),
                     std::span<const std::uint16_t>(query_code.data(), query_code.size()), k);
}

std::vector<float> reconstruct(const ProtectedCodebook& pcb, const PqCode& code) {
    if (code.size() != pcb.m) throw_param("reconstruct: code length mismatch");
    std::vector<float> out(std::size_t(pcb.m) * pcb.d_sub);
    for (std::uint32_t j = 0; j < pcb.m; ++j) {
        if (code[j] >= pcb.n) throw_param("reconstruct: code entry out of range");
        auto c = pcb.centroid(j, code[j]);
        std::copy(c.begin(), c.end(), out.begin() + std::size_t(j) * pcb.d_sub);
    }
    return out;
}

std::pair<CancelKey, ProtectedIndex> revoke_and_reissue(const EmbeddingSet& set,
                                                        const PqCodebook& codebook,
                                                        const DistanceTable& table,
                                                        std::uint64_t new_seed, float sigma_proj,
                                                        bool use_labels) {
    CancelKey key = keygen(new_seed, codebook.m, codebook.n, codebook.d_sub, sigma_proj);
    ProtectedCodebook pcb = protect(codebook, table, key);
    ProtectedIndex index = build_protected_index(set, pcb, key, use_labels);
    return {std::move(key), std::move(index)};
}

double log2_bruteforce_cost(std::uint32_t n, std::uint32_t m) {
    if (n == 0 || m == 0) throw_param("log2_bruteforce_cost: n and m must be positive");
    // log2((n!)^m) = m * ln(n!) / ln 2, with ln(n!) = lgamma(n + 1).
    return double(m) * std::lgamma(double(n) + 1.0) / std::numbers::ln2;
}

CancelKey load_key(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    r.expect_magic("CKEY");
    if (std::uint8_t v = r.u8(); v != kKeyVersion) r.fail("unsupported version " + std::to_string(v));
    CancelKey key;
    key.m = r.u32();
    key.n = r.u32();
    key.d_sub = r.u32();
    key.sigma_proj = r.f32();
    r.bytes(key.key_id);
    if (key.m == 0 || key.n == 0 || key.d_sub == 0) r.fail("invalid key shape");
    key.perms.resize(std::size_t(key.m) * key.n);
    r.u32_array(key.perms);
    key.projs.resize(std::size_t(key.m) * key.d_sub * key.d_sub);
    r.f32_array(key.projs);
    r.expect_end();
    key.validate();
    KeyId expect = compute_key_id(key.m, key.n, key.d_sub, key.sigma_proj, key.perms, key.projs);
    if (expect != key.key_id) r.fail("key id does not match key content");
    return key;
}

void write_key(const CancelKey& key, const std::filesystem::path& path) {
    key.validate();
    ByteWriter w;
    w.magic("CKEY");
    w.u8(kKeyVersion);
    w.u32(key.m);
    w.u32(key.n);
    w.u32(key.d_sub);
    w.f32(key.sigma_proj);
    w.bytes(key.key_id);
    w.u32_array(key.perms);
    w.f32_array(key.projs);
    w.save(path);
}

ProtectedIndex load_protected_index(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    r.expect_magic("CPQI");
    if (std::uint8_t v = r.u8(); v != kIndexVersion) {
        r.fail("unsupported version " + std::to_string(v));
    }
    if (std::uint8_t dt = r.u8(); dt != kDtypeF32) r.fail("unsupported dtype");
    for (int i = 0; i < 3; ++i) {
        if (r.u8() != 0) r.fail("nonzero reserved byte");
    }
    ProtectedCodebook pcb;
    pcb.m = r.u32();
    pcb.n = r.u32();
    pcb.d_sub = r.u32();
    if (pcb.m == 0 || pcb.n == 0 || pcb.d_sub == 0) r.fail("invalid codebook shape");
    r.bytes(pcb.key_id);
    pcb.centroids.resize(std::size_t(pcb.m) * pcb.n * pcb.d_sub);
    r.f32_array(pcb.centroids);
    pcb.table.m = pcb.m;
    pcb.table.n = pcb.n;
    pcb.table.d.resize(std::size_t(pcb.m) * pcb.n * pcb.n);
    r.f32_array(pcb.table.d);

    std::uint32_t count = r.u32();
    ProtectedIndex index(std::move(pcb));
    std::vector<std::uint32_t> ids(count);
    r.u32_array(ids);
    const std::uint32_t m = index.pcb().m;
    const std::uint32_t n = index.pcb().n;
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

void write_protected_index(const ProtectedIndex& index, const std::filesystem::path& path) {
    const ProtectedCodebook& pcb = index.pcb();
    ByteWriter w;
    w.magic("CPQI");
    w.u8(kIndexVersion);
    w.u8(kDtypeF32);
    for (int i = 0; i < 3; ++i) w.u8(0);
    w.u32(pcb.m);
    w.u32(pcb.n);
    w.u32(pcb.d_sub);
    w.bytes(pcb.key_id);
    w.f32_array(pcb.centroids);
    w.f32_array(pcb.table.d);
    w.u32(static_cast<std::uint32_t>(index.size()));
    w.u32_array(index.ids());
    for (std::uint16_t c : index.flat_codes()) w.u32(c);
    w.save(path);
}

}  // namespace capq
