#include "capq/sim_backend.hpp"

#include <bit>
#include <cstring>

#include "capq/digest.hpp"
#include "capq/error.hpp"

namespace capq {

namespace {

/// One root per key set; the three role keys are distinct objects so a
/// holder of one role cannot be handed another by accident, but they share
/// the root that drives the keystream.
struct SimKeyBase : KeyMaterial {
    std::array<std::uint8_t, 32> root{};
};
struct SimPublicKey final : SimKeyBase {};
struct SimSecretKey final : SimKeyBase {};
struct SimEvalKey final : SimKeyBase {};

template <typename K>
const K& cast_key(const std::shared_ptr<const KeyMaterial>& key, const char* role) {
    if (!key) throw_key(std::string("sim: missing ") + role + " key");
    const auto* k = dynamic_cast<const K*>(key.get());
    if (!k) throw_key(std::string("sim: key material is not a ") + role + " key");
    return *k;
}

void apply_keystream(const std::array<std::uint8_t, 32>& root, std::uint64_t nonce,
                     std::span<std::uint8_t> data) {
    std::uint32_t block = 0;
    std::size_t off = 0;
    while (off < data.size()) {
        Sha256Digest ks = DigestStream{}.bytes(root).text("mask").u64(nonce).u32(block).finish();
        std::size_t take = std::min<std::size_t>(ks.size(), data.size() - off);
        for (std::size_t i = 0; i < take; ++i) data[off + i] ^= ks[i];
        off += take;
        ++block;
    }
}

std::uint64_t read_u64_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

void write_u64_le(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

HeCapabilities SimBackend::capabilities() const {
    return {.max_dim = 1u << 20, .score_tolerance = 0.0};
}

HeKeySet SimBackend::keygen(std::uint64_t seed, std::uint32_t dim) {
    if (dim == 0) throw_param("sim keygen: dim must be positive");
    if (dim > capabilities().max_dim) {
        throw_param("sim keygen: dim " + std::to_string(dim) + " exceeds capacity " +
                    std::to_string(capabilities().max_dim));
    }
    Sha256Digest root = DigestStream{}.text("sim-root").u64(seed).finish();
    Sha256Digest fp_digest = DigestStream{}.bytes(root).text("fingerprint").finish();
    std::uint64_t fp = read_u64_le(fp_digest.data());

    auto fill = [&](auto key) {
        key->root = root;
        key->fingerprint = fp;
        return key;
    };
    HeKeySet ks;
    ks.public_key = fill(std::make_shared<SimPublicKey>());
    ks.secret_key = fill(std::make_shared<SimSecretKey>());
    ks.eval_key = fill(std::make_shared<SimEvalKey>());
    ks.fingerprint = fp;
    return ks;
}

CipherVector SimBackend::encrypt(const PublicKey& key, std::span<const float> v,
                                 Packing packing) {
    const auto& pk = cast_key<SimPublicKey>(key, "public");
    if (v.empty()) throw_param("sim encrypt: empty vector");
    if (v.size() > capabilities().max_dim) throw_param("sim encrypt: dim exceeds capacity");

    std::uint64_t nonce = nonce_counter_++;
    CipherVector ct;
    ct.backend_id = id();
    ct.dim = static_cast<std::uint32_t>(v.size());
    ct.packing = packing;
    ct.fingerprint = pk.fingerprint;
    ct.payload.resize(8 + v.size() * 4);
    write_u64_le(ct.payload.data(), nonce);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v[i]);
        for (int b = 0; b < 4; ++b) {
            ct.payload[8 + i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
    }
    apply_keystream(pk.root, nonce, std::span(ct.payload).subspan(8));
    ++counts_.encryptions;
    return ct;
}

CipherScore SimBackend::inner_product(const EvalKey& key, const CipherVector& query,
                                      const CipherVector& db) {
    const auto& ek = cast_key<SimEvalKey>(key, "evaluation");
    if (query.backend_id != id() || db.backend_id != id()) {
        throw_param("sim inner_product: ciphertext from a different backend");
    }
    if (query.fingerprint != ek.fingerprint || db.fingerprint != ek.fingerprint) {
        throw_key("sim inner_product: ciphertext fingerprint does not match evaluation key");
    }
    if (query.packing != Packing::query || db.packing != Packing::database) {
        throw_param("sim inner_product: operands must use query and database packing");
    }
    if (query.dim != db.dim) {
        throw_param("sim inner_product: dims " + std::to_string(query.dim) + " and " +
                    std::to_string(db.dim) + " differ");
    }

    auto unmask = [&](const CipherVector& ct) {
        if (ct.payload.size() != 8 + std::size_t(ct.dim) * 4) {
            throw_data("sim inner_product: bad payload size");
        }
        std::vector<std::uint8_t> body(ct.payload.begin() + 8, ct.payload.end());
        apply_keystream(ek.root, read_u64_le(ct.payload.data()), body);
        std::vector<float> v(ct.dim);
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= std::uint32_t(body[i * 4 + b]) << (8 * b);
            v[i] = std::bit_cast<float>(bits);
        }
        return v;
    };
    std::vector<float> q = unmask(query);
    std::vector<float> x = unmask(db);
    double dot = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) dot += double(q[i]) * double(x[i]);

    std::uint64_t nonce = nonce_counter_++;
    CipherScore cs;
    cs.backend_id = id();
    cs.fingerprint = ek.fingerprint;
    cs.payload.resize(16);
    write_u64_le(cs.payload.data(), nonce);
    write_u64_le(cs.payload.data() + 8, std::bit_cast<std::uint64_t>(dot));
    apply_keystream(ek.root, nonce, std::span(cs.payload).subspan(8));
    ++counts_.inner_products;
    return cs;
}

double SimBackend::decrypt_score(const SecretKey& key, const CipherScore& score) {
    const auto& sk = cast_key<SimSecretKey>(key, "secret");
    if (score.backend_id != id()) throw_param("sim decrypt_score: foreign ciphertext");
    if (score.fingerprint != sk.fingerprint) {
        throw_key("sim decrypt_score: fingerprint does not match secret key");
    }
    if (score.payload.size() != 16) throw_data("sim decrypt_score: bad payload size");
    std::array<std::uint8_t, 8> body;
    std::memcpy(body.data(), score.payload.data() + 8, 8);
    apply_keystream(sk.root, read_u64_le(score.payload.data()), body);
    ++counts_.decryptions;
    return std::bit_cast<double>(read_u64_le(body.data()));
}

std::vector<float> SimBackend::decrypt_vector(const SecretKey& key, const CipherVector& ct) {
    const auto& sk = cast_key<SimSecretKey>(key, "secret");
    if (ct.backend_id != id()) throw_param("sim decrypt_vector: foreign ciphertext");
    if (ct.fingerprint != sk.fingerprint) {
        throw_key("sim decrypt_vector: fingerprint does not match secret key");
    }
    if (ct.payload.size() != 8 + std::size_t(ct.dim) * 4) {
        throw_data("sim decrypt_vector: bad payload size");
    }
    std::vector<std::uint8_t> body(ct.payload.begin() + 8, ct.payload.end());
    apply_keystream(sk.root, read_u64_le(ct.payload.data()), body);
    std::vector<float> v(ct.dim);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(body[i * 4 + b]) << (8 * b);
        v[i] = std::bit_cast<float>(bits);
    }
    ++counts_.decryptions;
    return v;
}

}  // namespace capq
