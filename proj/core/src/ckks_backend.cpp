#include "capq/ckks/backend.hpp"

#include <string>

#include "capq/digest.hpp"
#include "capq/error.hpp"

namespace capq {

namespace {

constexpr std::uint8_t kPackingScore = 2;

struct CkksPublicKeyM final : KeyMaterial {
    std::shared_ptr<const CkksPublic> pk;
};
struct CkksSecretKeyM final : KeyMaterial {
    std::shared_ptr<const CkksSecret> sk;
};
struct CkksEvalKeyM final : KeyMaterial {
    std::shared_ptr<const CkksEvalKeys> evk;
};

template <typename K>
const K& cast_key(const std::shared_ptr<const KeyMaterial>& key, const char* role) {
    if (!key) throw_key(std::string("ckks_lite: missing ") + role + " key");
    const auto* k = dynamic_cast<const K*>(key.get());
    if (!k) throw_key(std::string("ckks_lite: key material is not a ") + role + " key");
    return *k;
}

}  // namespace

CkksBackend::CkksBackend(HeParams params) : scheme_(std::move(params)) {}

HeCapabilities CkksBackend::capabilities() const {
    // Reversed packing needs the inner product to land inside the clear
    // half of the ring, so capacity is half the degree.
    return {.max_dim = scheme_.params().ring_degree / 2, .score_tolerance = 1e-2};
}

HeKeySet CkksBackend::keygen(std::uint64_t seed, std::uint32_t dim) {
    if (dim == 0) throw_param("ckks_lite keygen: dim must be positive");
    if (dim > capabilities().max_dim) {
        throw_param("ckks_lite keygen: dim " + std::to_string(dim) + " exceeds capacity " +
                    std::to_string(capabilities().max_dim) + " (ring degree / 2)");
    }
    DigestStream ds;
    ds.text("ckks-fingerprint").u64(seed).u32(scheme_.params().ring_degree);
    for (std::uint64_t q : scheme_.params().coeff_moduli) ds.u64(q);
    Sha256Digest d = ds.finish();
    std::uint64_t fp = 0;
    for (int i = 0; i < 8; ++i) fp |= std::uint64_t(d[i]) << (8 * i);

    CkksKeySet keys = scheme_.keygen(seed);
    auto pub = std::make_shared<CkksPublicKeyM>();
    pub->pk = std::make_shared<const CkksPublic>(std::move(keys.pub));
    pub->fingerprint = fp;
    auto sec = std::make_shared<CkksSecretKeyM>();
    sec->sk = std::make_shared<const CkksSecret>(std::move(keys.secret));
    sec->fingerprint = fp;
    auto eval = std::make_shared<CkksEvalKeyM>();
    eval->evk = std::make_shared<const CkksEvalKeys>(std::move(keys.eval));
    eval->fingerprint = fp;

    HeKeySet out;
    out.public_key = pub;
    out.secret_key = sec;
    out.eval_key = eval;
    out.fingerprint = fp;
    return out;
}

CipherVector CkksBackend::encrypt(const PublicKey& key, std::span<const float> v,
                                  Packing packing) {
    const auto& pk = cast_key<CkksPublicKeyM>(key, "public");
    if (v.empty()) throw_param("ckks_lite encrypt: empty vector");
    if (v.size() > capabilities().max_dim) {
        throw_param("ckks_lite encrypt: dim " + std::to_string(v.size()) + " exceeds capacity " +
                    std::to_string(capabilities().max_dim) + " (ring degree / 2)");
    }
    const double scale = scheme_.params().scale;
    RingPoly plain = packing == Packing::query ? scheme_.encode_query(v, scale)
                                               : scheme_.encode_db(v, scale);
    Rng rng = Rng::derive(pk.fingerprint, 0, "he-enc-" + std::to_string(enc_counter_++));
    CkksCiphertext ct = scheme_.encrypt(*pk.pk, plain, scale, rng);

    CipherVector out;
    out.backend_id = id();
    out.dim = static_cast<std::uint32_t>(v.size());
    out.packing = packing;
    out.fingerprint = pk.fingerprint;
    out.payload = scheme_.serialize(ct, out.dim, static_cast<std::uint8_t>(packing));
    ++counts_.encryptions;
    return out;
}

CipherScore CkksBackend::inner_product(const EvalKey& key, const CipherVector& query,
                                       const CipherVector& db) {
    const auto& ek = cast_key<CkksEvalKeyM>(key, "evaluation");
    if (query.backend_id != id() || db.backend_id != id()) {
        throw_param("ckks_lite inner_product: ciphertext from a different backend");
    }
    if (query.fingerprint != ek.fingerprint || db.fingerprint != ek.fingerprint) {
        throw_key("ckks_lite inner_product: ciphertext fingerprint does not match evaluation key");
    }
    if (query.packing != Packing::query || db.packing != Packing::database) {
        throw_param("ckks_lite inner_product: operands must use query and database packing");
    }
    if (query.dim != db.dim) {
        throw_param("ckks_lite inner_product: dims " + std::to_string(query.dim) + " and " +
                    std::to_string(db.dim) + " differ");
    }
    std::uint32_t qdim = 0, xdim = 0;
    std::uint8_t qpack = 0, xpack = 0;
    CkksCiphertext cq = scheme_.parse(query.payload, qdim, qpack);
    CkksCiphertext cx = scheme_.parse(db.payload, xdim, xpack);
    if (qdim != query.dim || xdim != db.dim) {
        throw_data("ckks_lite inner_product: payload dim disagrees with header");
    }
    if (qpack != static_cast<std::uint8_t>(Packing::query) ||
        xpack != static_cast<std::uint8_t>(Packing::database)) {
        throw_data("ckks_lite inner_product: payload packing disagrees with header");
    }

    CkksCiphertext prod = scheme_.multiply_relin(*ek.evk, cq, cx);
    CkksCiphertext scaled = scheme_.rescale(prod);

    CipherScore out;
    out.backend_id = id();
    out.fingerprint = ek.fingerprint;
    out.payload = scheme_.serialize(scaled, query.dim, kPackingScore);
    ++counts_.inner_products;
    return out;
}

double CkksBackend::decrypt_score(const SecretKey& key, const CipherScore& score) {
    const auto& sk = cast_key<CkksSecretKeyM>(key, "secret");
    if (score.backend_id != id()) throw_param("ckks_lite decrypt_score: foreign ciphertext");
    if (score.fingerprint != sk.fingerprint) {
        throw_key("ckks_lite decrypt_score: fingerprint does not match secret key");
    }
    std::uint32_t dim = 0;
    std::uint8_t packing = 0;
    CkksCiphertext ct = scheme_.parse(score.payload, dim, packing);
    if (packing != kPackingScore) throw_data("ckks_lite decrypt_score: payload is not a score");
    RingPoly plain = scheme_.decrypt(*sk.sk, ct);
    ++counts_.decryptions;
    return scheme_.decode_coeff(plain, dim - 1, ct.scale);
}

std::vector<float> CkksBackend::decrypt_vector(const SecretKey& key, const CipherVector& cv) {
    const auto& sk = cast_key<CkksSecretKeyM>(key, "secret");
    if (cv.backend_id != id()) throw_param("ckks_lite decrypt_vector: foreign ciphertext");
    if (cv.fingerprint != sk.fingerprint) {
        throw_key("ckks_lite decrypt_vector: fingerprint does not match secret key");
    }
    std::uint32_t dim = 0;
    std::uint8_t packing = 0;
    CkksCiphertext ct = scheme_.parse(cv.payload, dim, packing);
    if (packing > 1 || dim != cv.dim) throw_data("ckks_lite decrypt_vector: payload mismatch");
    RingPoly plain = scheme_.decrypt(*sk.sk, ct);
    ++counts_.decryptions;
    return scheme_.decode_vector(plain, dim, packing == static_cast<std::uint8_t>(Packing::database),
                                 ct.scale);
}

}  // namespace capq
