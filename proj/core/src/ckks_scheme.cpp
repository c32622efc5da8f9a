#include "capq/ckks/scheme.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "capq/binio.hpp"
#include "capq/error.hpp"

namespace capq {

namespace {

unsigned bit_length(std::uint64_t v) {
    return v == 0 ? 0 : 64u - static_cast<unsigned>(std::countl_zero(v));
}

}  // namespace

CkksScheme::CkksScheme(HeParams params) : ring_(std::move(params)) {
    const std::uint32_t chain = ring_.chain_length();
    relin_scalars_.resize(chain + 1);
    for (std::uint32_t level = 2; level <= chain; ++level) {
        auto& per_j = relin_scalars_[level];
        per_j.resize(level);
        for (std::uint32_t j = 0; j < level; ++j) {
            const std::uint64_t qj = ring_.modulus(j);
            // B_j = u_j * v_j with u_j the product of the other moduli and
            // v_j its inverse mod q_j; B_j is 1 mod q_j and 0 elsewhere.
            std::uint64_t vj = 1;
            {
                std::uint64_t u_mod_qj = 1;
                for (std::uint32_t k = 0; k < level; ++k) {
                    if (k != j) u_mod_qj = mul_mod(u_mod_qj, ring_.modulus(k) % qj, qj);
                }
                vj = inv_mod(u_mod_qj, qj);
            }
            const std::uint32_t digits = digit_count(j);
            per_j[j].resize(digits);
            for (std::uint32_t t = 0; t < digits; ++t) {
                per_j[j][t].resize(level);
                for (std::uint32_t i = 0; i < level; ++i) {
                    const std::uint64_t qi = ring_.modulus(i);
                    std::uint64_t u_mod_qi = 1;
                    for (std::uint32_t k = 0; k < level; ++k) {
                        if (k != j) u_mod_qi = mul_mod(u_mod_qi, ring_.modulus(k) % qi, qi);
                    }
                    std::uint64_t b = mul_mod(u_mod_qi, vj % qi, qi);
                    std::uint64_t shift = pow_mod(2, std::uint64_t(kDigitBits) * t, qi);
                    per_j[j][t][i] = mul_mod(b, shift, qi);
                }
            }
        }
    }
}

std::uint32_t CkksScheme::digit_count(std::uint32_t j) const {
    return (bit_length(ring_.modulus(j)) + kDigitBits - 1) / kDigitBits;
}

CkksKeySet CkksScheme::keygen(std::uint64_t seed) const {
    const std::uint32_t chain = ring_.chain_length();
    CkksKeySet ks;

    Rng sk_rng = Rng::derive(seed, 0, "he-sk");
    RingPoly s = ring_.sample_ternary(chain, sk_rng);
    ring_.to_ntt(s);
    ks.secret.s = s;

    Rng pka_rng = Rng::derive(seed, 0, "he-pk-a");
    Rng pke_rng = Rng::derive(seed, 0, "he-pk-e");
    RingPoly a = ring_.sample_uniform_ntt(chain, pka_rng);
    RingPoly e = ring_.sample_noise(chain, pke_rng);
    ring_.to_ntt(e);
    RingPoly p0 = ring_.mul(a, s);
    ring_.add_inplace(p0, e);
    ring_.negate_inplace(p0);
    ks.pub.p0 = std::move(p0);
    ks.pub.p1 = std::move(a);

    ks.eval.digit_bits = kDigitBits;
    std::uint32_t ctr = 0;
    for (std::uint32_t level = 2; level <= chain; ++level) {
        RingPoly s_lvl = ks.secret.s;
        s_lvl.levels = level;
        s_lvl.coeffs.resize(std::size_t(level) * ring_.degree());
        RingPoly s2 = ring_.mul(s_lvl, s_lvl);

        std::vector<std::pair<RingPoly, RingPoly>> rows;
        for (std::uint32_t j = 0; j < level; ++j) {
            for (std::uint32_t t = 0; t < digit_count(j); ++t) {
                Rng ra = Rng::derive(seed, ctr, "he-evk-a");
                Rng re = Rng::derive(seed, ctr, "he-evk-e");
                ++ctr;
                RingPoly ra_poly = ring_.sample_uniform_ntt(level, ra);
                RingPoly re_poly = ring_.sample_noise(level, re);
                ring_.to_ntt(re_poly);
                RingPoly b = ring_.mul(ra_poly, s_lvl);
                ring_.add_inplace(b, re_poly);
                ring_.negate_inplace(b);
                RingPoly term = ring_.mul_scalar(s2, relin_scalars_[level][j][t]);
                ring_.add_inplace(b, term);
                rows.emplace_back(std::move(b), std::move(ra_poly));
            }
        }
        ks.eval.rows[level] = std::move(rows);
    }
    return ks;
}

RingPoly CkksScheme::encode_query(std::span<const float> v, double scale) const {
    const std::uint32_t n = ring_.degree();
    if (v.empty() || v.size() > n / 2) {
        throw_param("encode: dim must be in [1, ring_degree/2], got " + std::to_string(v.size()));
    }
    std::vector<std::int64_t> c(n, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = double(v[i]);
        if (!std::isfinite(x) || std::abs(x) > 2.0) {
            throw_param("encode: component " + std::to_string(i) +
                        " outside the fixed-point range [-2, 2]");
        }
        c[i] = std::llround(x * scale);
    }
    return ring_.from_signed(c, ring_.chain_length());
}

RingPoly CkksScheme::encode_db(std::span<const float> v, double scale) const {
    const std::uint32_t n = ring_.degree();
    if (v.empty() || v.size() > n / 2) {
        throw_param("encode: dim must be in [1, ring_degree/2], got " + std::to_string(v.size()));
    }
    std::vector<std::int64_t> c(n, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = double(v[i]);
        if (!std::isfinite(x) || std::abs(x) > 2.0) {
            throw_param("encode: component " + std::to_string(i) +
                        " outside the fixed-point range [-2, 2]");
        }
        c[v.size() - 1 - i] = std::llround(x * scale);
    }
    return ring_.from_signed(c, ring_.chain_length());
}

CkksCiphertext CkksScheme::encrypt(const CkksPublic& pk, const RingPoly& plain, double scale,
                                   Rng& rng) const {
    RingPoly m = plain;
    if (!m.ntt) ring_.to_ntt(m);
    if (m.levels != pk.p0.levels) throw_param("encrypt: plaintext level mismatch");

    RingPoly u = ring_.sample_ternary(m.levels, rng);
    ring_.to_ntt(u);
    RingPoly e0 = ring_.sample_noise(m.levels, rng);
    RingPoly e1 = ring_.sample_noise(m.levels, rng);
    ring_.to_ntt(e0);
    ring_.to_ntt(e1);

    CkksCiphertext ct;
    ct.scale = scale;
    RingPoly c0 = ring_.mul(pk.p0, u);
    ring_.add_inplace(c0, e0);
    ring_.add_inplace(c0, m);
    RingPoly c1 = ring_.mul(pk.p1, u);
    ring_.add_inplace(c1, e1);
    ct.c.push_back(std::move(c0));
    ct.c.push_back(std::move(c1));
    return ct;
}

RingPoly CkksScheme::decrypt(const CkksSecret& sk, const CkksCiphertext& ct) const {
    if (ct.c.size() != 2) throw_state("decrypt: ciphertext must have two components");
    RingPoly s = sk.s;
    if (s.levels < ct.levels()) throw_param("decrypt: secret key level too low");
    s.levels = ct.levels();
    s.coeffs.resize(std::size_t(s.levels) * ring_.degree());
    RingPoly out = ring_.mul(ct.c[1], s);
    ring_.add_inplace(out, ct.c[0]);
    ring_.from_ntt(out);
    return out;
}

double CkksScheme::decode_coeff(const RingPoly& plain, std::uint32_t idx, double scale) const {
    __int128 v = ring_.lift_centered(plain, idx);
    return double(static_cast<long double>(v) / static_cast<long double>(scale));
}

std::vector<float> CkksScheme::decode_vector(const RingPoly& plain, std::uint32_t dim,
                                             bool reversed, double scale) const {
    if (dim == 0 || dim > ring_.degree() / 2) throw_param("decode_vector: invalid dim");
    std::vector<float> v(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
        std::uint32_t idx = reversed ? dim - 1 - i : i;
        v[i] = static_cast<float>(decode_coeff(plain, idx, scale));
    }
    return v;
}

CkksCiphertext CkksScheme::add(const CkksCiphertext& a, const CkksCiphertext& b) const {
    if (a.c.size() != 2 || b.c.size() != 2) throw_state("add: ciphertexts must have two components");
    if (a.levels() != b.levels()) throw_param("add: level mismatch");
    // Scales must agree to the last bit of the significand.
    double hi = std::nextafter(a.scale, std::numeric_limits<double>::infinity());
    double lo = std::nextafter(a.scale, -std::numeric_limits<double>::infinity());
    if (b.scale > hi || b.scale < lo) {
        throw_param("add: scale mismatch beyond 1 ulp");
    }
    CkksCiphertext out;
    out.scale = a.scale;
    out.c.push_back(ring_.add(a.c[0], b.c[0]));
    out.c.push_back(ring_.add(a.c[1], b.c[1]));
    return out;
}

CkksCiphertext CkksScheme::multiply_relin(const CkksEvalKeys& evk, const CkksCiphertext& a,
                                          const CkksCiphertext& b) const {
    if (a.c.size() != 2 || b.c.size() != 2) {
        throw_state("multiply: ciphertexts must have two components");
    }
    if (a.levels() != b.levels()) throw_param("multiply: level mismatch");
    const std::uint32_t level = a.levels();
    if (level < 2) throw_state("multiply: no rescale level remaining");
    auto it = evk.rows.find(level);
    if (it == evk.rows.end()) throw_key("multiply: no relinearization rows for this level");

    RingPoly d0 = ring_.mul(a.c[0], b.c[0]);
    RingPoly d1 = ring_.mul(a.c[0], b.c[1]);
    ring_.add_inplace(d1, ring_.mul(a.c[1], b.c[0]));
    RingPoly d2 = ring_.mul(a.c[1], b.c[1]);

    // Digit-decompose d2 per modulus and fold through the relin rows.
    ring_.from_ntt(d2);
    const std::uint32_t n = ring_.degree();
    std::size_t row_idx = 0;
    std::vector<std::int64_t> digit(n);
    for (std::uint32_t j = 0; j < level; ++j) {
        const std::uint64_t* src = ring_.comp(d2, j);
        const std::uint32_t digits = digit_count(j);
        for (std::uint32_t t = 0; t < digits; ++t, ++row_idx) {
            for (std::uint32_t i = 0; i < n; ++i) {
                digit[i] = std::int64_t((src[i] >> (kDigitBits * t)) & ((1u << kDigitBits) - 1));
            }
            RingPoly dp = ring_.from_signed(digit, level);
            ring_.to_ntt(dp);
            const auto& row = it->second[row_idx];
            ring_.mul_acc(dp, row.first, d0);
            ring_.mul_acc(dp, row.second, d1);
        }
    }

    CkksCiphertext out;
    out.scale = a.scale * b.scale;
    out.c.push_back(std::move(d0));
    out.c.push_back(std::move(d1));
    return out;
}

CkksCiphertext CkksScheme::rescale(const CkksCiphertext& ct) const {
    if (ct.c.size() != 2) throw_state("rescale: ciphertext must have two components");
    if (ct.levels() < 2) throw_state("rescale: no level left to drop");
    const std::uint64_t ql = ring_.modulus(ct.levels() - 1);
    CkksCiphertext out;
    out.scale = ct.scale / double(ql);
    for (const RingPoly& comp : ct.c) {
        RingPoly p = comp;
        ring_.from_ntt(p);
        ring_.rescale_inplace(p);
        ring_.to_ntt(p);
        out.c.push_back(std::move(p));
    }
    return out;
}

std::vector<std::uint8_t> CkksScheme::serialize(const CkksCiphertext& ct, std::uint32_t dim,
                                                std::uint8_t packing) const {
    if (ct.c.empty()) throw_state("serialize: empty ciphertext");
    ByteWriter w;
    w.magic("CKT1");
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(ct.c.size()));
    w.u8(static_cast<std::uint8_t>(ct.levels()));
    w.u8(packing);
    w.u32(ring_.degree());
    w.u32(dim);
    w.f64(ct.scale);
    for (const RingPoly& comp : ct.c) {
        RingPoly p = comp;
        if (p.ntt) ring_.from_ntt(p);
        w.u64_array(p.coeffs);
    }
    return w.data();
}

CkksCiphertext CkksScheme::parse(std::span<const std::uint8_t> data, std::uint32_t& dim,
                                 std::uint8_t& packing) const {
    ByteReader r(data, "CKT1");
    r.expect_magic("CKT1");
    if (std::uint8_t v = r.u8(); v != 1) r.fail("unsupported version " + std::to_string(v));
    std::uint8_t comps = r.u8();
    std::uint8_t levels = r.u8();
    packing = r.u8();
    std::uint32_t degree = r.u32();
    dim = r.u32();
    if (comps != 2) r.fail("expected two components");
    if (levels == 0 || levels > ring_.chain_length()) r.fail("invalid level count");
    if (degree != ring_.degree()) r.fail("ring degree mismatch");
    if (dim == 0 || dim > ring_.degree() / 2) r.fail("invalid dim");
    if (packing > 2) r.fail("invalid packing tag");
    CkksCiphertext ct;
    ct.scale = r.f64();
    if (!(ct.scale > 0.0) || !std::isfinite(ct.scale)) r.fail("invalid scale");
    for (unsigned c = 0; c < comps; ++c) {
        RingPoly p = ring_.make(levels, false);
        r.u64_array(p.coeffs);
        for (std::uint32_t j = 0; j < levels; ++j) {
            const std::uint64_t q = ring_.modulus(j);
            const std::uint64_t* pj = ring_.comp(p, j);
            for (std::uint32_t i = 0; i < ring_.degree(); ++i) {
                if (pj[i] >= q) r.fail("coefficient out of range");
            }
        }
        ring_.to_ntt(p);
        ct.c.push_back(std::move(p));
    }
    r.expect_end();
    return ct;
}

}  // namespace capq
