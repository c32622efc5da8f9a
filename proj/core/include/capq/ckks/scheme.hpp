/** \file
 * Leveled approximate-arithmetic scheme over the negacyclic ring.
 *
 * Vectors are packed into polynomial coefficients: queries in ascending
 * order scaled by `scale`, database vectors reversed, so one ring multiply
 * places the scaled inner product in coefficient dim - 1.  One multiply
 * plus one rescale always fits in the default two-level chain.
 *
 * Keys: ternary secret, RLWE public key, and relinearization keys built per
 * level with base-2^15 digit decomposition of the quadratic term.
 */
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "capq/ckks/poly.hpp"

namespace capq {

struct CkksSecret {
    RingPoly s;  // NTT form, full chain
};

struct CkksPublic {
    RingPoly p0, p1;  // NTT form, full chain
};

/// Relinearization rows indexed by level, then by (modulus, digit) pairs.
struct CkksEvalKeys {
    std::uint32_t digit_bits = 0;
    std::map<std::uint32_t, std::vector<std::pair<RingPoly, RingPoly>>> rows;
};

struct CkksKeySet {
    CkksSecret secret;
    CkksPublic pub;
    CkksEvalKeys eval;
};

/// Components are kept in NTT form between operations.
struct CkksCiphertext {
    std::vector<RingPoly> c;
    double scale = 0.0;

    std::uint32_t levels() const { return c.empty() ? 0 : c[0].levels; }
};

class CkksScheme {
public:
    explicit CkksScheme(HeParams params);

    const RingContext& ring() const noexcept { return ring_; }
    const HeParams& params() const noexcept { return ring_.params(); }
    std::uint32_t digit_bits() const noexcept { return kDigitBits; }

    CkksKeySet keygen(std::uint64_t seed) const;

    /// Coefficients v[i] * scale at positions 0..dim-1; |v[i]| <= 2.
    RingPoly encode_query(std::span<const float> v, double scale) const;
    /// Same values at reversed positions dim-1..0.
    RingPoly encode_db(std::span<const float> v, double scale) const;

    CkksCiphertext encrypt(const CkksPublic& pk, const RingPoly& plain, double scale,
                           Rng& rng) const;
    /// c0 + c1*s in coefficient form; the caller decodes coefficients.
    RingPoly decrypt(const CkksSecret& sk, const CkksCiphertext& ct) const;

    double decode_coeff(const RingPoly& plain, std::uint32_t idx, double scale) const;
    std::vector<float> decode_vector(const RingPoly& plain, std::uint32_t dim, bool reversed,
                                     double scale) const;

    CkksCiphertext add(const CkksCiphertext& a, const CkksCiphertext& b) const;
    /// Tensor product immediately relinearized back to two components.
    /// Requires equal levels with at least one rescale level remaining.
    CkksCiphertext multiply_relin(const CkksEvalKeys& evk, const CkksCiphertext& a,
                                  const CkksCiphertext& b) const;
    /// Drops the last modulus and divides the scale by it.
    CkksCiphertext rescale(const CkksCiphertext& ct) const;

    std::vector<std::uint8_t> serialize(const CkksCiphertext& ct, std::uint32_t dim,
                                        std::uint8_t packing) const;
    CkksCiphertext parse(std::span<const std::uint8_t> data, std::uint32_t& dim,
                         std::uint8_t& packing) const;

private:
    static constexpr std::uint32_t kDigitBits = 15;

    std::uint32_t digit_count(std::uint32_t j) const;

    RingContext ring_;
    // 2^(digit_bits * t) * B_j mod q_i per level, with B_j the CRT basis
    // element for modulus j in the level's chain.
    // relin_scalars_[level][j][t][i]
    std::vector<std::vector<std::vector<std::vector<std::uint64_t>>>> relin_scalars_;
};

}  // namespace capq
