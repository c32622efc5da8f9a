/** \file
 * RNS polynomials over Z_q[X]/(X^N + 1) and the arithmetic context that
 * operates on them.
 *
 * A polynomial holds one residue array per active modulus.  Dropping the
 * last modulus implements the rescaling division; lifting through the CRT
 * recovers centered integer coefficients for decoding.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "capq/ckks/ntt.hpp"
#include "capq/ckks/params.hpp"
#include "capq/rng.hpp"

namespace capq {

struct RingPoly {
    std::uint32_t levels = 0;  // active moduli, a prefix of the chain
    bool ntt = false;
    std::vector<std::uint64_t> coeffs;  // levels x degree, modulus-major
};

class RingContext {
public:
    explicit RingContext(HeParams params);

    const HeParams& params() const noexcept { return params_; }
    std::uint32_t degree() const noexcept { return params_.ring_degree; }
    std::uint32_t chain_length() const noexcept { return params_.levels(); }
    std::uint64_t modulus(std::uint32_t j) const { return params_.coeff_moduli[j]; }

    RingPoly make(std::uint32_t levels, bool ntt_form) const;

    std::uint64_t* comp(RingPoly& p, std::uint32_t j) const {
        return p.coeffs.data() + std::size_t(j) * degree();
    }
    const std::uint64_t* comp(const RingPoly& p, std::uint32_t j) const {
        return p.coeffs.data() + std::size_t(j) * degree();
    }

    void to_ntt(RingPoly& p) const;
    void from_ntt(RingPoly& p) const;

    RingPoly add(const RingPoly& a, const RingPoly& b) const;
    RingPoly sub(const RingPoly& a, const RingPoly& b) const;
    void add_inplace(RingPoly& a, const RingPoly& b) const;
    void negate_inplace(RingPoly& a) const;

    /// Pointwise product; both operands must be in NTT form.
    RingPoly mul(const RingPoly& a, const RingPoly& b) const;
    void mul_acc(const RingPoly& a, const RingPoly& b, RingPoly& acc) const;
    /// Multiplies component j by scalars[j].
    RingPoly mul_scalar(const RingPoly& a, std::span<const std::uint64_t> scalars) const;

    /// Divides by the last active modulus with centered rounding; the poly
    /// must be in coefficient form.  Drops one level.
    void rescale_inplace(RingPoly& p) const;

    /// Centered integer coefficient via Garner lifting; coefficient form.
    __int128 lift_centered(const RingPoly& p, std::uint32_t idx) const;

    /// Builds a poly from centered integer coefficients.
    RingPoly from_signed(std::span<const std::int64_t> coeffs, std::uint32_t levels) const;

    /// Uniform residues, produced directly in NTT form.
    RingPoly sample_uniform_ntt(std::uint32_t levels, Rng& rng) const;
    /// Uniform ternary {-1,0,1} coefficients, coefficient form.
    RingPoly sample_ternary(std::uint32_t levels, Rng& rng) const;
    /// Centered binomial noise of variance 10, coefficient form.
    RingPoly sample_noise(std::uint32_t levels, Rng& rng) const;

private:
    void check_match(const RingPoly& a, const RingPoly& b) const;

    HeParams params_;
    std::vector<NttTables> ntt_;
    // inv_q_last_[l][i]: inverse of modulus l modulo modulus i, for i < l.
    std::vector<std::vector<std::uint64_t>> inv_q_last_;
};

}  // namespace capq
