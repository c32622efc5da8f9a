#include "capq/ckks/poly.hpp"

#include <bit>

#include "capq/error.hpp"

namespace capq {

RingContext::RingContext(HeParams params) : params_(std::move(params)) {
    params_.validate();
    ntt_.reserve(params_.levels());
    for (std::uint64_t q : params_.coeff_moduli) ntt_.emplace_back(q, params_.ring_degree);
    inv_q_last_.resize(params_.levels());
    for (std::uint32_t l = 1; l < params_.levels(); ++l) {
        inv_q_last_[l].resize(l);
        for (std::uint32_t i = 0; i < l; ++i) {
            std::uint64_t qi = modulus(i);
            inv_q_last_[l][i] = inv_mod(modulus(l) % qi, qi);
        }
    }
}

RingPoly RingContext::make(std::uint32_t levels, bool ntt_form) const {
    if (levels == 0 || levels > chain_length()) throw_param("RingContext: invalid level count");
    RingPoly p;
    p.levels = levels;
    p.ntt = ntt_form;
    p.coeffs.assign(std::size_t(levels) * degree(), 0);
    return p;
}

void RingContext::to_ntt(RingPoly& p) const {
    if (p.ntt) throw_state("RingContext::to_ntt: already in NTT form");
    for (std::uint32_t j = 0; j < p.levels; ++j) ntt_[j].forward(comp(p, j));
    p.ntt = true;
}

void RingContext::from_ntt(RingPoly& p) const {
    if (!p.ntt) throw_state("RingContext::from_ntt: not in NTT form");
    for (std::uint32_t j = 0; j < p.levels; ++j) ntt_[j].inverse(comp(p, j));
    p.ntt = false;
}

void RingContext::check_match(const RingPoly& a, const RingPoly& b) const {
    if (a.levels != b.levels) throw_param("RingContext: operand levels differ");
    if (a.ntt != b.ntt) throw_state("RingContext: operand forms differ");
}

RingPoly RingContext::add(const RingPoly& a, const RingPoly& b) const {
    RingPoly out = a;
    add_inplace(out, b);
    return out;
}

void RingContext::add_inplace(RingPoly& a, const RingPoly& b) const {
    check_match(a, b);
    const std::uint32_t n = degree();
    for (std::uint32_t j = 0; j < a.levels; ++j) {
        const std::uint64_t q = modulus(j);
        std::uint64_t* pa = comp(a, j);
        const std::uint64_t* pb = comp(b, j);
        for (std::uint32_t i = 0; i < n; ++i) pa[i] = add_mod(pa[i], pb[i], q);
    }
}

RingPoly RingContext::sub(const RingPoly& a, const RingPoly& b) const {
    check_match(a, b);
    RingPoly out = a;
    const std::uint32_t n = degree();
    for (std::uint32_t j = 0; j < a.levels; ++j) {
        const std::uint64_t q = modulus(j);
        std::uint64_t* po = comp(out, j);
        const std::uint64_t* pb = comp(b, j);
        for (std::uint32_t i = 0; i < n; ++i) po[i] = sub_mod(po[i], pb[i], q);
    }
    return out;
}

void RingContext::negate_inplace(RingPoly& a) const {
    const std::uint32_t n = degree();
    for (std::uint32_t j = 0; j < a.levels; ++j) {
        const std::uint64_t q = modulus(j);
        std::uint64_t* pa = comp(a, j);
        for (std::uint32_t i = 0; i < n; ++i) pa[i] = pa[i] == 0 ? 0 : q - pa[i];
    }
}

RingPoly RingContext::mul(const RingPoly& a, const RingPoly& b) const {
    check_match(a, b);
    if (!a.ntt) throw_state("RingContext::mul: operands must be in NTT form");
    RingPoly out = a;
    const std::uint32_t n = degree();
    for (std::uint32_t j = 0; j < a.levels; ++j) {
        const std::uint64_t q = modulus(j);
        std::uint64_t* po = comp(out, j);
        const std::uint64_t* pb = comp(b, j);
        for (std::uint32_t i = 0; i < n; ++i) po[i] = mul_mod(po[i], pb[i], q);
    }
    return out;
}

void RingContext::mul_acc(const RingPoly& a, const RingPoly& b, RingPoly& acc) const {
    check_match(a, b);
    check_match(a, acc);
    if (!a.ntt) throw_state("RingContext::mul_acc: operands must be in NTT form");
    const std::uint32_t n = degree();
    for (std::uint32_t j = 0; j < a.levels; ++j) {
        const std::uint64_t q = modulus(j);
        const std::uint64_t* pa = comp(a, j);
        const std::uint64_t* pb = comp(b, j);
        std::uint64_t* pc = comp(acc, j);
        for (std::uint32_t i = 0; i < n; ++i) {
            pc[i] = add_mod(pc[i], mul_mod(pa[i], pb[i], q), q);
        }
    }
}

RingPoly RingContext::mul_scalar(const RingPoly& a, std::span<const std::uint64_t> scalars) const {
    if (scalars.size() != a.levels) throw_param("RingContext::mul_scalar: scalar count mismatch");
    RingPoly out = a;
    const std::uint32_t n = degree();
    for (std::uint32_t j = 0; j < a.levels; ++j) {
        const std::uint64_t q = modulus(j);
        const std::uint64_t s = scalars[j] % q;
        std::uint64_t* po = comp(out, j);
        for (std::uint32_t i = 0; i < n; ++i) po[i] = mul_mod(po[i], s, q);
    }
    return out;
}

void RingContext::rescale_inplace(RingPoly& p) const {
    if (p.ntt) throw_state("RingContext::rescale_inplace: requires coefficient form");
    if (p.levels < 2) throw_state("RingContext::rescale_inplace: no level left to drop");
    const std::uint32_t last = p.levels - 1;
    const std::uint64_t ql = modulus(last);
    const std::uint64_t half = ql >> 1;
    const std::uint32_t n = degree();
    const std::uint64_t* pl = comp(p, last);
    for (std::uint32_t j = 0; j < last; ++j) {
        const std::uint64_t q = modulus(j);
        const std::uint64_t inv = inv_q_last_[last][j];
        std::uint64_t* pj = comp(p, j);
        for (std::uint32_t i = 0; i < n; ++i) {
            // Subtract the centered residue of the dropped modulus, then
            // divide exactly; this rounds the quotient to nearest.
            std::uint64_t r = pl[i];
            std::uint64_t rj = r > half ? add_mod(pj[i], (ql - r) % q, q)
                                        : sub_mod(pj[i], r % q, q);
            pj[i] = mul_mod(rj, inv, q);
        }
    }
    p.levels = last;
    p.coeffs.resize(std::size_t(p.levels) * n);
}

__int128 RingContext::lift_centered(const RingPoly& p, std::uint32_t idx) const {
    if (p.ntt) throw_state("RingContext::lift_centered: requires coefficient form");
    if (idx >= degree()) throw_param("RingContext::lift_centered: index out of range");
    // Garner: x = v0 + q0*(v1 + q1*(v2 + ...)) with mixed-radix digits.
    const std::uint32_t l = p.levels;
    std::vector<std::uint64_t> digits(l);
    for (std::uint32_t j = 0; j < l; ++j) {
        std::uint64_t qj = modulus(j);
        // Value of the partial reconstruction mod qj.
        std::uint64_t val = comp(p, j)[idx] % qj;
        std::uint64_t coef = 1;
        std::uint64_t acc = 0;
        for (std::uint32_t t = 0; t < j; ++t) {
            acc = add_mod(acc, mul_mod(digits[t], coef, qj), qj);
            coef = mul_mod(coef, modulus(t) % qj, qj);
        }
        std::uint64_t diff = sub_mod(val, acc, qj);
        digits[j] = mul_mod(diff, inv_mod(coef, qj), qj);
    }
    unsigned __int128 x = 0;
    unsigned __int128 radix = 1;
    unsigned __int128 big_q = 1;
    for (std::uint32_t j = 0; j < l; ++j) {
        x += radix * digits[j];
        radix *= modulus(j);
        big_q *= modulus(j);
    }
    if (x > big_q / 2) return static_cast<__int128>(x) - static_cast<__int128>(big_q);
    return static_cast<__int128>(x);
}

RingPoly RingContext::from_signed(std::span<const std::int64_t> coeffs, std::uint32_t levels) const {
    if (coeffs.size() != degree()) throw_param("RingContext::from_signed: wrong coefficient count");
    RingPoly p = make(levels, false);
    for (std::uint32_t j = 0; j < levels; ++j) {
        const std::uint64_t q = modulus(j);
        std::uint64_t* pj = comp(p, j);
        for (std::uint32_t i = 0; i < degree(); ++i) {
            std::int64_t c = coeffs[i];
            pj[i] = c >= 0 ? std::uint64_t(c) % q : q - (std::uint64_t(-(c + 1)) + 1) % q;
            if (pj[i] == q) pj[i] = 0;
        }
    }
    return p;
}

RingPoly RingContext::sample_uniform_ntt(std::uint32_t levels, Rng& rng) const {
    RingPoly p = make(levels, true);
    for (std::uint32_t j = 0; j < levels; ++j) {
        const std::uint64_t q = modulus(j);
        std::uint64_t* pj = comp(p, j);
        for (std::uint32_t i = 0; i < degree(); ++i) pj[i] = rng.below(q);
    }
    return p;
}

RingPoly RingContext::sample_ternary(std::uint32_t levels, Rng& rng) const {
    RingPoly p = make(levels, false);
    std::vector<std::int64_t> c(degree());
    for (auto& x : c) x = std::int64_t(rng.below(3)) - 1;
    return from_signed(c, levels);
}

RingPoly RingContext::sample_noise(std::uint32_t levels, Rng& rng) const {
    // Centered binomial: popcount difference of two 20-bit windows gives
    // integer noise of variance 10 from a single draw per coefficient.
    std::vector<std::int64_t> c(degree());
    for (auto& x : c) {
        std::uint64_t bits = rng.next();
        int a = std::popcount(bits & 0xFFFFFu);
        int b = std::popcount((bits >> 20) & 0xFFFFFu);
        x = a - b;
    }
    return from_signed(c, levels);
}

}  // namespace capq
