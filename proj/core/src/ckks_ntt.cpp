#include "capq/ckks/ntt.hpp"

#include <bit>
#include <string>

#include "capq/ckks/params.hpp"
#include "capq/error.hpp"

namespace capq {

namespace {

std::uint32_t bit_reverse(std::uint32_t x, unsigned bits) {
    std::uint32_t r = 0;
    for (unsigned i = 0; i < bits; ++i) {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    return r;
}

/// Primitive 2N-th root of unity mod q: psi = x^((q-1)/2N) for the first
/// base x with psi^N = -1.  The order check needs no factorization.
std::uint64_t find_psi(std::uint64_t q, std::uint32_t n) {
    const std::uint64_t exp = (q - 1) / (2ull * n);
    for (std::uint64_t x = 2;; ++x) {
        if (x >= q) throw_param("NttTables: no primitive root found");
        std::uint64_t psi = pow_mod(x, exp, q);
        if (psi != 1 && pow_mod(psi, n, q) == q - 1) return psi;
    }
}

}  // namespace

NttTables::NttTables(std::uint64_t modulus, std::uint32_t degree) : q_(modulus), n_(degree) {
    if (!std::has_single_bit(degree) || degree < 2) {
        throw_param("NttTables: degree must be a power of two");
    }
    if (modulus % (2ull * degree) != 1 || !is_prime_u64(modulus)) {
        throw_param("NttTables: modulus " + std::to_string(modulus) +
                    " must be prime and 1 mod 2*degree");
    }
    const unsigned bits = static_cast<unsigned>(std::countr_zero(degree));
    const std::uint64_t psi = find_psi(q_, n_);
    const std::uint64_t inv_psi = inv_mod(psi, q_);

    psi_rev_.resize(n_);
    inv_psi_rev_.resize(n_);
    std::uint64_t p = 1, ip = 1;
    std::vector<std::uint64_t> pw(n_), ipw(n_);
    for (std::uint32_t i = 0; i < n_; ++i) {
        pw[i] = p;
        ipw[i] = ip;
        p = mul_mod(p, psi, q_);
        ip = mul_mod(ip, inv_psi, q_);
    }
    for (std::uint32_t i = 0; i < n_; ++i) {
        psi_rev_[i] = pw[bit_reverse(i, bits)];
        inv_psi_rev_[i] = ipw[bit_reverse(i, bits)];
    }
    n_inv_ = inv_mod(n_, q_);
}

void NttTables::forward(std::uint64_t* a) const {
    std::uint32_t t = n_;
    for (std::uint32_t m = 1; m < n_; m <<= 1) {
        t >>= 1;
        for (std::uint32_t i = 0; i < m; ++i) {
            const std::uint32_t j1 = 2 * i * t;
            const std::uint64_t s = psi_rev_[m + i];
            for (std::uint32_t j = j1; j < j1 + t; ++j) {
                const std::uint64_t u = a[j];
                const std::uint64_t v = mul_mod(a[j + t], s, q_);
                a[j] = add_mod(u, v, q_);
                a[j + t] = sub_mod(u, v, q_);
            }
        }
    }
}

void NttTables::inverse(std::uint64_t* a) const {
    std::uint32_t t = 1;
    for (std::uint32_t m = n_; m > 1; m >>= 1) {
        std::uint32_t j1 = 0;
        const std::uint32_t h = m >> 1;
        for (std::uint32_t i = 0; i < h; ++i) {
            const std::uint64_t s = inv_psi_rev_[h + i];
            for (std::uint32_t j = j1; j < j1 + t; ++j) {
                const std::uint64_t u = a[j];
                const std::uint64_t v = a[j + t];
                a[j] = add_mod(u, v, q_);
                a[j + t] = mul_mod(sub_mod(u, v, q_), s, q_);
            }
            j1 += 2 * t;
        }
        t <<= 1;
    }
    for (std::uint32_t j = 0; j < n_; ++j) a[j] = mul_mod(a[j], n_inv_, q_);
}

}  // namespace capq
