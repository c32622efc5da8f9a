#include "capq/ckks/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "capq/error.hpp"

namespace capq {

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t q) {
    std::uint64_t r = 1 % q;
    base %= q;
    while (exp != 0) {
        if (exp & 1) r = mul_mod(r, base, q);
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    return r;
}

std::uint64_t inv_mod(std::uint64_t a, std::uint64_t q) {
    return pow_mod(a, q - 2, q);
}

bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull,
                            31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    // These witnesses decide primality exactly for all 64-bit integers.
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull,
                            31ull, 37ull}) {
        std::uint64_t x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 0; i < r - 1; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

std::vector<std::uint64_t> find_ntt_primes(std::span<const unsigned> bit_sizes,
                                           std::uint32_t ring_degree) {
    if (!std::has_single_bit(ring_degree)) {
        throw_param("find_ntt_primes: ring_degree must be a power of two");
    }
    const std::uint64_t step = 2ull * ring_degree;
    std::vector<std::uint64_t> out;
    for (unsigned bits : bit_sizes) {
        if (bits < 20 || bits > 61) throw_param("find_ntt_primes: bit size out of range");
        std::uint64_t c = ((std::uint64_t(1) << bits) / step + 1) * step + 1;
        for (;;) {
            if (is_prime_u64(c) && std::find(out.begin(), out.end(), c) == out.end()) break;
            c += step;
        }
        out.push_back(c);
    }
    return out;
}

HeParams HeParams::defaults() {
    HeParams p;
    p.ring_degree = 4096;
    const unsigned bits[] = {45, 30, 30};
    p.coeff_moduli = find_ntt_primes(bits, p.ring_degree);
    p.scale = 1073741824.0;  // 2^30
    p.validate();
    return p;
}

void HeParams::validate() const {
    if (ring_degree < 8 || !std::has_single_bit(ring_degree)) {
        throw_param("HeParams: ring_degree must be a power of two, at least 8");
    }
    if (coeff_moduli.size() < 2) {
        throw_param("HeParams: need at least two coefficient moduli");
    }
    double total_bits = 0.0;
    for (std::size_t i = 0; i < coeff_moduli.size(); ++i) {
        std::uint64_t q = coeff_moduli[i];
        if (q >= (std::uint64_t(1) << 62)) throw_param("HeParams: modulus too large");
        if (!is_prime_u64(q)) throw_param("HeParams: modulus " + std::to_string(q) + " not prime");
        if (q % (2ull * ring_degree) != 1) {
            throw_param("HeParams: modulus " + std::to_string(q) +
                        " not congruent to 1 mod 2*ring_degree");
        }
        for (std::size_t j = i + 1; j < coeff_moduli.size(); ++j) {
            if (coeff_moduli[j] == q) throw_param("HeParams: duplicate modulus");
        }
        total_bits += std::log2(double(q));
    }
    if (total_bits > 120.0) {
        // Decoding lifts through a 128-bit accumulator; keep margin.
        throw_param("HeParams: modulus chain exceeds 120 bits");
    }
    if (!(scale > 1.0) || !std::isfinite(scale)) {
        throw_param("HeParams: scale must be finite and greater than 1");
    }
    std::uint64_t min_q = *std::min_element(coeff_moduli.begin(), coeff_moduli.end());
    if (!(scale < double(min_q))) {
        throw_param("HeParams: scale must be below the smallest modulus");
    }
}

}  // namespace capq
