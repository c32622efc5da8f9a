/** \file
 * Parameter set for the leveled ring scheme: power-of-two ring degree, a
 * chain of word-sized NTT-friendly primes and the fixed-point scale.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace capq {

struct HeParams {
    std::uint32_t ring_degree = 4096;
    /// Prime chain, largest first; rescaling drops from the back.
    std::vector<std::uint64_t> coeff_moduli;
    double scale = 1073741824.0;  // 2^30

    /// ring degree 4096, primes of 45/30/30 bits, scale 2^30: two rescale
    /// levels, enough for one multiply with headroom.
    static HeParams defaults();

    std::uint32_t levels() const noexcept {
        return static_cast<std::uint32_t>(coeff_moduli.size());
    }
    void validate() const;
};

/// Deterministic Miller-Rabin, exact for 64-bit inputs.
bool is_prime_u64(std::uint64_t n);

/// For each requested bit size, the smallest prime above 2^bits that is
/// congruent to 1 mod 2 * ring_degree and not already taken.
std::vector<std::uint64_t> find_ntt_primes(std::span<const unsigned> bit_sizes,
                                           std::uint32_t ring_degree);

// Modular helpers shared by the ring arithmetic; moduli stay below 2^62 so
// products fit unsigned 128-bit intermediates.
inline std::uint64_t add_mod(std::uint64_t a, std::uint64_t b, std::uint64_t q) {
    std::uint64_t s = a + b;
    return s >= q ? s - q : s;
}

inline std::uint64_t sub_mod(std::uint64_t a, std::uint64_t b, std::uint64_t q) {
    return a >= b ? a - b : a + q - b;
}

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t q) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % q);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t q);

/// Inverse modulo a prime.
std::uint64_t inv_mod(std::uint64_t a, std::uint64_t q);

}  // namespace capq
