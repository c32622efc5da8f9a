#include "capq/rng.hpp"

#include <cmath>
#include <numbers>

#include "capq/digest.hpp"
#include "capq/error.hpp"

namespace capq {

Rng Rng::derive(std::span<const std::uint8_t> secret, std::uint32_t index, std::string_view tag) {
    Sha256Digest d = DigestStream{}.bytes(secret).u32(index).text(tag).finish();
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(d[i]) << (8 * i);
    return Rng(seed);
}

Rng Rng::derive(std::uint64_t seed, std::uint32_t index, std::string_view tag) {
    return Rng(derive_seed(seed, index, tag));
}

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::uint32_t index, std::string_view tag) {
    Sha256Digest d = DigestStream{}.u64(seed).u32(index).text(tag).finish();
    std::uint64_t s = 0;
    for (int i = 0; i < 8; ++i) s |= static_cast<std::uint64_t>(d[i]) << (8 * i);
    return s;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw_param("Rng::below: bound must be nonzero");
    // Largest multiple of n not exceeding 2^64; draws at or above it are biased.
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    for (;;) {
        std::uint64_t x = next();
        if (x < limit) return x % n;
    }
}

double Rng::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller on (0,1] x [0,1); u1 stays away from zero for the log.
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace capq
