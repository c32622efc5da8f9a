/** \file
 * Deterministic random streams.
 *
 * All randomness flows through this class so results are reproducible across
 * platforms and standard library versions: mt19937_64 output is fixed by the
 * standard, and the derived quantities (bounded integers, uniforms, gaussians)
 * are computed here by hand instead of through the distribution adaptors,
 * whose output is implementation defined.
 */
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace capq {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Named substream: hashes (secret, index, tag) into a fresh seed so
    /// independent consumers cannot collide or interleave.
    static Rng derive(std::span<const std::uint8_t> secret, std::uint32_t index,
                      std::string_view tag);
    static Rng derive(std::uint64_t seed, std::uint32_t index, std::string_view tag);

    /// Hash-derived child seed for handing to components that seed themselves.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t index,
                                     std::string_view tag);

    std::uint64_t next() { return gen_(); }

    /// Unbiased integer in [0, n) via rejection sampling. n must be nonzero.
    std::uint64_t below(std::uint64_t n);

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; generated in pairs, second value cached.
    double gaussian();

    /// In-place Fisher-Yates shuffle producing a uniform permutation.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace capq
