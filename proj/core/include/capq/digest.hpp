/** \file
 * Thin SHA-256 wrapper used for key ids, deterministic stream derivation and
 * payload fingerprints.
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace capq {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> bytes);

/// Incremental builder for hashing heterogeneous records without intermediate copies.
class DigestStream {
public:
    DigestStream& bytes(std::span<const std::uint8_t> data);
    DigestStream& u32(std::uint32_t v);
    DigestStream& u64(std::uint64_t v);
    DigestStream& f32(float v);
    DigestStream& text(std::string_view s);

    Sha256Digest finish() const;

private:
    std::vector<std::uint8_t> buf_;
};

}  // namespace capq
