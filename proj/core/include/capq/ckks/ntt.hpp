/** \file
 * Negacyclic number-theoretic transform modulo one NTT-friendly prime.
 *
 * The twist by powers of the primitive 2N-th root psi is merged into the
 * butterflies, so forward/inverse map directly between the coefficient
 * representation of Z_q[X]/(X^N + 1) and an evaluation form where ring
 * multiplication is pointwise.  Forward output (and inverse input) is in
 * bit-reversed order, which pointwise operations never observe.
 */
#pragma once

#include <cstdint>
#include <vector>

namespace capq {

class NttTables {
public:
    /// Requires q prime with q = 1 mod 2*degree; finds psi by direct search.
    NttTables(std::uint64_t modulus, std::uint32_t degree);

    void forward(std::uint64_t* a) const;
    void inverse(std::uint64_t* a) const;

    std::uint64_t modulus() const noexcept { return q_; }
    std::uint32_t degree() const noexcept { return n_; }

private:
    std::uint64_t q_;
    std::uint32_t n_;
    std::vector<std::uint64_t> psi_rev_;      // psi^brv(i)
    std::vector<std::uint64_t> inv_psi_rev_;  // psi^-brv(i)
    std::uint64_t n_inv_;
};

}  // namespace capq
