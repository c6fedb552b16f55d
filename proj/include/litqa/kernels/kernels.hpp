#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops of the dense index. Every kernel has a scalar
// reference implementation; wider variants must agree with it (exactly for
// integer/bit outputs, to rounding for floating-point sums).
//
// Bit layout shared by all kernels: component i lives in word i / 64 at bit
// position i % 64 (least significant first). Unused high bits of the last
// word are zero.

namespace litqa::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;

    /// Sum over i of q[i] * (bit_i ? +1 : -1), accumulated in double.
    double (*signed_dot)(const float* q, const std::uint64_t* bits, std::size_t dim);

    /// signed_dot against `n` codes laid out back to back, `words` words each.
    void (*signed_dot_batch)(const float* q, const std::uint64_t* codes, std::size_t words,
                             std::size_t n, std::size_t dim, double* out);

    /// Number of differing bits.
    std::uint64_t (*hamming)(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

    /// bit_i = x[i] > 0. Writes ceil(dim / 64) words.
    void (*sign_bits)(const float* x, std::size_t dim, std::uint64_t* out);
};

const KernelTable& scalar_kernels();

/// nullptr when the variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Best table for this machine, chosen once. Setting LITQA_KERNELS=scalar in
/// the environment forces the reference kernels.
const KernelTable& active();

constexpr std::size_t words_for(std::size_t dim) { return (dim + 63) / 64; }

namespace detail {
// Defined in the AVX2 translation unit when it is built.
const KernelTable* avx2_table();
}  // namespace detail

}  // namespace litqa::kernels
