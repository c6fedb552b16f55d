#include <bit>

#include "litqa/kernels/kernels.hpp"

namespace litqa::kernels {

namespace {

double signed_dot(const float* q, const std::uint64_t* bits, std::size_t dim) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        bool set = (bits[i >> 6] >> (i & 63)) & 1u;
        double v = q[i];
        sum += set ? v : -v;
    }
    return sum;
}

void signed_dot_batch(const float* q, const std::uint64_t* codes, std::size_t words, std::size_t n,
                      std::size_t dim, double* out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = signed_dot(q, codes + j * words, dim);
}

std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::uint64_t d = 0;
    for (std::size_t w = 0; w < words; ++w) d += static_cast<std::uint64_t>(std::popcount(a[w] ^ b[w]));
    return d;
}

void sign_bits(const float* x, std::size_t dim, std::uint64_t* out) {
    const std::size_t words = words_for(dim);
    for (std::size_t w = 0; w < words; ++w) out[w] = 0;
    for (std::size_t i = 0; i < dim; ++i)
        if (x[i] > 0.0f) out[i >> 6] |= std::uint64_t{1} << (i & 63);
}

constexpr KernelTable kScalar{Isa::scalar, signed_dot, signed_dot_batch, hamming, sign_bits};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace litqa::kernels
