// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <bit>
#include <cstring>

#include "litqa/kernels/kernels.hpp"

namespace litqa::kernels {

namespace {

inline std::uint8_t bit_byte(const std::uint64_t* bits, std::size_t byte_index) {
    std::uint8_t b;
    std::memcpy(&b, reinterpret_cast<const unsigned char*>(bits) + byte_index, 1);
    return b;
}

// Lanes whose bit is clear get their sign flipped.
inline __m256 apply_signs(__m256 v, std::uint8_t byte) {
    const __m256i lane_bits = _mm256_setr_epi32(1, 2, 4, 8, 16, 32, 64, 128);
    __m256i b = _mm256_set1_epi32(byte);
    __m256i clear = _mm256_cmpeq_epi32(_mm256_and_si256(b, lane_bits), _mm256_setzero_si256());
    __m256i sign = _mm256_and_si256(clear, _mm256_set1_epi32(static_cast<int>(0x80000000u)));
    return _mm256_xor_ps(v, _mm256_castsi256_ps(sign));
}

double signed_dot(const float* q, const std::uint64_t* bits, std::size_t dim) {
    __m256d acc_lo = _mm256_setzero_pd();
    __m256d acc_hi = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8) {
        __m256 v = apply_signs(_mm256_loadu_ps(q + i), bit_byte(bits, i >> 3));
        acc_lo = _mm256_add_pd(acc_lo, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc_hi = _mm256_add_pd(acc_hi, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    __m256d acc = _mm256_add_pd(acc_lo, acc_hi);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < dim; ++i) {
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

// Nibble-lookup popcount over 256-bit blocks.
inline __m256i popcount_bytes(__m256i v) {
    const __m256i table = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                           0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low_mask = _mm256_set1_epi8(0x0f);
    __m256i lo = _mm256_and_si256(v, low_mask);
    __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
    return _mm256_add_epi8(_mm256_shuffle_epi8(table, lo), _mm256_shuffle_epi8(table, hi));
}

std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    __m256i total = _mm256_setzero_si256();
    std::size_t w = 0;
    for (; w + 4 <= words; w += 4) {
        __m256i x = _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w)),
                                     _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w)));
        total = _mm256_add_epi64(total, _mm256_sad_epu8(popcount_bytes(x), _mm256_setzero_si256()));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), total);
    std::uint64_t d = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; w < words; ++w) d += static_cast<std::uint64_t>(std::popcount(a[w] ^ b[w]));
    return d;
}

void sign_bits(const float* x, std::size_t dim, std::uint64_t* out) {
    const std::size_t words = words_for(dim);
    for (std::size_t w = 0; w < words; ++w) out[w] = 0;
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8) {
        auto mask = static_cast<std::uint64_t>(
            _mm256_movemask_ps(_mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ)));
        out[i >> 6] |= mask << (i & 63);
    }
    for (; i < dim; ++i)
        if (x[i] > 0.0f) out[i >> 6] |= std::uint64_t{1} << (i & 63);
}

constexpr KernelTable kAvx2{Isa::avx2, signed_dot, signed_dot_batch, hamming, sign_bits};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace litqa::kernels
