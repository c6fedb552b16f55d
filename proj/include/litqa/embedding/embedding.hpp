#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace litqa {

using Embedding = std::vector<float>;

/// Sign bits of an embedding, packed per the kernels' bit layout.
struct BinaryCode {
    std::vector<std::uint64_t> words;
    std::size_t dim = 0;

    bool bit(std::size_t i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
    bool operator==(const BinaryCode&) const = default;
};

class EmbeddingError : public std::runtime_error {
public:
    EmbeddingError(const std::string& what, std::size_t batch_begin, std::size_t batch_end, bool retriable)
        : std::runtime_error(what), batch_begin(batch_begin), batch_end(batch_end), retriable(retriable) {}

    std::size_t batch_begin;
    std::size_t batch_end;
    bool retriable;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    /// Preferred number of texts per call.
    virtual std::size_t batch_size() const { return 64; }
    virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) = 0;
};

/// Offline provider: each lower-cased word token seeds a pseudo-random ±1
/// direction and a text embeds as the normalized sum over its token
/// multiset. Needs no model or network.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 256, std::uint64_t seed = 0x5eed5eedULL);

    std::string id() const override { return "hash-" + std::to_string(dim_); }
    std::size_t dimension() const override { return dim_; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

    Embedding embed_one(const std::string& text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Embeds `texts` in provider-sized batches, preserving order. Provider
/// failures surface as EmbeddingError carrying the failing batch range.
std::vector<Embedding> embed(std::span<const std::string> texts, EmbeddingProvider& provider);

BinaryCode quantize_binary(std::span<const float> e);

/// Full-precision query against a binary code:
/// sum_i q_i * (2 b_i - 1) / (||q|| * sqrt(d)). Returns 0 for a zero query.
double asymmetric_score(std::span<const float> query, const BinaryCode& code);

/// Both sides binary: 1 - 2 * hamming / d.
double symmetric_score(const BinaryCode& a, const BinaryCode& b);

double l2_norm(std::span<const float> v);

}  // namespace litqa
