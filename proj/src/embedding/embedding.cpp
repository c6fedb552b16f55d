#include "litqa/embedding/embedding.hpp"

#include <cmath>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/kernels/kernels.hpp"

namespace litqa {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

Embedding HashEmbeddingProvider::embed_one(const std::string& text) const {
    std::vector<double> acc(dim_, 0.0);
    for (const auto& term : index_terms(text)) {
        std::uint64_t state = fnv1a(term, seed_);
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < dim_; ++i) {
            if ((i & 63) == 0) word = splitmix64(state);
            acc[i] += ((word >> (i & 63)) & 1u) ? 1.0 : -1.0;
        }
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    Embedding out(dim_, 0.0f);
    if (norm > 0.0)
        for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

std::vector<Embedding> HashEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::vector<Embedding> embed(std::span<const std::string> texts, EmbeddingProvider& provider) {
    if (texts.empty()) throw std::invalid_argument("embed: empty input");
    const std::size_t batch = std::max<std::size_t>(1, provider.batch_size());
    const std::size_t dim = provider.dimension();
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += batch) {
        std::size_t end = std::min(texts.size(), begin + batch);
        std::vector<Embedding> got;
        try {
            got = provider.embed_batch(texts.subspan(begin, end - begin));
        } catch (const EmbeddingError& e) {
            throw EmbeddingError(e.what(), begin, end, e.retriable);
        } catch (const std::exception& e) {
            throw EmbeddingError(provider.id() + ": " + e.what(), begin, end, true);
        }
        if (got.size() != end - begin)
            throw EmbeddingError(provider.id() + ": returned " + std::to_string(got.size()) + " vectors for " +
                                     std::to_string(end - begin) + " texts",
                                 begin, end, false);
        for (auto& e : got) {
            if (e.size() != dim)
                throw EmbeddingError(provider.id() + ": vector of dimension " + std::to_string(e.size()) +
                                         ", expected " + std::to_string(dim),
                                     begin, end, false);
            for (float v : e)
                if (!std::isfinite(v)) throw EmbeddingError(provider.id() + ": non-finite component", begin, end, false);
            out.push_back(std::move(e));
        }
    }
    return out;
}

BinaryCode quantize_binary(std::span<const float> e) {
    BinaryCode code;
    code.dim = e.size();
    code.words.assign(kernels::words_for(e.size()), 0);
    kernels::active().sign_bits(e.data(), e.size(), code.words.data());
    return code;
}

double l2_norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

double asymmetric_score(std::span<const float> query, const BinaryCode& code) {
    if (query.size() != code.dim)
        throw DimensionMismatch("query dimension " + std::to_string(query.size()) + " != code dimension " +
                                std::to_string(code.dim));
    double norm = l2_norm(query);
    if (norm == 0.0 || code.dim == 0) return 0.0;
    double dot = kernels::active().signed_dot(query.data(), code.words.data(), code.dim);
    return dot / (norm * std::sqrt(static_cast<double>(code.dim)));
}

double symmetric_score(const BinaryCode& a, const BinaryCode& b) {
    if (a.dim != b.dim)
        throw DimensionMismatch("code dimensions differ: " + std::to_string(a.dim) + " vs " + std::to_string(b.dim));
    if (a.dim == 0) return 0.0;
    auto ham = kernels::active().hamming(a.words.data(), b.words.data(), a.words.size());
    return 1.0 - 2.0 * static_cast<double>(ham) / static_cast<double>(a.dim);
}

}  // namespace litqa
