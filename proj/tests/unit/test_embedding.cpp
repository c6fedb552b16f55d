#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "litqa/embedding/embedding.hpp"

using namespace litqa;

namespace {

class FailingProvider final : public EmbeddingProvider {
public:
    std::string id() const override { return "failing"; }
    std::size_t dimension() const override { return 4; }
    std::size_t batch_size() const override { return 2; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) override {
        if (++calls == 2) throw std::runtime_error("upstream 503");
        return std::vector<Embedding>(texts.size(), Embedding(4, 1.0f));
    }
    int calls = 0;
};

Embedding random_vector(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<float> g;
    Embedding v(d);
    for (auto& x : v) x = g(rng);
    return v;
}

}  // namespace

TEST_CASE("hash provider is deterministic and shaped", "[embedding]") {
    HashEmbeddingProvider provider;
    std::vector<std::string> one{"a"};
    auto e = embed(one, provider);
    REQUIRE(e.size() == 1);
    CHECK(e[0].size() == 256);

    std::vector<std::string> twice{"binary quantization", "binary quantization"};
    auto t = embed(twice, provider);
    CHECK(t[0] == t[1]);

    std::vector<std::string> three{"alpha", "beta gamma", "delta"};
    auto batch = embed(three, provider);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(batch[i] == provider.embed_one(three[i]));
}

TEST_CASE("embed rejects empty input and reports failing batches", "[embedding]") {
    HashEmbeddingProvider provider;
    std::vector<std::string> none;
    CHECK_THROWS_AS(embed(none, provider), std::invalid_argument);

    FailingProvider failing;
    std::vector<std::string> texts{"a", "b", "c", "d", "e"};
    try {
        embed(texts, failing);
        FAIL("expected EmbeddingError");
    } catch (const EmbeddingError& e) {
        CHECK(e.batch_begin == 2);
        CHECK(e.batch_end == 4);
        CHECK(e.retriable);
    }
}

TEST_CASE("quantize_binary thresholds at zero", "[embedding]") {
    Embedding v{0.3f, -0.2f, 0.0f, 1.5f};
    auto c = quantize_binary(v);
    CHECK(c.dim == 4);
    CHECK(c.bit(0));
    CHECK_FALSE(c.bit(1));
    CHECK_FALSE(c.bit(2));
    CHECK(c.bit(3));

    auto neg = quantize_binary(Embedding(70, -1.0f));
    CHECK(std::all_of(neg.words.begin(), neg.words.end(), [](auto w) { return w == 0; }));
}

TEST_CASE("quantize_binary equals a per-component sign oracle", "[embedding]") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 50; ++t) {
        auto v = random_vector(rng, 1024);
        auto c = quantize_binary(v);
        for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(c.bit(i) == (v[i] > 0.0f));
        // Re-quantizing the ±1 expansion gives the same code.
        Embedding expanded(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) expanded[i] = c.bit(i) ? 1.0f : -1.0f;
        CHECK(quantize_binary(expanded) == c);
    }
}

TEST_CASE("asymmetric score examples", "[embedding]") {
    Embedding q{1.0f, 1.0f};
    CHECK(asymmetric_score(q, quantize_binary(Embedding{1.0f, 1.0f})) == Catch::Approx(1.0));
    CHECK(asymmetric_score(q, quantize_binary(Embedding{-1.0f, -1.0f})) == Catch::Approx(-1.0));
    CHECK_THROWS_AS(asymmetric_score(Embedding{1.0f}, quantize_binary(q)), DimensionMismatch);
}

TEST_CASE("asymmetric ranking equals brute-force ±1 dot ranking", "[embedding]") {
    std::mt19937_64 rng(22);
    const std::size_t d = 128;
    auto q = random_vector(rng, d);
    std::vector<BinaryCode> codes;
    for (int i = 0; i < 500; ++i) codes.push_back(quantize_binary(random_vector(rng, d)));

    std::vector<double> brute(codes.size()), fast(codes.size());
    for (std::size_t j = 0; j < codes.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += q[i] * (codes[j].bit(i) ? 1.0 : -1.0);
        brute[j] = s;
        fast[j] = asymmetric_score(q, codes[j]);
        CHECK(fast[j] >= -1.0 - 1e-12);
        CHECK(fast[j] <= 1.0 + 1e-12);
    }
    auto rank = [](const std::vector<double>& s) {
        std::vector<std::size_t> idx(s.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s[a] > s[b]; });
        return idx;
    };
    CHECK(rank(brute) == rank(fast));
}

TEST_CASE("asymmetric score is invariant to positive query scaling", "[embedding][property]") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 100; ++t) {
        auto q = random_vector(rng, 256);
        auto code = quantize_binary(random_vector(rng, 256));
        std::uniform_real_distribution<float> scale(0.01f, 100.0f);
        float s = scale(rng);
        Embedding scaled(q);
        for (auto& x : scaled) x *= s;
        CHECK(asymmetric_score(scaled, code) == Catch::Approx(asymmetric_score(q, code)).margin(1e-6));
    }
}

TEST_CASE("symmetric score takes values 1 - 2k/d", "[embedding][property]") {
    std::mt19937_64 rng(24);
    const std::size_t d = 200;
    for (int t = 0; t < 100; ++t) {
        auto a = quantize_binary(random_vector(rng, d));
        auto b = quantize_binary(random_vector(rng, d));
        std::size_t k = 0;
        for (std::size_t i = 0; i < d; ++i) k += a.bit(i) != b.bit(i);
        CHECK(symmetric_score(a, b) == 1.0 - 2.0 * static_cast<double>(k) / d);
    }
}
