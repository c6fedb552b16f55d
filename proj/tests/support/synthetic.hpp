#pragma once

// Deterministic synthetic text and corpora shared by unit and acceptance tests.

#include <random>
#include <string>
#include <vector>

#include "litqa/corpus/types.hpp"

namespace litqa::testing {

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> w = {
            "retrieval", "ranking", "passage", "model", "transformer", "citation", "query", "corpus",
            "embedding", "sparse", "dense", "fusion", "reranker", "attention", "dataset", "benchmark",
            "evaluation", "summary", "graph", "protein", "molecule", "quantum", "neural", "language",
            "vision", "speech", "clinical", "genome", "climate", "robot", "policy", "reward",
        };
        for (int i = 0; i < 200; ++i) w.push_back("term" + std::to_string(i));
        return w;
    }();
    return words;
}

/// A sentence of exactly `n_tokens` tokens (words plus the final period),
/// capitalized and followed by a single space.
inline std::string make_sentence(std::mt19937_64& rng, std::size_t n_tokens) {
    const auto& vocab = vocabulary();
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::string s;
    std::size_t words = n_tokens > 1 ? n_tokens - 1 : 1;
    for (std::size_t i = 0; i < words; ++i) {
        std::string w = vocab[pick(rng)];
        if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (i) s += ' ';
        s += w;
    }
    if (n_tokens > 1) s += '.';
    return s;
}

/// Text made of sentences with the given token counts, separated by spaces.
inline std::string make_text(std::mt19937_64& rng, const std::vector<std::size_t>& sentence_tokens) {
    std::string out;
    for (std::size_t i = 0; i < sentence_tokens.size(); ++i) {
        if (i) out += ' ';
        out += make_sentence(rng, sentence_tokens[i]);
    }
    return out;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t min_sentences, std::size_t max_sentences,
                               std::size_t min_len, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> count(min_sentences, max_sentences);
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::vector<std::size_t> lens(count(rng));
    for (auto& l : lens) l = len(rng);
    return make_text(rng, lens);
}

/// Paper with a title, an abstract and a few body sections. Occasionally a
/// section holds a single sentence longer than any passage budget.
inline Paper make_paper(std::mt19937_64& rng, const std::string& id) {
    Paper p;
    p.paper_id = id;
    p.title = make_sentence(rng, 8);
    p.abstract = random_text(rng, 3, 8, 8, 40);
    std::uniform_int_distribution<int> year(2005, 2024);
    p.year = year(rng);
    static const std::vector<std::string> venues = {"ACL", "EMNLP", "NeurIPS", "ICML", "Nature"};
    static const std::vector<std::string> fields = {"Computer Science", "Biology", "Physics", "Medicine"};
    p.venue = venues[rng() % venues.size()];
    p.fields_of_study.insert(fields[rng() % fields.size()]);
    std::uniform_int_distribution<int> sections(1, 4);
    int n = sections(rng);
    for (int i = 0; i < n; ++i) {
        std::string text = random_text(rng, 4, 30, 5, 90);
        if (rng() % 10 == 0) text += "\n" + make_sentence(rng, 700);
        p.body_sections.push_back({"Section " + std::to_string(i + 1), text});
    }
    return p;
}

}  // namespace litqa::testing
