#pragma once

// Brute-force reference computations used to check the library. These only
// share the tokenizer and the embedding provider with the code under test.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/corpus/types.hpp"
#include "litqa/embedding/embedding.hpp"
#include "litqa/index/hybrid_index.hpp"

namespace litqa::testing {

struct OracleHit {
    std::string passage_id;
    double fused;
};

/// Scores every passage with the plain formulas, no postings and no kernels:
/// dense = sum q_i * (+1 | -1 by sign of the passage embedding) / (|q| sqrt d),
/// sparse = Okapi BM25 with ln(1 + (N - df + 0.5) / (df + 0.5)),
/// fused = w_dense * dense + w_sparse * minmax(sparse).
inline std::vector<OracleHit> brute_force_fusion(const std::vector<Passage>& passages, const Corpus& corpus,
                                                 EmbeddingProvider& provider, const std::string& query_text,
                                                 const Embedding& query, const MetadataFilter& filter,
                                                 std::size_t k, double w_dense, double k1 = 1.2,
                                                 double b = 0.75) {
    const std::size_t n = passages.size();
    std::vector<std::map<std::string, int>> tf(n);
    std::vector<double> len(n);
    std::map<std::string, int> df;
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto terms = index_terms(passages[i].text);
        for (auto& t : terms) tf[i][t]++;
        for (auto& [t, _] : tf[i]) df[t]++;
        len[i] = static_cast<double>(terms.size());
        total += len[i];
    }
    const double avg = n ? total / n : 0.0;
    const auto qterms = index_terms(query_text);

    double qnorm = 0;
    for (float x : query) qnorm += double(x) * x;
    qnorm = std::sqrt(qnorm) * std::sqrt(double(query.size()));

    std::vector<std::size_t> keep;
    std::vector<double> dense, sparse;
    for (std::size_t i = 0; i < n; ++i) {
        const Paper& paper = corpus.at(passages[i].paper_id);
        if (!filter.accepts(paper.year, paper.venue, paper.fields_of_study)) continue;
        keep.push_back(i);
        std::vector<std::string> one{passages[i].text};
        Embedding e = provider.embed_batch(one).at(0);
        double dot = 0;
        for (std::size_t j = 0; j < e.size(); ++j) dot += double(query[j]) * (e[j] > 0.0f ? 1.0 : -1.0);
        dense.push_back(qnorm > 0 ? dot / qnorm : 0.0);
        double s = 0;
        for (const auto& t : qterms) {
            auto it = tf[i].find(t);
            if (it == tf[i].end()) continue;
            double f = it->second;
            double d = df[t];
            double idf = std::log(1.0 + (double(n) - d + 0.5) / (d + 0.5));
            s += idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * len[i] / avg));
        }
        sparse.push_back(s);
    }
    if (keep.empty()) return {};
    double lo = *std::min_element(sparse.begin(), sparse.end());
    double hi = *std::max_element(sparse.begin(), sparse.end());
    std::vector<OracleHit> hits;
    for (std::size_t j = 0; j < keep.size(); ++j) {
        double norm = hi > lo ? (sparse[j] - lo) / (hi - lo) : 0.0;
        hits.push_back({passages[keep[j]].passage_id, w_dense * dense[j] + (1.0 - w_dense) * norm});
    }
    std::sort(hits.begin(), hits.end(), [](const OracleHit& a, const OracleHit& b) {
        if (a.fused != b.fused) return a.fused > b.fused;
        return a.passage_id < b.passage_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

/// DCG with gain 2^g - 1 and log2(i + 1) discount, straight from the definition.
inline double oracle_ndcg(const std::vector<std::string>& ranking, const std::map<std::string, int>& grades,
                          std::size_t k) {
    auto grade = [&](const std::string& id) {
        auto it = grades.find(id);
        return it == grades.end() ? 0 : it->second;
    };
    double dcg = 0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i)
        dcg += (std::pow(2.0, grade(ranking[i])) - 1.0) / std::log2(double(i) + 2.0);
    std::vector<int> all;
    for (auto& [_, g] : grades) all.push_back(g);
    std::sort(all.rbegin(), all.rend());
    double ideal = 0;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i)
        ideal += (std::pow(2.0, all[i]) - 1.0) / std::log2(double(i) + 2.0);
    return ideal == 0 ? 0.0 : dcg / ideal;
}

inline double oracle_mrr(const std::vector<std::vector<std::string>>& rankings,
                         const std::vector<std::map<std::string, int>>& grades, int threshold = 1) {
    double sum = 0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        for (std::size_t i = 0; i < rankings[q].size(); ++i) {
            auto it = grades[q].find(rankings[q][i]);
            if (it != grades[q].end() && it->second >= threshold) {
                sum += 1.0 / double(i + 1);
                break;
            }
        }
    }
    return rankings.empty() ? 0.0 : sum / double(rankings.size());
}

}  // namespace litqa::testing
