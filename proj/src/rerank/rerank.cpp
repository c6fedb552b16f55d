#include "litqa/rerank/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <unordered_set>

#include "../llm/http_util.hpp"
#include "litqa/corpus/tokenizer.hpp"

namespace litqa {

std::vector<double> TokenOverlapScorer::score(const std::string& query, std::span<const std::string> passages) {
    auto qterms = index_terms(query);
    std::unordered_set<std::string> q(qterms.begin(), qterms.end());
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) {
        if (q.empty()) {
            out.push_back(0.0);
            continue;
        }
        auto pterms = index_terms(p);
        std::unordered_set<std::string> seen(pterms.begin(), pterms.end());
        std::size_t hit = 0;
        for (const auto& t : q) hit += seen.count(t);
        out.push_back(static_cast<double>(hit) / static_cast<double>(q.size()));
    }
    return out;
}

HttpRerankScorer::HttpRerankScorer(llm::ProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw std::invalid_argument("rerank scorer needs an endpoint");
}

std::vector<double> HttpRerankScorer::score(const std::string& query, std::span<const std::string> passages) {
    auto base = llm::detail::split_base_url(config_.endpoint);
    auto client = llm::detail::make_client(base.origin, config_.timeout_s);
    httplib::Headers headers;
    if (auto key = config_.api_key(); !key.empty()) headers.emplace("Authorization", "Bearer " + key);
    nlohmann::json body{{"query", query}, {"passages", std::vector<std::string>(passages.begin(), passages.end())}};
    if (!config_.model.empty()) body["model"] = config_.model;
    auto res = client->Post(base.prefix + "/rerank", headers, body.dump(), "application/json");
    if (!res) throw std::runtime_error("rerank endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw std::runtime_error("rerank endpoint returned HTTP " + std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("scores")) throw std::runtime_error("rerank endpoint returned no scores");
    return j["scores"].get<std::vector<double>>();
}

RerankedSet rerank_top_k(const std::string& query, const CandidateSet& candidates, RerankScorer& scorer,
                         const HybridIndex& index, const RerankOptions& options) {
    RerankedSet out;
    out.scorer_id = scorer.id();
    std::vector<RerankedPassage> pool;
    pool.reserve(candidates.size());
    for (const auto& s : candidates.snippets) pool.push_back({s, CandidateArm::snippet, 0.0});
    for (const auto& a : candidates.abstracts) pool.push_back({a, CandidateArm::abstract, 0.0});
    if (pool.empty()) return out;

    std::vector<std::string> texts;
    texts.reserve(pool.size());
    for (const auto& p : pool) texts.push_back(index.passage(p.candidate.passage_id).text);

    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    const std::size_t n_batches = (texts.size() + batch - 1) / batch;
    std::vector<double> scores(texts.size());
    std::string failure;
    try {
        const std::size_t lanes = std::max<std::size_t>(1, options.max_concurrency);
        for (std::size_t first = 0; first < n_batches; first += lanes) {
            std::vector<std::future<std::vector<double>>> running;
            const std::size_t last = std::min(n_batches, first + lanes);
            for (std::size_t b = first; b < last; ++b) {
                std::span<const std::string> slice(texts.data() + b * batch,
                                                   std::min(batch, texts.size() - b * batch));
                running.push_back(std::async(std::launch::async, [&, slice] { return scorer.score(query, slice); }));
            }
            for (std::size_t b = first; b < last; ++b) {
                auto got = running[b - first].get();
                const std::size_t begin = b * batch, len = std::min(batch, texts.size() - begin);
                if (got.size() != len)
                    throw std::runtime_error("scorer returned " + std::to_string(got.size()) + " scores for " +
                                             std::to_string(len) + " passages");
                for (std::size_t i = 0; i < len; ++i) {
                    if (!std::isfinite(got[i])) throw std::runtime_error("scorer returned a non-finite score");
                    scores[begin + i] = got[i];
                }
            }
        }
    } catch (const std::exception& e) {
        failure = e.what();
    }

    if (failure.empty()) {
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i].rerank_score = scores[i];
    } else {
        out.fallback = true;
        out.warnings.push_back("reranker failed, keeping retrieval order: " + failure);
        for (auto& p : pool) p.rerank_score = p.candidate.fused_score;
    }

    const std::size_t keep = std::min(options.k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + keep, pool.end(), [](const auto& a, const auto& b) {
        if (a.rerank_score != b.rerank_score) return a.rerank_score > b.rerank_score;
        return a.candidate.passage_id < b.candidate.passage_id;
    });
    pool.resize(keep);
    out.items = std::move(pool);
    out.retained_k = keep;
    return out;
}

nlohmann::json to_json(const RerankedSet& r) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : r.items) {
        auto j = scored_passage_to_json(it.candidate);
        j["arm"] = it.arm == CandidateArm::snippet ? "snippet" : "abstract";
        j["rerank_score"] = it.rerank_score;
        items.push_back(std::move(j));
    }
    return {{"items", items},
            {"retained_k", r.retained_k},
            {"scorer_id", r.scorer_id},
            {"fallback", r.fallback},
            {"warnings", r.warnings}};
}

}  // namespace litqa
