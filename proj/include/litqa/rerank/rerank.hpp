#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/index/hybrid_index.hpp"
#include "litqa/llm/openai.hpp"
#include "litqa/retrieval/orchestrator.hpp"

namespace litqa {

/// Scores (query, passage) pairs jointly. One score per passage, finite,
/// deterministic for a given scorer id. Must be safe to call concurrently.
class RerankScorer {
public:
    virtual ~RerankScorer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<double> score(const std::string& query, std::span<const std::string> passages) = 0;
};

/// Offline scorer: fraction of the query's distinct index terms that occur
/// in the passage. 0 for a query without terms.
class TokenOverlapScorer final : public RerankScorer {
public:
    std::string id() const override { return "token-overlap-v1"; }
    std::vector<double> score(const std::string& query, std::span<const std::string> passages) override;
};

/// Hosted cross-encoder: POST {endpoint}/rerank {"query", "passages"} and
/// expects {"scores": [...]} in input order.
class HttpRerankScorer final : public RerankScorer {
public:
    explicit HttpRerankScorer(llm::ProviderConfig config);
    std::string id() const override { return config_.id.empty() ? "http:" + config_.model : config_.id; }
    std::vector<double> score(const std::string& query, std::span<const std::string> passages) override;

private:
    llm::ProviderConfig config_;
};

enum class CandidateArm { snippet, abstract };

struct RerankedPassage {
    ScoredPassage candidate;  // retrieval scores kept for diagnostics
    CandidateArm arm = CandidateArm::snippet;
    double rerank_score = 0.0;
};

struct RerankedSet {
    std::vector<RerankedPassage> items;  // descending rerank_score, ties by passage_id
    std::size_t retained_k = 0;
    std::string scorer_id;
    bool fallback = false;  // scorer failed; ordered by fused score instead
    std::vector<std::string> warnings;
};

struct RerankOptions {
    std::size_t k = 50;
    std::size_t batch_size = 32;
    std::size_t max_concurrency = 4;
};

/// Scores every candidate of both arms once, in batches, and keeps the top
/// min(k, n). If the scorer throws or returns a wrong-sized or non-finite
/// batch, candidates are ranked by fused score and a warning is recorded.
RerankedSet rerank_top_k(const std::string& query, const CandidateSet& candidates, RerankScorer& scorer,
                         const HybridIndex& index, const RerankOptions& options = {});

nlohmann::json to_json(const RerankedSet& r);

}  // namespace litqa
