#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/index/hybrid_index.hpp"
#include "litqa/llm/gateway.hpp"

namespace litqa {

struct DecomposedQuery {
    std::string original;
    std::string keyword_query;
    std::string semantic_query;
    MetadataFilter filter;
    bool degraded = false;  // the decomposer failed and the original query is used
    std::vector<std::string> warnings;
};

/// Reads the decomposer's JSON answer. Missing or unusable fields fall back
/// to the original query and an empty filter; problems are noted in warnings.
/// Years come from "year_min"/"year_max" or a range string "year": "2020-2022",
/// "2022-" or "-2019".
DecomposedQuery parse_decomposition(const std::string& query, const nlohmann::json& j);

/// Asks the gateway to rewrite `query`. Never throws for model failures:
/// the result is then DecomposedQuery{query, query, query, {}} with degraded set.
DecomposedQuery decompose(const std::string& query, llm::Gateway& gateway);

struct RetrievalConfig {
    std::size_t max_snippets = 256;
    std::size_t max_abstracts = 20;
    IndexConfig index;
};

struct CandidateSet {
    std::vector<ScoredPassage> snippets;
    std::vector<ScoredPassage> abstracts;  // title and abstract passages only
    std::vector<std::string> warnings;

    std::size_t size() const { return snippets.size() + abstracts.size(); }
    bool empty() const { return snippets.empty() && abstracts.empty(); }
};

/// Snippet arm: hybrid search over all passages, dense side embedding the
/// semantic query, sparse side matching the keyword query. Abstract arm:
/// sparse-only search over title and abstract passages with the keyword
/// query. A passage found by both arms stays in the arm where its fused
/// score is higher (the snippet arm on ties).
CandidateSet retrieve(const DecomposedQuery& dq, const HybridIndex& index, EmbeddingProvider& embedder,
                      const RetrievalConfig& config = {});

nlohmann::json scored_passage_to_json(const ScoredPassage& p);
ScoredPassage scored_passage_from_json(const nlohmann::json& j);
nlohmann::json filter_to_json(const MetadataFilter& f);
nlohmann::json to_json(const DecomposedQuery& dq);
nlohmann::json to_json(const CandidateSet& c);
CandidateSet candidate_set_from_json(const nlohmann::json& j);

}  // namespace litqa
