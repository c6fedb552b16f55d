#include "litqa/retrieval/orchestrator.hpp"

#include <future>
#include <regex>
#include <unordered_map>

#include "litqa/corpus/tokenizer.hpp"

namespace litqa {

namespace {

std::string text_field(const nlohmann::json& j, const char* key, const std::string& fallback,
                       std::vector<std::string>& warnings) {
    if (j.contains(key) && j[key].is_string()) {
        auto v = normalize_ws(j[key].get<std::string>());
        if (!v.empty()) return v;
    }
    warnings.push_back(std::string("decomposition has no usable \"") + key + "\"; using the original query");
    return fallback;
}

std::optional<int> year_field(const nlohmann::json& j, const char* key, std::vector<std::string>& warnings) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (j[key].is_number_integer()) return j[key].get<int>();
    if (j[key].is_string()) {
        const auto s = j[key].get<std::string>();
        if (std::regex_match(s, std::regex(R"(\s*\d{4}\s*)"))) return std::stoi(s);
    }
    warnings.push_back(std::string("ignoring unreadable \"") + key + "\"");
    return std::nullopt;
}

std::optional<std::set<std::string>> string_set(const nlohmann::json& j, const char* key,
                                                std::vector<std::string>& warnings) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    std::set<std::string> out;
    auto add = [&](const std::string& s) {
        auto v = normalize_ws(s);
        if (!v.empty()) out.insert(v);
    };
    if (j[key].is_string()) {
        std::string s = j[key].get<std::string>();
        std::size_t start = 0;
        for (std::size_t comma; (comma = s.find(',', start)) != std::string::npos; start = comma + 1)
            add(s.substr(start, comma - start));
        add(s.substr(start));
    } else if (j[key].is_array()) {
        for (const auto& v : j[key]) {
            if (v.is_string())
                add(v.get<std::string>());
            else
                warnings.push_back(std::string("ignoring a non-string entry in \"") + key + "\"");
        }
    } else {
        warnings.push_back(std::string("ignoring unreadable \"") + key + "\"");
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::vector<ScoredPassage> search_or_warn(const HybridIndex& index, const SearchRequest& req, const IndexConfig& cfg,
                                          std::vector<std::string>& warnings, const char* arm) {
    try {
        return index.search(req, cfg);
    } catch (const std::exception& e) {
        warnings.push_back(std::string(arm) + " search failed: " + e.what());
        return {};
    }
}

}  // namespace

DecomposedQuery parse_decomposition(const std::string& query, const nlohmann::json& j) {
    DecomposedQuery dq;
    dq.original = query;
    if (!j.is_object()) {
        dq.keyword_query = dq.semantic_query = query;
        dq.warnings.push_back("decomposition is not a JSON object");
        return dq;
    }
    dq.keyword_query = text_field(j, "keyword", query, dq.warnings);
    dq.semantic_query = text_field(j, "semantic", query, dq.warnings);

    dq.filter.year_min = year_field(j, "year_min", dq.warnings);
    dq.filter.year_max = year_field(j, "year_max", dq.warnings);
    if (j.contains("year") && j["year"].is_string()) {
        static const std::regex range(R"(\s*(\d{4})?\s*(-)?\s*(\d{4})?\s*)");
        std::smatch m;
        const auto s = j["year"].get<std::string>();
        if (std::regex_match(s, m, range) && (m[1].matched || m[3].matched) &&
            (m[2].matched || !(m[1].matched && m[3].matched))) {
            if (m[1].matched && !dq.filter.year_min) dq.filter.year_min = std::stoi(m[1]);
            if (!m[2].matched && m[1].matched && !dq.filter.year_max) dq.filter.year_max = std::stoi(m[1]);
            if (m[3].matched && !dq.filter.year_max) dq.filter.year_max = std::stoi(m[3]);
        } else {
            dq.warnings.push_back("ignoring unreadable \"year\"");
        }
    }
    if (dq.filter.year_min && dq.filter.year_max && *dq.filter.year_min > *dq.filter.year_max) {
        dq.warnings.push_back("decomposition year range is empty; ignoring it");
        dq.filter.year_min.reset();
        dq.filter.year_max.reset();
    }
    dq.filter.venues = string_set(j, "venues", dq.warnings);
    dq.filter.fields_of_study = string_set(j, "fields_of_study", dq.warnings);
    return dq;
}

DecomposedQuery decompose(const std::string& query, llm::Gateway& gateway) {
    try {
        return parse_decomposition(query, gateway.complete_json(llm::TemplateId::decompose, {{"query", query}}));
    } catch (const std::exception& e) {
        DecomposedQuery dq{query, query, query, {}, true, {}};
        dq.warnings.push_back(std::string("query decomposition failed, using the original query: ") + e.what());
        return dq;
    }
}

CandidateSet retrieve(const DecomposedQuery& dq, const HybridIndex& index, EmbeddingProvider& embedder,
                      const RetrievalConfig& config) {
    CandidateSet out;
    if (index.size() == 0) return out;

    SearchRequest snippet_req;
    snippet_req.sparse_text = dq.keyword_query;
    snippet_req.filter = dq.filter;
    snippet_req.k = config.max_snippets;
    try {
        std::vector<std::string> one{dq.semantic_query};
        snippet_req.dense_query = embed(one, embedder).at(0);
    } catch (const std::exception& e) {
        out.warnings.push_back(std::string("query embedding failed, snippet search is keyword-only: ") + e.what());
    }

    SearchRequest abstract_req;
    abstract_req.sparse_text = dq.keyword_query;
    abstract_req.filter = dq.filter;
    abstract_req.k = config.max_abstracts;
    abstract_req.kinds = kinds::title | kinds::abstract;
    IndexConfig sparse_only = config.index;
    sparse_only.w_dense = 0.0;
    sparse_only.w_sparse = 1.0;

    std::vector<std::string> abstract_warnings;
    auto abstracts_future = std::async(std::launch::async, [&] {
        return search_or_warn(index, abstract_req, sparse_only, abstract_warnings, "abstract");
    });
    out.snippets = search_or_warn(index, snippet_req, config.index, out.warnings, "snippet");
    out.abstracts = abstracts_future.get();
    out.warnings.insert(out.warnings.end(), abstract_warnings.begin(), abstract_warnings.end());

    std::unordered_map<std::string, double> snippet_score;
    for (const auto& s : out.snippets) snippet_score.emplace(s.passage_id, s.fused_score);
    std::unordered_map<std::string, double> abstract_score;
    for (const auto& a : out.abstracts) abstract_score.emplace(a.passage_id, a.fused_score);
    std::erase_if(out.abstracts, [&](const ScoredPassage& a) {
        auto it = snippet_score.find(a.passage_id);
        return it != snippet_score.end() && it->second >= a.fused_score;
    });
    std::erase_if(out.snippets, [&](const ScoredPassage& s) {
        auto it = abstract_score.find(s.passage_id);
        return it != abstract_score.end() && it->second > s.fused_score;
    });
    return out;
}

nlohmann::json scored_passage_to_json(const ScoredPassage& p) {
    return {{"passage_id", p.passage_id},
            {"paper_id", p.paper_id},
            {"dense_score", p.dense_score},
            {"sparse_score_raw", p.sparse_score_raw},
            {"sparse_score_norm", p.sparse_score_norm},
            {"fused_score", p.fused_score},
            {"provenance", to_string(p.provenance)}};
}

ScoredPassage scored_passage_from_json(const nlohmann::json& j) {
    ScoredPassage p;
    p.passage_id = j.at("passage_id").get<std::string>();
    p.paper_id = j.at("paper_id").get<std::string>();
    p.dense_score = j.value("dense_score", 0.0);
    p.sparse_score_raw = j.value("sparse_score_raw", 0.0);
    p.sparse_score_norm = j.value("sparse_score_norm", 0.0);
    p.fused_score = j.value("fused_score", 0.0);
    auto prov = j.value("provenance", std::string("dense"));
    p.provenance = prov == "both" ? Provenance::both : prov == "sparse" ? Provenance::sparse : Provenance::dense;
    return p;
}

nlohmann::json filter_to_json(const MetadataFilter& f) {
    nlohmann::json j = nlohmann::json::object();
    if (f.year_min) j["year_min"] = *f.year_min;
    if (f.year_max) j["year_max"] = *f.year_max;
    if (f.venues) j["venues"] = *f.venues;
    if (f.fields_of_study) j["fields_of_study"] = *f.fields_of_study;
    return j;
}

nlohmann::json to_json(const DecomposedQuery& dq) {
    return {{"original", dq.original},
            {"keyword_query", dq.keyword_query},
            {"semantic_query", dq.semantic_query},
            {"filter", filter_to_json(dq.filter)},
            {"degraded", dq.degraded}};
}

nlohmann::json to_json(const CandidateSet& c) {
    nlohmann::json j{{"snippets", nlohmann::json::array()}, {"abstracts", nlohmann::json::array()}};
    for (const auto& s : c.snippets) j["snippets"].push_back(scored_passage_to_json(s));
    for (const auto& a : c.abstracts) j["abstracts"].push_back(scored_passage_to_json(a));
    j["warnings"] = c.warnings;
    return j;
}

CandidateSet candidate_set_from_json(const nlohmann::json& j) {
    CandidateSet c;
    for (const auto& s : j.value("snippets", nlohmann::json::array())) c.snippets.push_back(scored_passage_from_json(s));
    for (const auto& a : j.value("abstracts", nlohmann::json::array()))
        c.abstracts.push_back(scored_passage_from_json(a));
    return c;
}

}  // namespace litqa
