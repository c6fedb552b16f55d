#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "litqa/llm/scripted.hpp"
#include "litqa/retrieval/orchestrator.hpp"
#include "support/indexed.hpp"
#include "support/synthetic.hpp"

using namespace litqa;
using nlohmann::json;

namespace {

llm::Gateway scripted_gateway(const json& script) {
    return llm::Gateway(std::make_shared<llm::ScriptedProvider>(llm::parse_script(script)));
}

Paper paper(const std::string& id, const std::string& abstract, int year, std::vector<std::string> body = {}) {
    Paper p;
    p.paper_id = id;
    p.title = "Paper " + id;
    p.abstract = abstract;
    p.year = year;
    p.venue = "ACL";
    p.fields_of_study = {"Computer Science"};
    for (std::size_t i = 0; i < body.size(); ++i) p.body_sections.push_back({"Section " + std::to_string(i), body[i]});
    return p;
}

class BrokenEmbedder final : public EmbeddingProvider {
public:
    std::string id() const override { return "broken"; }
    std::size_t dimension() const override { return 256; }
    std::vector<Embedding> embed_batch(std::span<const std::string>) override {
        throw std::runtime_error("embedding service down");
    }
};

void check_caps_and_uniqueness(const CandidateSet& c, const HybridIndex& index) {
    CHECK(c.snippets.size() <= 256);
    CHECK(c.abstracts.size() <= 20);
    std::set<std::string> ids;
    for (const auto& s : c.snippets) CHECK(ids.insert(s.passage_id).second);
    for (const auto& a : c.abstracts) {
        CHECK(ids.insert(a.passage_id).second);
        auto kind = index.passage(a.passage_id).kind;
        CHECK((kind == PassageKind::abstract || kind == PassageKind::title));
    }
}

}  // namespace

TEST_CASE("decomposition output is parsed into queries and a filter", "[retrieval][decompose]") {
    auto dq = parse_decomposition("q", json{{"keyword", "RAG scientific QA"},
                                            {"semantic", "how do retrieval-augmented systems answer scientific questions?"},
                                            {"year_min", 2020}});
    CHECK(dq.keyword_query == "RAG scientific QA");
    CHECK(dq.semantic_query == "how do retrieval-augmented systems answer scientific questions?");
    CHECK(dq.filter.year_min == 2020);
    CHECK_FALSE(dq.filter.year_max);
    CHECK_FALSE(dq.filter.venues);
    CHECK(dq.warnings.empty());
    CHECK_FALSE(dq.degraded);
}

TEST_CASE("decompose extracts venue and year constraints", "[retrieval][decompose]") {
    const std::string q = "papers after 2021 in ACL on rerankers";
    auto gw = scripted_gateway(json::array({{{"template_id", "decompose"},
                                             {"match", {{"query", q}}},
                                             {"response", R"({"keyword": "rerankers", "semantic": "neural rerankers for )"
                                                          R"(retrieval", "year": "2022-", "venues": ["ACL"]})"}}}));
    auto dq = decompose(q, gw);
    CHECK(dq.keyword_query == "rerankers");
    CHECK(dq.filter.year_min == 2022);
    CHECK_FALSE(dq.filter.year_max);
    CHECK(dq.filter.venues == std::set<std::string>{"ACL"});
    CHECK_FALSE(dq.degraded);
}

TEST_CASE("year ranges in every accepted spelling", "[retrieval][decompose]") {
    auto years = [](json j) {
        j["keyword"] = "k";
        j["semantic"] = "s";
        auto dq = parse_decomposition("q", j);
        return std::make_pair(dq.filter.year_min, dq.filter.year_max);
    };
    using Y = std::pair<std::optional<int>, std::optional<int>>;
    CHECK(years({{"year", "2020-2022"}}) == Y{2020, 2022});
    CHECK(years({{"year", "-2019"}}) == Y{std::nullopt, 2019});
    CHECK(years({{"year", "2021"}}) == Y{2021, 2021});
    CHECK(years({{"year_min", "2018"}, {"year_max", nullptr}}) == Y{2018, std::nullopt});
    CHECK(years({{"year_min", 2023}, {"year_max", 2020}}) == Y{std::nullopt, std::nullopt});
    CHECK(years({{"year", "recent"}}) == Y{std::nullopt, std::nullopt});
    CHECK(years({{"year", "20202021"}}) == Y{std::nullopt, std::nullopt});
}

TEST_CASE("missing decomposition fields fall back to the original query", "[retrieval][decompose]") {
    auto dq = parse_decomposition("original question", json{{"keyword", "  "}, {"venues", "ACL, EMNLP"}});
    CHECK(dq.keyword_query == "original question");
    CHECK(dq.semantic_query == "original question");
    CHECK(dq.filter.venues == std::set<std::string>{"ACL", "EMNLP"});
    CHECK(dq.warnings.size() == 2);
}

TEST_CASE("malformed decomposition twice degrades without failing", "[retrieval][decompose]") {
    auto gw = scripted_gateway(json::array({{{"template_id", "decompose"}, {"response", "not json at all"}}}));
    auto dq = decompose("what is BM25?", gw);
    CHECK(dq.degraded);
    CHECK(dq.keyword_query == "what is BM25?");
    CHECK(dq.semantic_query == "what is BM25?");
    CHECK(dq.filter.empty());
    REQUIRE(dq.warnings.size() == 1);
    CHECK(gw.usage_log().size() == 2);

    auto down = scripted_gateway(json::array({{{"template_id", "decompose"}, {"error", "503"}}}));
    CHECK(decompose("q", down).degraded);
}

TEST_CASE("a filter excluding every paper gives an empty candidate set", "[retrieval]") {
    HashEmbeddingProvider provider;
    std::vector<Paper> papers;
    for (int i = 0; i < 5; ++i) papers.push_back(paper("P" + std::to_string(i), "rerankers for retrieval", 2015 + i));
    auto ic = testing::index_papers(std::move(papers), provider);
    DecomposedQuery dq{"q", "rerankers", "rerankers", {}, false, {}};
    dq.filter.year_min = 2030;
    auto c = retrieve(dq, ic->index, provider);
    CHECK(c.empty());
}

TEST_CASE("snippet arm is capped at 256 and abstract arm at 20", "[retrieval]") {
    HashEmbeddingProvider provider;
    std::mt19937_64 rng(41);
    std::vector<Paper> papers;
    for (int i = 0; i < 100; ++i) {
        std::vector<std::string> body;
        for (int s = 0; s < 3; ++s) body.push_back("Rerankers improve retrieval. " + testing::make_sentence(rng, 12));
        papers.push_back(paper("P" + std::to_string(i), "Rerankers for retrieval. " + testing::make_sentence(rng, 10),
                               2020, body));
    }
    auto ic = testing::index_papers(std::move(papers), provider);
    REQUIRE(ic->index.size() == 500);
    DecomposedQuery dq{"q", "rerankers retrieval", "rerankers for retrieval", {}, false, {}};
    auto c = retrieve(dq, ic->index, provider);
    CHECK(c.snippets.size() + c.abstracts.size() <= 276);
    CHECK(c.snippets.size() >= 236);
    CHECK(c.abstracts.size() <= 20);
    check_caps_and_uniqueness(c, ic->index);

    RetrievalConfig narrow;
    narrow.max_snippets = 7;
    narrow.max_abstracts = 3;
    auto small = retrieve(dq, ic->index, provider, narrow);
    CHECK(small.snippets.size() <= 7);
    CHECK(small.abstracts.size() <= 3);
}

TEST_CASE("exactly 256 snippets when the abstract arm cannot overlap", "[retrieval]") {
    HashEmbeddingProvider provider;
    std::vector<Paper> papers;
    for (int i = 0; i < 300; ++i)
        papers.push_back(paper("P" + std::to_string(i), "unrelated text", 2020, {"hybrid retrieval passage"}));
    auto ic = testing::index_papers(std::move(papers), provider);
    DecomposedQuery dq{"q", "hybrid", "hybrid retrieval", {}, false, {}};
    auto c = retrieve(dq, ic->index, provider);
    CHECK(c.snippets.size() == 256);
    CHECK(c.abstracts.empty());
}

TEST_CASE("a passage found by both arms appears once", "[retrieval]") {
    HashEmbeddingProvider provider;
    auto ic = testing::index_papers({paper("A", "sparse retrieval with rerankers", 2020),
                                     paper("B", "protein folding", 2020), paper("C", "climate models", 2020)},
                                    provider);
    DecomposedQuery dq{"q", "rerankers", "rerankers", {}, false, {}};
    auto c = retrieve(dq, ic->index, provider);
    check_caps_and_uniqueness(c, ic->index);
    std::size_t seen = 0;
    for (const auto& s : c.snippets) seen += s.passage_id == "A#a:0";
    for (const auto& a : c.abstracts) seen += a.passage_id == "A#a:0";
    CHECK(seen == 1);
}

TEST_CASE("retrieve is deterministic and caps hold on random fixtures", "[retrieval][property]") {
    HashEmbeddingProvider provider;
    std::mt19937_64 rng(42);
    for (int t = 0; t < 10; ++t) {
        std::vector<Paper> papers;
        int n = 5 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) papers.push_back(testing::make_paper(rng, "R" + std::to_string(i)));
        auto ic = testing::index_papers(std::move(papers), provider);
        std::string q = testing::make_sentence(rng, 6);
        DecomposedQuery dq{q, q, q, {}, false, {}};
        if (t % 3 == 0) dq.filter.year_min = 2015;
        auto a = retrieve(dq, ic->index, provider);
        auto b = retrieve(dq, ic->index, provider);
        CHECK(to_json(a) == to_json(b));
        check_caps_and_uniqueness(a, ic->index);
    }
}

TEST_CASE("query embedding failure leaves keyword-only snippets", "[retrieval]") {
    HashEmbeddingProvider provider;
    auto ic = testing::index_papers({paper("A", "sparse retrieval with rerankers", 2020),
                                     paper("B", "protein folding", 2020)},
                                    provider);
    BrokenEmbedder broken;
    DecomposedQuery dq{"q", "protein", "protein", {}, false, {}};
    auto c = retrieve(dq, ic->index, broken);
    REQUIRE(c.warnings.size() == 1);
    CHECK(c.warnings[0].find("keyword-only") != std::string::npos);
    CHECK(!c.empty());
    for (const auto& s : c.snippets) CHECK(s.provenance == Provenance::sparse);
}

TEST_CASE("candidate sets round-trip through JSON", "[retrieval]") {
    HashEmbeddingProvider provider;
    auto ic = testing::index_papers({paper("A", "sparse retrieval with rerankers", 2020)}, provider);
    DecomposedQuery dq{"q", "rerankers", "rerankers", {}, false, {}};
    auto c = retrieve(dq, ic->index, provider);
    auto back = candidate_set_from_json(to_json(c));
    back.warnings = c.warnings;
    CHECK(to_json(back) == to_json(c));
}
