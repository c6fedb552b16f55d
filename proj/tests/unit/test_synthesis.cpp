#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <regex>
#include <set>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/llm/scripted.hpp"
#include "litqa/synthesis/synthesis.hpp"
#include "support/indexed.hpp"
#include "support/synthetic.hpp"

using namespace litqa;
using nlohmann::json;

namespace {

std::shared_ptr<llm::ScriptedProvider> scripted(const json& j) {
    return std::make_shared<llm::ScriptedProvider>(llm::parse_script(j));
}

llm::GatewayConfig fast() {
    llm::GatewayConfig c;
    c.backoff = std::chrono::milliseconds(0);
    return c;
}

Paper paper(const std::string& id, const std::string& abstract, std::vector<BodySection> body = {}) {
    Paper p;
    p.paper_id = id;
    p.title = "Title of " + id;
    p.abstract = abstract;
    p.body_sections = std::move(body);
    return p;
}

struct World {
    HashEmbeddingProvider provider;
    std::unique_ptr<testing::IndexedCorpus> ic;

    // Every passage, papers in corpus order.
    RerankedSet everything() const {
        RerankedSet r;
        for (const auto& p : ic->passages) {
            RerankedPassage rp;
            rp.candidate.passage_id = p.passage_id;
            rp.candidate.paper_id = p.paper_id;
            r.items.push_back(rp);
        }
        r.retained_k = r.items.size();
        return r;
    }
};

std::unique_ptr<World> world(std::vector<Paper> papers) {
    auto w = std::make_unique<World>();
    w->ic = testing::index_papers(std::move(papers), w->provider);
    return w;
}

std::vector<Paper> small_corpus() {
    return {paper("P1", "Alpha beta gamma. Delta epsilon zeta.",
                  {{"Methods", "We train   a model on\nlarge corpora. Results improve steadily."}}),
            paper("P2", "Unrelated work on weather balloons.")};
}

std::vector<Quote> fake_quotes(std::size_t n) {
    std::vector<Quote> qs;
    for (std::size_t i = 0; i < n; ++i) {
        Quote q;
        q.quote_id = "Q" + std::to_string(i + 1);
        q.paper_id = "P" + std::to_string(i + 1);
        q.text = "quote text " + std::to_string(i + 1);
        qs.push_back(q);
    }
    return qs;
}

const std::regex kMarker(R"(\[([A-Z]?\d+|M)\])");

std::vector<std::string> markers_in(const std::string& body) {
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), kMarker); it != std::sregex_iterator(); ++it)
        out.push_back((*it)[1].str());
    return out;
}

// Closure in both directions: each marker has a citation and each citation a marker.
void check_closure(const ReportSection& s) {
    auto ms = markers_in(s.body);
    std::set<std::string> used(ms.begin(), ms.end());
    for (const auto& m : used) CHECK(s.find_citation(m) != nullptr);
    for (const auto& [m, _] : s.citations) CHECK(used.count(m) == 1);
}

// Straightforward restatement of the filtering rule over a missing mask.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fixpoint_oracle(const std::vector<std::vector<bool>>& missing,
                                                                              double tau) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t r = 0; r < missing.size(); ++r) rows.push_back(r);
    for (std::size_t c = 0; c < (missing.empty() ? 0 : missing[0].size()); ++c) cols.push_back(c);
    for (;;) {
        if (rows.empty() || cols.empty()) break;
        bool dropped = false;
        double best = -1;
        std::size_t at = 0;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            std::size_t m = 0;
            for (auto r : rows) m += missing[r][cols[i]];
            double f = double(m) / rows.size();
            if (f > tau && f >= best) best = f, at = i, dropped = true;
        }
        if (dropped) {
            cols.erase(cols.begin() + at);
            continue;
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::size_t m = 0;
            for (auto c : cols) m += missing[rows[i]][c];
            double f = double(m) / cols.size();
            if (f > tau && f >= best) best = f, at = i, dropped = true;
        }
        if (!dropped) break;
        rows.erase(rows.begin() + at);
    }
    return {rows, cols};
}

ComparisonTable table_from_mask(const std::vector<std::vector<bool>>& missing) {
    ComparisonTable t;
    for (std::size_t c = 0; c < missing[0].size(); ++c) t.columns.push_back("c" + std::to_string(c));
    for (std::size_t r = 0; r < missing.size(); ++r) {
        t.rows.push_back("r" + std::to_string(r));
        std::vector<TableCell> row;
        for (std::size_t c = 0; c < missing[r].size(); ++c)
            row.push_back(missing[r][c] ? TableCell{}
                                        : TableCell{std::to_string(r) + "," + std::to_string(c), std::nullopt});
        t.cells.push_back(row);
    }
    return t;
}

}  // namespace

// ---- quotes ----

TEST_CASE("quote responses split on ellipses and honour the sentinel", "[synthesis][quotes]") {
    CHECK_FALSE(split_quote_response("").has_value());
    CHECK_FALSE(split_quote_response("  NONE ").has_value());
    CHECK_FALSE(split_quote_response("none.").has_value());
    CHECK(*split_quote_response("a ... b") == std::vector<std::string>{"a", "b"});
    CHECK(*split_quote_response("a\xE2\x80\xA6" "b") == std::vector<std::string>{"a", "b"});
    CHECK(*split_quote_response("a.... b ...") == std::vector<std::string>{"a", "b"});
    CHECK(*split_quote_response("single span") == std::vector<std::string>{"single span"});
}

TEST_CASE("contexts put the abstract first and keep rank order", "[synthesis][quotes]") {
    auto w = world(small_corpus());
    auto ctxs = build_contexts(w->everything(), w->ic->index, w->ic->corpus);
    REQUIRE(ctxs.size() == 2);
    CHECK(ctxs[0].paper_id == "P1");
    CHECK(ctxs[0].assembled_text.rfind("Alpha beta gamma.", 0) == 0);
    CHECK(ctxs[0].segments[0].source == "abstract");
    for (const auto& ctx : ctxs)
        for (const auto& pid : ctx.passage_ids) CHECK(w->ic->index.passage(pid).paper_id == ctx.paper_id);
}

TEST_CASE("extract_quotes keeps verbatim spans and resolves them", "[synthesis][quotes]") {
    auto w = world(small_corpus());
    auto provider = scripted(json::array({
        {{"template_id", "extract_quotes"}, {"match", {{"paper_id", "P1"}}},
         {"response", "Alpha beta gamma ... We train a model on large corpora."}},
        {{"template_id", "extract_quotes"}, {"match", {{"paper_id", "P2"}}}, {"response", "NONE"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    auto ex = extract_quotes("q", w->everything(), w->ic->index, w->ic->corpus, gw);
    REQUIRE(ex.quotes.size() == 2);
    CHECK(ex.dropped_fragments == 0);
    CHECK(ex.discarded_papers == std::vector<std::string>{"P2"});
    CHECK(ex.quotes[0].quote_id == "Q1");
    CHECK(ex.quotes[0].source == "abstract");
    CHECK(ex.quotes[0].text == "Alpha beta gamma");
    CHECK(ex.quotes[0].field_span == CharSpan{0, 16});
    CHECK(ex.quotes[1].quote_id == "Q2");
    CHECK(ex.quotes[1].text == "We train   a model on\nlarge corpora.");
    CHECK(ex.quotes[1].field == FieldRef{FieldRef::Kind::body, 0});
    const auto& body = w->ic->corpus.at("P1").body_sections[0].text;
    CHECK(body.substr(ex.quotes[1].field_span.start, ex.quotes[1].field_span.size()) == ex.quotes[1].text);
    REQUIRE(ex.contexts.size() == 1);
    for (const auto& q : ex.quotes)
        CHECK(ex.contexts[0].assembled_text.substr(q.start, q.end - q.start) == q.text);
}

TEST_CASE("hallucinated fragments are dropped with a warning", "[synthesis][quotes]") {
    auto w = world(small_corpus());
    auto provider = scripted(json::array({
        {{"template_id", "extract_quotes"}, {"match", {{"paper_id", "P1"}}},
         {"response", "Delta epsilon zeta. ... The moon is made of cheese."}},
        {{"template_id", "extract_quotes"}, {"match", {{"paper_id", "P2"}}}, {"error", "boom"}, {"retriable", false}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    auto ex = extract_quotes("q", w->everything(), w->ic->index, w->ic->corpus, gw);
    REQUIRE(ex.quotes.size() == 1);
    CHECK(ex.quotes[0].text == "Delta epsilon zeta.");
    CHECK(ex.dropped_fragments == 1);
    CHECK(ex.discarded_papers == std::vector<std::string>{"P2"});
    CHECK(ex.warnings.size() == 2);
}

TEST_CASE("located quotes are verbatim under whitespace perturbation", "[synthesis][quotes][property]") {
    std::mt19937_64 rng(71);
    std::vector<Paper> papers;
    for (int i = 0; i < 12; ++i) papers.push_back(testing::make_paper(rng, "V" + std::to_string(i)));
    auto w = world(std::move(papers));
    auto ctxs = build_contexts(w->everything(), w->ic->index, w->ic->corpus);
    REQUIRE(!ctxs.empty());
    std::size_t located = 0;
    for (int t = 0; t < 300; ++t) {
        const auto& ctx = ctxs[rng() % ctxs.size()];
        auto norm = normalize_ws(ctx.assembled_text);
        std::size_t a = rng() % norm.size();
        std::size_t len = 1 + rng() % std::min<std::size_t>(120, norm.size() - a);
        std::string frag = normalize_ws(norm.substr(a, len));
        if (frag.empty()) continue;
        std::string noisy;
        for (char c : frag) noisy += c == ' ' ? std::string(rng() % 2 ? "\n  " : "\t") : std::string(1, c);
        auto q = locate_quote(ctx, noisy);
        REQUIRE(q.has_value());
        ++located;
        CHECK(normalize_ws(q->text) == frag);
        CHECK(ctx.assembled_text.substr(q->start, q->end - q->start) == q->text);
        CHECK(norm.find(normalize_ws(q->text)) != std::string::npos);
        CHECK_FALSE(locate_quote(ctx, frag + " zzqx").has_value());
    }
    CHECK(located > 250);
}

// ---- citation following ----

TEST_CASE("quotes over citation anchors pull in cited abstracts once", "[synthesis][follow]") {
    Paper src = paper("S", "Prior work [7] showed gains. Nothing cited here.");
    src.citations.push_back({FieldRef{FieldRef::Kind::abstract, 0}, CharSpan{11, 14}, "P7"});
    src.citations.push_back({FieldRef{FieldRef::Kind::abstract, 0}, CharSpan{11, 14}, "GONE"});
    auto w = world({src, paper("P7", "The cited abstract.")});
    auto provider = scripted(json::array({
        {{"template_id", "extract_quotes"}, {"match", {{"paper_id", "S"}}},
         {"response", "Prior work [7] showed gains. ... Nothing cited here. ... work [7]"}},
        {{"template_id", "extract_quotes"}, {"response", "NONE"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    auto ex = extract_quotes("q", w->everything(), w->ic->index, w->ic->corpus, gw);
    REQUIRE(ex.quotes.size() == 3);
    CHECK(ex.quotes[0].embedded_citations == std::vector<std::string>{"P7", "GONE"});
    CHECK(ex.quotes[1].embedded_citations.empty());

    auto none = follow_citations({&ex.quotes[1]}, w->ic->corpus);
    CHECK(none.abstracts.empty());
    CHECK(none.missing == 0);

    auto both = follow_citations({&ex.quotes[0], &ex.quotes[1], &ex.quotes[2]}, w->ic->corpus);
    REQUIRE(both.abstracts.size() == 1);
    CHECK(both.abstracts[0].paper_id == "P7");
    CHECK(both.abstracts[0].abstract == "The cited abstract.");
    CHECK(both.missing == 1);

    std::map<std::string, std::string> ids;
    auto pool = build_reference_pool({&ex.quotes[0]}, both, w->ic->corpus, ids);
    REQUIRE(pool.size() == 2);
    CHECK(pool[0].marker == "Q1");
    CHECK(pool[1].marker == "A1");
    CHECK(pool[1].target.kind == Citation::Kind::abstract);
    auto again = build_reference_pool({}, both, w->ic->corpus, ids);
    CHECK(again[0].marker == "A1");
}

// ---- outline ----

TEST_CASE("outline parses themes, formats and assignments", "[synthesis][outline]") {
    auto provider = scripted(json::array({
        {{"template_id", "outline"},
         {"response", json{{"sections", {{{"title", "Background"}, {"format", "paragraph"}},
                                         {{"title", "Methods"}, {"format", "bullets"}},
                                         {{"title", "Open problems"}, {"format", "paragraph"}}}}}
                          .dump()}},
        {{"template_id", "assign_quotes"},
         {"response", json{{"assignments", {{"Q1", {1}}, {"Q2", {1, 0}}, {"Q3", {1}}, {"Q4", {0}}, {"Q5", {1}}}}}.dump()}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    auto o = plan_outline("q", fake_quotes(5), gw);
    REQUIRE(o.sections.size() == 3);
    CHECK_FALSE(o.fallback);
    CHECK_FALSE(o.inserted_intro);
    CHECK(o.sections[1].format == SectionFormat::bullets);
    CHECK(o.sections[0].quote_ids == std::vector<std::string>{"Q2", "Q4"});
    CHECK(o.sections[1].quote_ids == std::vector<std::string>{"Q1", "Q2", "Q3", "Q5"});
    CHECK(o.sections[2].quote_ids.empty());
    CHECK(o.unassigned_quotes.empty());
    for (std::size_t i = 0; i < o.sections.size(); ++i) CHECK(o.sections[i].position == i);
}

TEST_CASE("outline without an introduction gets one at position 0", "[synthesis][outline]") {
    auto provider = scripted(json::array({
        {{"template_id", "outline"},
         {"response", R"({"sections":[{"title":"Methods","format":"bulleted list"},{"title":"Results","format":"paragraph"}]})"}},
        {{"template_id", "assign_quotes"}, {"response", R"({"assignments":{"Q1":[1],"Q2":[7]}})"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    auto o = plan_outline("q", fake_quotes(3), gw);
    REQUIRE(o.sections.size() == 3);
    CHECK(o.inserted_intro);
    CHECK(o.sections[0].title == "Introduction");
    CHECK(o.sections[0].quote_ids.empty());
    CHECK(o.sections[1].title == "Methods");
    CHECK(o.sections[1].format == SectionFormat::bullets);
    CHECK(o.sections[1].quote_ids == std::vector<std::string>{"Q1"});
    CHECK(o.unassigned_quotes == std::vector<std::string>{"Q2", "Q3"});
}

TEST_CASE("a late background section moves to the front", "[synthesis][outline]") {
    auto provider = scripted(json::array({
        {{"template_id", "outline"},
         {"response", R"({"sections":[{"title":"Methods"},{"title":"Results"},{"title":"Background and overview"}]})"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    auto o = plan_outline("q", {}, gw);
    REQUIRE(o.sections.size() == 3);
    CHECK(o.sections[0].title == "Background and overview");
    CHECK(o.sections[1].title == "Methods");
    CHECK(is_intro_title(o.sections[0].title));
    CHECK(provider->call_count(llm::TemplateId::assign_quotes) == 0);
}

TEST_CASE("outline failures fall back to a single Answer section", "[synthesis][outline]") {
    auto quotes = fake_quotes(4);
    SECTION("malformed twice") {
        auto provider = scripted(json::array({{{"template_id", "outline"}, {"response", "not json"}}}));
        llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
        auto o = plan_outline("q", quotes, gw);
        CHECK(provider->call_count(llm::TemplateId::outline) == 2);
        REQUIRE(o.sections.size() == 1);
        CHECK(o.fallback);
        CHECK(o.sections[0].title == "Answer");
        CHECK(o.sections[0].quote_ids.size() == 4);
    }
    SECTION("assignment fails") {
        auto provider = scripted(json::array({
            {{"template_id", "outline"}, {"response", R"({"sections":[{"title":"Intro"},{"title":"B"}]})"}},
            {{"template_id", "assign_quotes"}, {"error", "down"}, {"retriable", false}},
        }));
        llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
        auto o = plan_outline("q", quotes, gw);
        CHECK(o.fallback);
        CHECK(o.sections.size() == 1);
        CHECK_FALSE(o.warnings.empty());
    }
}

// ---- sections ----

TEST_CASE("markers resolve against the pool", "[synthesis][sections]") {
    std::vector<Reference> pool{{"Q1", {Citation::Kind::quote, "Q1", "P1", "T1", "one"}},
                                {"Q3", {Citation::Kind::quote, "Q3", "P3", "T3", "three"}},
                                {"A1", {Citation::Kind::abstract, "", "P9", "T9", "abs"}}};
    auto r = resolve_markers("X holds [Q3]. Y [Q1, A1] and Z [M]. Note [see above] and [Q99] and [12].", pool);
    CHECK(r.body == "X holds [Q3]. Y [Q1][A1] and Z [M]. Note [see above] and [M] and [M].");
    CHECK(r.rewritten == 2);
    CHECK(r.memory == 3);
    std::vector<std::string> order;
    for (const auto& [m, _] : r.citations) order.push_back(m);
    CHECK(order == std::vector<std::string>{"Q3", "Q1", "A1", "M"});

    auto bare = resolve_markers("  No markers here.  ", pool);
    CHECK(bare.body == "No markers here. [M]");
    CHECK(bare.memory == 1);
    REQUIRE(bare.citations.size() == 1);
    CHECK(bare.citations[0].second.kind == Citation::Kind::llm_memory);
}

TEST_CASE("section citing a quote and memory", "[synthesis][sections]") {
    Outline outline = fallback_outline({});
    std::vector<Reference> pool{{"Q3", {Citation::Kind::quote, "Q3", "P3", "T3", "three"}}};
    auto provider = scripted(json::array({
        {{"template_id", "section"}, {"response", R"({"tldr":"Short.","body":"A claim [Q3]. Common knowledge [M]."})"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    auto s = generate_section("q", outline, 0, {}, pool, gw, d);
    CHECK(s.tldr == "Short.");
    REQUIRE(s.citations.size() == 2);
    CHECK(s.find_citation("Q3")->kind == Citation::Kind::quote);
    CHECK(s.find_citation("Q3")->quote_id == "Q3");
    CHECK(s.find_citation("M")->kind == Citation::Kind::llm_memory);
    CHECK(d.memory_citations == 1);
    check_closure(s);
}

TEST_CASE("empty pool yields a memory-only section and unknown markers are rewritten", "[synthesis][sections]") {
    Outline outline = fallback_outline({});
    auto provider = scripted(json::array({
        {{"template_id", "section"}, {"response", R"({"tldr":"t","body":"First [Q99]. Second [Q2]."})"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    auto s = generate_section("q", outline, 0, {}, {}, gw, d);
    CHECK(s.body == "First [M]. Second [M].");
    REQUIRE(s.citations.size() == 1);
    CHECK(s.citations[0].second.kind == Citation::Kind::llm_memory);
    CHECK(d.rewritten_markers == 2);
    CHECK(d.memory_citations == 2);
    CHECK(d.warnings.size() == 1);
    check_closure(s);
}

TEST_CASE("section failure yields a placeholder", "[synthesis][sections]") {
    Outline outline = fallback_outline({});
    auto provider = scripted(json::array({{{"template_id", "section"}, {"error", "overloaded"}}}));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    auto s = generate_section("q", outline, 0, {}, {}, gw, d);
    CHECK(s.failed);
    CHECK(s.citations.empty());
    CHECK_FALSE(s.body.empty());
    CHECK(d.warnings.size() == 1);
}

TEST_CASE("section prompts only see earlier sections", "[synthesis][sections][property]") {
    Outline outline;
    for (std::size_t i = 0; i < 4; ++i) outline.sections.push_back({i, "Title" + std::to_string(i), SectionFormat::paragraph, {}});
    json script = json::array();
    for (std::size_t i = 0; i < 4; ++i)
        script.push_back({{"template_id", "section"},
                          {"match", {{"position", std::to_string(i)}}},
                          {"response", json{{"tldr", "tldr" + std::to_string(i)}, {"body", "body" + std::to_string(i) + " [M]"}}.dump()}});
    auto provider = scripted(script);
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    std::vector<ReportSection> done;
    for (std::size_t i = 0; i < 4; ++i) done.push_back(generate_section("q", outline, i, done, {}, gw, d));
    auto calls = provider->calls();
    REQUIRE(calls.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& prior = calls[i].vars.at("prior_sections");
        for (std::size_t j = 0; j < 4; ++j) {
            bool seen = prior.find("body" + std::to_string(j)) != std::string::npos;
            CHECK(seen == (j < i));
        }
        CHECK(calls[i].vars.at("outline").find("Title3") != std::string::npos);
    }
}

// ---- tables ----

namespace {

struct TableWorld {
    Corpus corpus;
    ReportSection section;

    explicit TableWorld(std::size_t n_papers, SectionFormat fmt = SectionFormat::bullets) {
        section.position = 2;
        section.title = "Approaches";
        section.format = fmt;
        for (std::size_t i = 0; i < n_papers; ++i) {
            auto id = "T" + std::to_string(i);
            corpus.add(paper(id, "Abstract of " + id + ".", {{"Setup", "We use batch size 3" + std::to_string(i) + "."}}));
            section.citations.emplace_back("Q" + std::to_string(i + 1),
                                           Citation{Citation::Kind::quote, "Q" + std::to_string(i + 1), id, "", "x"});
        }
        section.citations.emplace_back("M", Citation{});
    }
};

}  // namespace

TEST_CASE("tables need a bulleted section citing two papers", "[synthesis][table]") {
    auto provider = scripted(json::array());
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    TableWorld para(3, SectionFormat::paragraph);
    CHECK_FALSE(generate_table("q", para.section, cited_papers(para.section, para.corpus), para.corpus, gw, {}, d));
    TableWorld one(1);
    CHECK(cited_papers(one.section, one.corpus) == std::vector<std::string>{"T0"});
    CHECK_FALSE(generate_table("q", one.section, cited_papers(one.section, one.corpus), one.corpus, gw, {}, d));
    CHECK(provider->calls().empty());
}

TEST_CASE("three papers and four aspects make twelve cell calls", "[synthesis][table]") {
    TableWorld tw(3);
    auto provider = scripted(json::array({
        {{"template_id", "table_aspects"}, {"response", R"({"aspects":["batch size","data","loss","metric"]})"}},
        {{"template_id", "table_value"}, {"match", {{"paper_id", "T1"}, {"aspect", "batch size"}}},
         {"response", R"({"value":"31","excerpt":"We use batch size 31."})"}},
        {{"template_id", "table_value"}, {"match", {{"paper_id", "T2"}, {"aspect", "batch size"}}},
         {"response", R"({"value":"32","excerpt":"a sentence that is not in the paper"})"}},
        {{"template_id", "table_value"}, {"response", R"({"value":"v","excerpt":null})"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    auto papers = cited_papers(tw.section, tw.corpus);
    CHECK(papers == std::vector<std::string>{"T0", "T1", "T2"});
    auto t = generate_table("q", tw.section, papers, tw.corpus, gw, {}, d);
    REQUIRE(t.has_value());
    CHECK(provider->call_count(llm::TemplateId::table_aspects) == 1);
    CHECK(provider->call_count(llm::TemplateId::table_value) == 12);
    CHECK(t->section_position == 2);
    CHECK(t->rows == papers);
    CHECK(t->columns.size() == 4);
    for (const auto& row : t->cells)
        for (const auto& c : row) CHECK_FALSE(c.missing());
    CHECK(t->cells[1][0].evidence == std::optional<std::string>("We use batch size 31."));
    CHECK(t->cells[2][0].value == std::optional<std::string>("32"));
    CHECK_FALSE(t->cells[2][0].evidence.has_value());
}

TEST_CASE("mostly missing aspects and failed cells are filtered", "[synthesis][table]") {
    TableWorld tw(3);
    auto provider = scripted(json::array({
        {{"template_id", "table_aspects"}, {"response", R"({"aspects":["a","b"]})"}},
        {{"template_id", "table_value"}, {"match", {{"aspect", "b"}, {"paper_id", "T0"}}}, {"error", "x"}, {"retriable", false}},
        {{"template_id", "table_value"}, {"match", {{"aspect", "b"}}}, {"response", R"({"value":"MISSING"})"}},
        {{"template_id", "table_value"}, {"response", R"({"value":"v"})"}},
    }));
    llm::Gateway gw(provider, llm::TemplateRegistry::defaults(), fast());
    Diagnostics d;
    auto t = generate_table("q", tw.section, cited_papers(tw.section, tw.corpus), tw.corpus, gw, {}, d);
    REQUIRE(t.has_value());
    CHECK(t->columns == std::vector<std::string>{"a"});
    CHECK(t->rows.size() == 3);
    CHECK(d.warnings.size() == 1);
}

TEST_CASE("filter_table examples", "[synthesis][table]") {
    std::vector<std::vector<bool>> full(4, std::vector<bool>(4, false));
    auto t = table_from_mask(full);
    CHECK(filter_table(t).cells == t.cells);

    auto mask = full;
    mask[0][2] = mask[1][2] = mask[3][2] = true;
    auto f = filter_table(table_from_mask(mask));
    CHECK(f.columns == std::vector<std::string>{"c0", "c1", "c3"});
    CHECK(f.rows.size() == 4);

    std::vector<std::vector<bool>> tie{{true, true}, {true, true}, {false, false}};
    auto g = filter_table(table_from_mask(tie));
    CHECK(g.columns.empty());
    CHECK(g.empty());
}

TEST_CASE("filter_table matches a brute-force fixpoint", "[synthesis][table][property]") {
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t R = 1 + rng() % 7, C = 1 + rng() % 7;
        double p = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
        double tau = trial % 5 == 0 ? 0.3 : 0.5;
        std::vector<std::vector<bool>> mask(R, std::vector<bool>(C));
        for (auto& row : mask)
            for (std::size_t c = 0; c < C; ++c) row[c] = std::bernoulli_distribution(p)(rng);
        auto [rows, cols] = fixpoint_oracle(mask, tau);
        auto t = filter_table(table_from_mask(mask), tau);
        std::vector<std::string> er, ec;
        for (auto r : rows) er.push_back("r" + std::to_string(r));
        for (auto c : cols) ec.push_back("c" + std::to_string(c));
        if (rows.empty() || cols.empty()) {
            CHECK(t.empty());
            continue;
        }
        CHECK(t.rows == er);
        CHECK(t.columns == ec);
        for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(t.row_missing_fraction(r) <= tau);
        for (std::size_t c = 0; c < t.columns.size(); ++c) CHECK(t.column_missing_fraction(c) <= tau);
    }
}

// ---- report serialization ----

TEST_CASE("report JSON round-trips and renders to markdown", "[synthesis][report]") {
    Report r;
    r.report_id = "abc";
    r.query = "What is fusion?";
    ReportSection s;
    s.position = 0;
    s.title = "Introduction";
    s.tldr = "Fusion mixes scores.";
    s.body = "It mixes [Q1] and memory [M].";
    s.format = SectionFormat::bullets;
    s.citations = {{"Q1", {Citation::Kind::quote, "Q1", "P1", "Paper one", "mixes"}}, {"M", Citation{}}};
    ComparisonTable t;
    t.columns = {"a"};
    t.rows = {"P1", "P2"};
    t.cells = {{TableCell{"x", "ev"}}, {TableCell{}}};
    s.table = t;
    r.sections.push_back(s);
    Quote q;
    q.quote_id = "Q1";
    q.paper_id = "P1";
    q.text = "mixes";
    q.field = FieldRef{FieldRef::Kind::body, 2};
    q.field_span = {4, 9};
    r.quotes.push_back(q);
    r.diagnostics.memory_citations = 1;

    auto j = to_json(r);
    CHECK(j["sections"][0]["citations"]["Q1"]["kind"] == "quote");
    CHECK(j["sections"][0]["citation_order"] == json::array({"Q1", "M"}));
    CHECK(j["sections"][0]["table"]["cells"][1][0]["value"].is_null());
    CHECK(j["error"].is_null());
    CHECK(to_json(report_from_json(j)) == j);

    auto md = to_markdown(r);
    CHECK(md.find("## Introduction") != std::string::npos);
    CHECK(md.find("| P2 | MISSING |") != std::string::npos);
    CHECK(md.find("- [Q1] Paper one (P1): \"mixes\"") != std::string::npos);
}
