#include "litqa/corpus/ingest.hpp"

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace litqa {

namespace {

std::string require_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw CorpusError(std::string("missing field '") + key + "'");
    if (!it->is_string()) throw CorpusError(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_string()) throw CorpusError(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

Paper paper_from_json(const json& j) {
    if (!j.is_object()) throw CorpusError("record is not a JSON object");
    Paper p;
    p.paper_id = require_string(j, "paper_id");
    if (p.paper_id.empty()) throw CorpusError("field 'paper_id' is empty");
    p.title = optional_string(j, "title");
    p.abstract = optional_string(j, "abstract");
    if (auto it = j.find("venue"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw CorpusError("field 'venue' must be a string");
        p.venue = it->get<std::string>();
    }
    if (auto it = j.find("year"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw CorpusError("field 'year' must be an integer");
        p.year = it->get<int>();
    }
    if (auto it = j.find("fields_of_study"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw CorpusError("field 'fields_of_study' must be an array");
        for (const auto& f : *it) {
            if (!f.is_string()) throw CorpusError("fields_of_study entries must be strings");
            p.fields_of_study.insert(f.get<std::string>());
        }
    }
    if (auto it = j.find("body_sections"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw CorpusError("field 'body_sections' must be an array");
        for (const auto& s : *it) {
            if (!s.is_object()) throw CorpusError("body_sections entries must be objects");
            p.body_sections.push_back({optional_string(s, "title"), require_string(s, "text")});
        }
    }
    if (p.abstract.empty() && p.body_sections.empty())
        throw CorpusError("record needs a non-empty abstract or body_sections");

    if (auto it = j.find("citations"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw CorpusError("field 'citations' must be an array");
        for (const auto& c : *it) {
            if (!c.is_object()) throw CorpusError("citations entries must be objects");
            CitationAnchor a;
            a.field = FieldRef::parse(require_string(c, "field"));
            if (!c.contains("start") || !c.contains("end") || !c["start"].is_number_unsigned() ||
                !c["end"].is_number_unsigned())
                throw CorpusError("citation needs non-negative integer 'start' and 'end'");
            a.span = {c["start"].get<std::size_t>(), c["end"].get<std::size_t>()};
            a.cited_paper_id = require_string(c, "cited_paper_id");
            if (a.field.kind == FieldRef::Kind::body && a.field.body_index >= p.body_sections.size())
                throw CorpusError("citation refers to missing " + a.field.to_string());
            const auto& text = p.field_text(a.field);
            if (a.span.start > a.span.end || a.span.end > text.size())
                throw CorpusError("citation span outside " + a.field.to_string());
            p.citations.push_back(std::move(a));
        }
    }
    return p;
}

json paper_to_json(const Paper& p) {
    json j;
    j["paper_id"] = p.paper_id;
    j["title"] = p.title;
    j["abstract"] = p.abstract;
    j["venue"] = p.venue ? json(*p.venue) : json(nullptr);
    j["year"] = p.year ? json(*p.year) : json(nullptr);
    j["fields_of_study"] = json(std::vector<std::string>(p.fields_of_study.begin(), p.fields_of_study.end()));
    j["body_sections"] = json::array();
    for (const auto& s : p.body_sections) j["body_sections"].push_back({{"title", s.title}, {"text", s.text}});
    j["citations"] = json::array();
    for (const auto& c : p.citations)
        j["citations"].push_back({{"field", c.field.to_string()},
                                  {"start", c.span.start},
                                  {"end", c.span.end},
                                  {"cited_paper_id", c.cited_paper_id}});
    return j;
}

json passage_to_json(const Passage& p) {
    return {{"passage_id", p.passage_id},
            {"paper_id", p.paper_id},
            {"kind", to_string(p.kind)},
            {"body_index", p.body_index},
            {"section_path", p.section_path},
            {"text", p.text},
            {"token_count", p.token_count},
            {"start", p.char_span.start},
            {"end", p.char_span.end},
            {"overlap_prefix_tokens", p.overlap_prefix_tokens},
            {"overlap_prefix_chars", p.overlap_prefix_chars},
            {"degenerate", p.degenerate}};
}

Passage passage_from_json(const json& j) {
    Passage p;
    p.passage_id = j.at("passage_id").get<std::string>();
    p.paper_id = j.at("paper_id").get<std::string>();
    p.kind = passage_kind_from_string(j.at("kind").get<std::string>());
    p.body_index = j.value("body_index", std::size_t{0});
    p.section_path = j.value("section_path", std::string{});
    p.text = j.at("text").get<std::string>();
    p.token_count = j.at("token_count").get<std::size_t>();
    p.char_span = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
    p.overlap_prefix_tokens = j.value("overlap_prefix_tokens", std::size_t{0});
    p.overlap_prefix_chars = j.value("overlap_prefix_chars", std::size_t{0});
    p.degenerate = j.value("degenerate", false);
    return p;
}

IngestResult ingest_corpus(std::istream& in) {
    IngestResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Paper paper;
        try {
            paper = paper_from_json(json::parse(line));
        } catch (const json::exception& e) {
            result.skipped.push_back({line_no, std::string("malformed JSON: ") + e.what()});
            continue;
        } catch (const CorpusError& e) {
            result.skipped.push_back({line_no, e.what()});
            continue;
        }
        result.corpus.add(std::move(paper));
    }
    return result;
}

void write_store(const std::filesystem::path& dir, const Corpus& corpus, const std::vector<Passage>& passages) {
    std::filesystem::create_directories(dir);
    std::ofstream papers(dir / "papers.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& p : corpus.papers()) papers << paper_to_json(p).dump() << '\n';
    std::ofstream pass(dir / "passages.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& p : passages) pass << passage_to_json(p).dump() << '\n';
    if (!papers || !pass) throw CorpusError("failed writing store at " + dir.string());
}

Store read_store(const std::filesystem::path& dir) {
    Store store;
    std::ifstream papers(dir / "papers.jsonl", std::ios::binary);
    if (!papers) throw CorpusError("cannot open " + (dir / "papers.jsonl").string());
    auto ingested = ingest_corpus(papers);
    if (!ingested.skipped.empty())
        throw CorpusError("store " + dir.string() + " has invalid record on line " +
                          std::to_string(ingested.skipped.front().line) + ": " + ingested.skipped.front().reason);
    store.corpus = std::move(ingested.corpus);
    std::ifstream pass(dir / "passages.jsonl", std::ios::binary);
    if (!pass) throw CorpusError("cannot open " + (dir / "passages.jsonl").string());
    std::string line;
    while (std::getline(pass, line)) {
        if (line.empty()) continue;
        store.passages.push_back(passage_from_json(json::parse(line)));
    }
    return store;
}

}  // namespace litqa
