#include <algorithm>
#include <cctype>
#include <set>

#include "litqa/synthesis/report.hpp"

namespace litqa {

using nlohmann::json;

namespace {

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    return j[key].get<std::string>();
}

const char* kind_name(Citation::Kind k) {
    switch (k) {
        case Citation::Kind::quote: return "quote";
        case Citation::Kind::abstract: return "abstract";
        case Citation::Kind::llm_memory: break;
    }
    return "llm_memory";
}

std::string cell_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}

}  // namespace

const char* to_string(SectionFormat f) { return f == SectionFormat::bullets ? "bullets" : "paragraph"; }

std::optional<SectionFormat> section_format_from_string(std::string_view s) {
    std::string l;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l == "paragraph" || l == "paragraphs" || l == "prose") return SectionFormat::paragraph;
    if (l == "bullets" || l == "bullet" || l == "bulleted" || l == "bulletedlist" || l == "bulletlist" ||
        l == "list" || l == "bulletpoints")
        return SectionFormat::bullets;
    return std::nullopt;
}

const Citation* ReportSection::find_citation(const std::string& marker) const {
    for (const auto& [m, c] : citations)
        if (m == marker) return &c;
    return nullptr;
}

json to_json(const Quote& q) {
    return {{"quote_id", q.quote_id},
            {"paper_id", q.paper_id},
            {"text", q.text},
            {"source", q.source},
            {"start", q.start},
            {"end", q.end},
            {"field", q.field.to_string()},
            {"field_span", {q.field_span.start, q.field_span.end}},
            {"embedded_citations", q.embedded_citations}};
}

Quote quote_from_json(const json& j) {
    Quote q;
    q.quote_id = j.at("quote_id").get<std::string>();
    q.paper_id = j.at("paper_id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.source = j.value("source", std::string());
    q.start = j.value("start", std::size_t{0});
    q.end = j.value("end", std::size_t{0});
    if (j.contains("field")) q.field = FieldRef::parse(j["field"].get<std::string>());
    if (j.contains("field_span")) q.field_span = {j["field_span"].at(0).get<std::size_t>(), j["field_span"].at(1).get<std::size_t>()};
    q.embedded_citations = j.value("embedded_citations", std::vector<std::string>{});
    return q;
}

json to_json(const Outline& o) {
    json sections = json::array();
    for (const auto& s : o.sections)
        sections.push_back({{"position", s.position}, {"title", s.title}, {"format", to_string(s.format)}, {"quote_ids", s.quote_ids}});
    return {{"sections", sections},
            {"unassigned_quotes", o.unassigned_quotes},
            {"fallback", o.fallback},
            {"inserted_intro", o.inserted_intro},
            {"warnings", o.warnings}};
}

json to_json(const Citation& c) {
    return {{"kind", kind_name(c.kind)}, {"quote_id", c.quote_id}, {"paper_id", c.paper_id},
            {"paper_title", c.paper_title}, {"text", c.text}};
}

Citation citation_from_json(const json& j) {
    Citation c;
    auto kind = j.value("kind", std::string("llm_memory"));
    c.kind = kind == "quote" ? Citation::Kind::quote : kind == "abstract" ? Citation::Kind::abstract : Citation::Kind::llm_memory;
    c.quote_id = j.value("quote_id", std::string());
    c.paper_id = j.value("paper_id", std::string());
    c.paper_title = j.value("paper_title", std::string());
    c.text = j.value("text", std::string());
    return c;
}

json to_json(const ComparisonTable& t) {
    json cells = json::array();
    for (const auto& row : t.cells) {
        json r = json::array();
        for (const auto& c : row) r.push_back({{"value", opt(c.value)}, {"evidence", opt(c.evidence)}});
        cells.push_back(r);
    }
    return {{"section_position", t.section_position}, {"columns", t.columns}, {"rows", t.rows}, {"cells", cells}};
}

ComparisonTable table_from_json(const json& j) {
    ComparisonTable t;
    t.section_position = j.value("section_position", std::size_t{0});
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.rows = j.at("rows").get<std::vector<std::string>>();
    for (const auto& r : j.at("cells")) {
        std::vector<TableCell> row;
        for (const auto& c : r) row.push_back({opt_string(c, "value"), opt_string(c, "evidence")});
        t.cells.push_back(std::move(row));
    }
    return t;
}

json section_to_json(const ReportSection& s, bool include_table) {
    json citations = json::object();
    json order = json::array();
    for (const auto& [marker, c] : s.citations) {
        citations[marker] = to_json(c);
        order.push_back(marker);
    }
    json j{{"position", s.position}, {"title", s.title},         {"tldr", s.tldr},
           {"body", s.body},         {"format", to_string(s.format)}, {"citations", citations},
           {"citation_order", order}, {"failed", s.failed}};
    if (include_table) j["table"] = s.table ? to_json(*s.table) : json(nullptr);
    return j;
}

ReportSection section_from_json(const json& j) {
    ReportSection s;
    s.position = j.value("position", std::size_t{0});
    s.title = j.at("title").get<std::string>();
    s.tldr = j.value("tldr", std::string());
    s.body = j.value("body", std::string());
    s.format = section_format_from_string(j.value("format", std::string("paragraph"))).value_or(SectionFormat::paragraph);
    s.failed = j.value("failed", false);
    const json& cites = j.contains("citations") ? j["citations"] : json::object();
    std::vector<std::string> order = j.value("citation_order", std::vector<std::string>{});
    for (const auto& [marker, _] : cites.items())
        if (std::find(order.begin(), order.end(), marker) == order.end()) order.push_back(marker);
    for (const auto& marker : order)
        if (cites.contains(marker)) s.citations.emplace_back(marker, citation_from_json(cites[marker]));
    if (j.contains("table") && j["table"].is_object()) s.table = table_from_json(j["table"]);
    return s;
}

json to_json(const Diagnostics& d) {
    return {{"dropped_quotes", d.dropped_quotes},
            {"memory_citations", d.memory_citations},
            {"rewritten_markers", d.rewritten_markers},
            {"missing_cited_papers", d.missing_cited_papers},
            {"discarded_papers", d.discarded_papers},
            {"unassigned_quotes", d.unassigned_quotes},
            {"warnings", d.warnings}};
}

json to_json(const Report& r) {
    json sections = json::array();
    for (const auto& s : r.sections) sections.push_back(section_to_json(s));
    json quotes = json::array();
    for (const auto& q : r.quotes) quotes.push_back(to_json(q));
    json error = nullptr;
    if (r.error_stage) error = {{"stage", *r.error_stage}, {"message", r.error_message.value_or("")}};
    return {{"report_id", r.report_id}, {"query", r.query},           {"sections", sections},
            {"quotes", quotes},         {"diagnostics", to_json(r.diagnostics)}, {"error", error}};
}

Report report_from_json(const json& j) {
    Report r;
    r.report_id = j.value("report_id", std::string());
    r.query = j.at("query").get<std::string>();
    for (const auto& s : j.at("sections")) r.sections.push_back(section_from_json(s));
    if (j.contains("quotes"))
        for (const auto& q : j["quotes"]) r.quotes.push_back(quote_from_json(q));
    if (j.contains("diagnostics")) {
        const auto& d = j["diagnostics"];
        r.diagnostics.dropped_quotes = d.value("dropped_quotes", std::size_t{0});
        r.diagnostics.memory_citations = d.value("memory_citations", std::size_t{0});
        r.diagnostics.rewritten_markers = d.value("rewritten_markers", std::size_t{0});
        r.diagnostics.missing_cited_papers = d.value("missing_cited_papers", std::size_t{0});
        r.diagnostics.discarded_papers = d.value("discarded_papers", std::vector<std::string>{});
        r.diagnostics.unassigned_quotes = d.value("unassigned_quotes", std::vector<std::string>{});
        r.diagnostics.warnings = d.value("warnings", std::vector<std::string>{});
    }
    if (j.contains("error") && j["error"].is_object()) {
        r.error_stage = j["error"].value("stage", std::string());
        r.error_message = j["error"].value("message", std::string());
    }
    return r;
}

std::string to_markdown(const Report& r) {
    std::string out = "# " + r.query + "\n\n";
    if (r.error_stage) out += "> Report incomplete: " + *r.error_stage + " failed: " + r.error_message.value_or("") + "\n\n";
    std::vector<std::pair<std::string, const Citation*>> refs;
    std::set<std::string> seen;
    for (const auto& s : r.sections) {
        out += "## " + s.title + "\n\n";
        if (!s.tldr.empty()) out += "**TLDR:** " + s.tldr + "\n\n";
        out += s.body + "\n\n";
        if (s.table) {
            const auto& t = *s.table;
            out += "| Paper |";
            for (const auto& c : t.columns) out += " " + cell_text(c) + " |";
            out += "\n|---|";
            for (std::size_t i = 0; i < t.columns.size(); ++i) out += "---|";
            out += "\n";
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                out += "| " + cell_text(t.rows[i]) + " |";
                for (const auto& c : t.cells[i]) out += " " + (c.value ? cell_text(*c.value) : std::string("MISSING")) + " |";
                out += "\n";
            }
            out += "\n";
        }
        for (const auto& [marker, c] : s.citations)
            if (seen.insert(marker).second) refs.emplace_back(marker, &c);
    }
    if (!refs.empty()) {
        out += "## References\n\n";
        for (const auto& [marker, c] : refs) {
            out += "- [" + marker + "] ";
            if (c->kind == Citation::Kind::llm_memory) {
                out += "Model knowledge (no retrieved source)\n";
                continue;
            }
            out += c->paper_title.empty() ? c->paper_id : c->paper_title + " (" + c->paper_id + ")";
            out += c->kind == Citation::Kind::quote ? ": \"" + cell_text(c->text) + "\"\n" : " [abstract]\n";
        }
    }
    return out;
}

}  // namespace litqa
