#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/synthesis/synthesis.hpp"

namespace litqa {

namespace {

bool is_missing_value(const std::string& v) {
    std::string u;
    for (char c : v) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return u.empty() || u == "MISSING" || u == "N/A" || u == "NONE" || u == "NULL";
}

std::optional<std::string> json_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    auto s = normalize_ws(j[key].get<std::string>());
    if (s.empty()) return std::nullopt;
    return s;
}

// Index to drop under the shared rule, or nullopt when every fraction is <= tau.
template <class Fraction>
std::optional<std::size_t> worst(std::size_t n, double tau, Fraction fraction) {
    std::optional<std::size_t> pick;
    double best = tau;
    for (std::size_t i = 0; i < n; ++i) {
        double f = fraction(i);
        if (f > tau && (!pick || f >= best)) {
            pick = i;
            best = f;
        }
    }
    return pick;
}

}  // namespace

double ComparisonTable::row_missing_fraction(std::size_t r) const {
    if (columns.empty()) return 0.0;
    std::size_t m = 0;
    for (const auto& c : cells.at(r)) m += c.missing();
    return double(m) / double(columns.size());
}

double ComparisonTable::column_missing_fraction(std::size_t c) const {
    if (rows.empty()) return 0.0;
    std::size_t m = 0;
    for (const auto& row : cells) m += row.at(c).missing();
    return double(m) / double(rows.size());
}

ComparisonTable filter_table(ComparisonTable t, double tau) {
    while (!t.empty()) {
        if (auto c = worst(t.columns.size(), tau, [&](std::size_t i) { return t.column_missing_fraction(i); })) {
            t.columns.erase(t.columns.begin() + *c);
            for (auto& row : t.cells) row.erase(row.begin() + *c);
            continue;
        }
        if (auto r = worst(t.rows.size(), tau, [&](std::size_t i) { return t.row_missing_fraction(i); })) {
            t.rows.erase(t.rows.begin() + *r);
            t.cells.erase(t.cells.begin() + *r);
            continue;
        }
        break;
    }
    return t;
}

std::string paper_full_text(const Paper& paper, std::size_t max_chars) {
    std::string out = paper.abstract;
    for (const auto& s : paper.body_sections) {
        if (!out.empty()) out += "\n\n";
        if (!s.title.empty()) out += s.title + "\n";
        out += s.text;
        if (out.size() >= max_chars) break;
    }
    if (out.size() > max_chars) {
        std::size_t cut = max_chars;
        while (cut > 0 && (static_cast<unsigned char>(out[cut]) & 0xC0) == 0x80) --cut;
        out.resize(cut);
    }
    return out;
}

std::vector<std::string> cited_papers(const ReportSection& section, const Corpus& corpus) {
    std::vector<std::string> out;
    for (const auto& [marker, c] : section.citations) {
        if (c.kind == Citation::Kind::llm_memory || !corpus.find(c.paper_id)) continue;
        if (std::find(out.begin(), out.end(), c.paper_id) == out.end()) out.push_back(c.paper_id);
    }
    return out;
}

std::optional<ComparisonTable> generate_table(const std::string& query, const ReportSection& section,
                                              const std::vector<std::string>& papers, const Corpus& corpus,
                                              llm::Gateway& gateway, const TableOptions& options,
                                              Diagnostics& diagnostics) {
    if (section.format != SectionFormat::bullets || section.failed) return std::nullopt;
    std::vector<const Paper*> rows;
    for (const auto& id : papers)
        if (const Paper* p = corpus.find(id); p && std::find(rows.begin(), rows.end(), p) == rows.end())
            rows.push_back(p);
    if (rows.size() < 2) return std::nullopt;

    const std::string where = "table for section " + std::to_string(section.position);
    std::string abstracts;
    for (const Paper* p : rows) abstracts += "[" + p->paper_id + "] " + p->title + ": " + normalize_ws(p->abstract) + "\n";

    std::vector<std::string> aspects;
    try {
        auto j = gateway.complete_json(llm::TemplateId::table_aspects, {{"query", query},
                                                                        {"section_title", section.title},
                                                                        {"abstracts", abstracts}});
        if (j.contains("aspects") && j["aspects"].is_array())
            for (const auto& a : j["aspects"]) {
                if (!a.is_string()) continue;
                auto name = normalize_ws(a.get<std::string>());
                if (!name.empty() && std::find(aspects.begin(), aspects.end(), name) == aspects.end())
                    aspects.push_back(name);
            }
    } catch (const std::exception& e) {
        diagnostics.warnings.push_back(where + ": aspect generation failed: " + e.what());
        return std::nullopt;
    }
    if (aspects.size() > options.max_aspects) aspects.resize(options.max_aspects);
    if (aspects.empty()) {
        diagnostics.warnings.push_back(where + ": no aspects proposed");
        return std::nullopt;
    }

    ComparisonTable t;
    t.section_position = section.position;
    t.columns = aspects;
    for (const Paper* p : rows) t.rows.push_back(p->paper_id);
    t.cells.assign(rows.size(), std::vector<TableCell>(aspects.size()));

    std::vector<std::string> texts;
    for (const Paper* p : rows) texts.push_back(paper_full_text(*p, options.context_chars));

    const std::size_t n = rows.size() * aspects.size();
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < n;) {
            const std::size_t r = k / aspects.size(), c = k % aspects.size();
            try {
                auto j = gateway.complete_json(llm::TemplateId::table_value, {{"query", query},
                                                                              {"aspect", aspects[c]},
                                                                              {"paper_id", rows[r]->paper_id},
                                                                              {"full_text", texts[r]}});
                auto value = json_string(j, "value");
                if (!value || is_missing_value(*value)) continue;
                TableCell& cell = t.cells[r][c];
                cell.value = value;
                if (auto ex = json_string(j, "excerpt"); ex && normalize_ws(texts[r]).find(*ex) != std::string::npos)
                    cell.evidence = ex;
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const std::size_t lanes = std::clamp<std::size_t>(options.max_concurrency, 1, n);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < lanes; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();

    std::size_t failed = 0;
    for (const auto& e : errors) failed += !e.empty();
    if (failed > 0)
        diagnostics.warnings.push_back(where + ": " + std::to_string(failed) + " cell call(s) failed and were left missing");

    auto kept = filter_table(std::move(t), options.tau);
    if (kept.empty()) {
        diagnostics.warnings.push_back(where + ": every row or column was mostly missing; table omitted");
        return std::nullopt;
    }
    return kept;
}

}  // namespace litqa
