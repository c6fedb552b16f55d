#include <algorithm>
#include <cctype>
#include <set>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/synthesis/synthesis.hpp"

namespace litqa {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string sections_listing(const std::vector<OutlineSection>& sections) {
    std::string out;
    for (const auto& s : sections)
        out += std::to_string(s.position) + ". " + s.title + " (" + to_string(s.format) + ")\n";
    return out;
}

std::string quotes_listing(const std::vector<Quote>& quotes) {
    std::string out;
    for (const auto& q : quotes) out += "[" + q.quote_id + "] (" + q.paper_id + ") " + normalize_ws(q.text) + "\n";
    return out;
}

}  // namespace

bool is_intro_title(const std::string& title) {
    auto t = lower(title);
    for (const char* key : {"introduction", "background", "overview", "preliminar"})
        if (t.find(key) != std::string::npos) return true;
    return false;
}

Outline fallback_outline(const std::vector<Quote>& quotes) {
    Outline o;
    o.fallback = true;
    OutlineSection s{0, "Answer", SectionFormat::paragraph, {}};
    for (const auto& q : quotes) s.quote_ids.push_back(q.quote_id);
    o.sections.push_back(std::move(s));
    return o;
}

Outline plan_outline(const std::string& query, const std::vector<Quote>& quotes, llm::Gateway& gateway) {
    auto fail = [&](const std::string& why) {
        auto o = fallback_outline(quotes);
        o.warnings.push_back(why + "; using a single-section outline");
        return o;
    };

    nlohmann::json j;
    try {
        j = gateway.complete_json(llm::TemplateId::outline, {{"query", query}});
    } catch (const std::exception& e) {
        return fail(std::string("outline generation failed: ") + e.what());
    }

    Outline out;
    if (j.contains("sections") && j["sections"].is_array()) {
        for (const auto& entry : j["sections"]) {
            OutlineSection s;
            if (entry.is_string()) {
                s.title = normalize_ws(entry.get<std::string>());
            } else if (entry.is_object() && entry.contains("title") && entry["title"].is_string()) {
                s.title = normalize_ws(entry["title"].get<std::string>());
                auto fmt = entry.value("format", std::string("paragraph"));
                if (auto f = section_format_from_string(fmt))
                    s.format = *f;
                else
                    out.warnings.push_back("section \"" + s.title + "\" has unknown format \"" + fmt +
                                           "\"; using paragraph");
            }
            if (s.title.empty()) {
                out.warnings.push_back("skipped an outline entry without a title");
                continue;
            }
            out.sections.push_back(std::move(s));
        }
    }
    if (out.sections.empty()) return fail("outline has no usable sections");

    auto intro = std::find_if(out.sections.begin(), out.sections.end(),
                              [](const OutlineSection& s) { return is_intro_title(s.title); });
    if (intro == out.sections.end()) {
        out.sections.insert(out.sections.begin(), OutlineSection{0, "Introduction", SectionFormat::paragraph, {}});
        out.inserted_intro = true;
    } else if (intro != out.sections.begin()) {
        std::rotate(out.sections.begin(), intro, intro + 1);
    }
    for (std::size_t i = 0; i < out.sections.size(); ++i) out.sections[i].position = i;

    if (quotes.empty()) return out;

    try {
        j = gateway.complete_json(llm::TemplateId::assign_quotes, {{"query", query},
                                                                   {"sections", sections_listing(out.sections)},
                                                                   {"quotes", quotes_listing(quotes)}});
    } catch (const std::exception& e) {
        return fail(std::string("quote assignment failed: ") + e.what());
    }
    if (!j.contains("assignments") || !j["assignments"].is_object()) return fail("quote assignment is malformed");

    std::map<std::string, std::size_t> quote_rank;
    for (std::size_t i = 0; i < quotes.size(); ++i) quote_rank[quotes[i].quote_id] = i;
    std::vector<std::set<std::size_t>> members(out.sections.size());
    std::set<std::string> assigned;
    for (const auto& [qid, value] : j["assignments"].items()) {
        auto rank = quote_rank.find(qid);
        if (rank == quote_rank.end()) {
            out.warnings.push_back("assignment names unknown quote " + qid);
            continue;
        }
        auto targets = value.is_array() ? value : nlohmann::json::array({value});
        for (const auto& t : targets) {
            if (!t.is_number_integer() || t.get<long long>() < 0 ||
                t.get<long long>() >= static_cast<long long>(out.sections.size())) {
                out.warnings.push_back("assignment of " + qid + " names a section that does not exist");
                continue;
            }
            members[t.get<std::size_t>()].insert(rank->second);
            assigned.insert(qid);
        }
    }
    for (std::size_t s = 0; s < out.sections.size(); ++s)
        for (auto r : members[s]) out.sections[s].quote_ids.push_back(quotes[r].quote_id);
    for (const auto& q : quotes)
        if (!assigned.count(q.quote_id)) out.unassigned_quotes.push_back(q.quote_id);
    return out;
}

}  // namespace litqa
