#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/synthesis/synthesis.hpp"

namespace litqa {

namespace {

const char* kFailedBody = "This section could not be generated.";

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Splits bracket content into marker ids, or returns nothing when the
// bracket is ordinary prose.
std::optional<std::vector<std::string>> marker_ids(const std::string& content) {
    static const std::regex id(R"(^(?:[A-Za-z]?\d+|[Mm])$)");
    std::vector<std::string> ids;
    std::size_t from = 0;
    while (from <= content.size()) {
        auto to = content.find_first_of(",;", from);
        if (to == std::string::npos) to = content.size();
        auto tok = trim(std::string_view(content).substr(from, to - from));
        if (!std::regex_match(tok, id)) return std::nullopt;
        tok[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
        ids.push_back(tok);
        from = to + 1;
    }
    return ids;
}

std::string outline_listing(const Outline& outline) {
    std::string out;
    for (const auto& s : outline.sections)
        out += std::to_string(s.position) + ". " + s.title + " (" + to_string(s.format) + ")\n";
    return out;
}

std::string prior_listing(const std::vector<ReportSection>& prior, std::size_t position) {
    std::string out;
    for (const auto& s : prior) {
        if (s.position >= position) continue;
        out += "## " + s.title + "\nTLDR: " + s.tldr + "\n" + s.body + "\n\n";
    }
    return out.empty() ? "(none)" : out;
}

std::string references_listing(const std::vector<Reference>& pool) {
    if (pool.empty()) return "(none)";
    std::string out;
    for (const auto& r : pool) {
        out += "[" + r.marker + "] ";
        if (!r.target.paper_title.empty()) out += "(" + r.target.paper_title + ") ";
        out += normalize_ws(r.target.text) + "\n";
    }
    return out;
}

}  // namespace

FollowResult follow_citations(const std::vector<const Quote*>& quotes, const Corpus& corpus) {
    FollowResult out;
    std::set<std::string> seen;
    for (const Quote* q : quotes) {
        for (const auto& cited : q->embedded_citations) {
            if (cited == q->paper_id || !seen.insert(cited).second) continue;
            const Paper* p = corpus.find(cited);
            if (!p || normalize_ws(p->abstract).empty()) {
                ++out.missing;
                continue;
            }
            out.abstracts.push_back({p->paper_id, p->title, p->abstract});
        }
    }
    return out;
}

std::vector<Reference> build_reference_pool(const std::vector<const Quote*>& quotes, const FollowResult& followed,
                                            const Corpus& corpus, std::map<std::string, std::string>& abstract_ids) {
    std::vector<Reference> pool;
    for (const Quote* q : quotes) {
        Citation c;
        c.kind = Citation::Kind::quote;
        c.quote_id = q->quote_id;
        c.paper_id = q->paper_id;
        if (const Paper* p = corpus.find(q->paper_id)) c.paper_title = p->title;
        c.text = q->text;
        pool.push_back({q->quote_id, std::move(c)});
    }
    for (const auto& a : followed.abstracts) {
        auto [it, fresh] = abstract_ids.try_emplace(a.paper_id, "");
        if (fresh) it->second = "A" + std::to_string(abstract_ids.size());
        Citation c;
        c.kind = Citation::Kind::abstract;
        c.paper_id = a.paper_id;
        c.paper_title = a.title;
        c.text = a.abstract;
        pool.push_back({it->second, std::move(c)});
    }
    return pool;
}

MarkerResolution resolve_markers(const std::string& body, const std::vector<Reference>& pool) {
    static const std::regex bracket(R"(\[([^\[\]\n]{1,64})\])");
    std::map<std::string, const Reference*> by_marker;
    for (const auto& r : pool) by_marker.emplace(r.marker, &r);

    MarkerResolution out;
    std::set<std::string> listed;
    auto cite = [&](const std::string& marker, const Citation& c) {
        if (listed.insert(marker).second) out.citations.emplace_back(marker, c);
    };
    bool any = false;
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), bracket); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto ids = marker_ids(m[1].str());
        if (!ids) continue;
        any = true;
        out.body.append(body, last, m.position(0) - last);
        last = m.position(0) + m.length(0);
        std::vector<std::string> resolved;
        for (const auto& id : *ids) {
            std::string marker = id;
            if (id != kMemoryMarker) {
                auto ref = by_marker.find(id);
                if (ref == by_marker.end()) {
                    ++out.rewritten;
                    marker = kMemoryMarker;
                } else {
                    cite(id, ref->second->target);
                }
            }
            if (std::find(resolved.begin(), resolved.end(), marker) == resolved.end()) resolved.push_back(marker);
        }
        for (const auto& marker : resolved) {
            if (marker == kMemoryMarker) {
                ++out.memory;
                cite(marker, Citation{});
            }
            out.body += "[" + marker + "]";
        }
    }
    out.body.append(body, last, std::string::npos);
    if (!any) {
        out.body = trim(out.body);
        out.body += out.body.empty() ? "[M]" : " [M]";
        out.memory = 1;
        cite(kMemoryMarker, Citation{});
    }
    return out;
}

ReportSection generate_section(const std::string& query, const Outline& outline, std::size_t position,
                               const std::vector<ReportSection>& prior, const std::vector<Reference>& pool,
                               llm::Gateway& gateway, Diagnostics& diagnostics) {
    const OutlineSection& plan = outline.sections.at(position);
    ReportSection s;
    s.position = position;
    s.title = plan.title;
    s.format = plan.format;

    std::string tldr, body;
    try {
        auto j = gateway.complete_json(llm::TemplateId::section, {{"query", query},
                                                                  {"outline", outline_listing(outline)},
                                                                  {"prior_sections", prior_listing(prior, position)},
                                                                  {"position", std::to_string(position)},
                                                                  {"title", plan.title},
                                                                  {"format", to_string(plan.format)},
                                                                  {"references", references_listing(pool)}});
        if (j.contains("body") && j["body"].is_string()) body = trim(j["body"].get<std::string>());
        if (j.contains("tldr") && j["tldr"].is_string()) tldr = normalize_ws(j["tldr"].get<std::string>());
        if (body.empty()) throw llm::MalformedOutput(llm::TemplateId::section, j.dump());
    } catch (const std::exception& e) {
        s.failed = true;
        s.body = kFailedBody;
        diagnostics.warnings.push_back("section " + std::to_string(position) + " (" + plan.title +
                                       ") failed: " + e.what());
        return s;
    }

    auto resolved = resolve_markers(body, pool);
    s.tldr = tldr;
    s.body = std::move(resolved.body);
    s.citations = std::move(resolved.citations);
    diagnostics.memory_citations += resolved.memory;
    diagnostics.rewritten_markers += resolved.rewritten;
    if (resolved.rewritten > 0)
        diagnostics.warnings.push_back("section " + std::to_string(position) + ": " +
                                       std::to_string(resolved.rewritten) +
                                       " marker(s) not in the reference pool were attributed to model memory");
    return s;
}

}  // namespace litqa
