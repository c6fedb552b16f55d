#include <algorithm>
#include <atomic>
#include <cctype>
#include <regex>
#include <thread>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/eval/eval.hpp"

namespace litqa::eval {

using nlohmann::json;

namespace {

struct Claim {
    std::size_t section;
    std::string text;
    std::vector<std::string> markers;
};

bool has_words(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c >= 0x80; });
}

std::vector<Claim> split_claims(const Report& report) {
    static const std::regex marker(R"(\s*\[([A-Z]?\d+|M)\])");
    std::vector<Claim> out;
    for (std::size_t s = 0; s < report.sections.size(); ++s) {
        const auto& section = report.sections[s];
        if (section.failed) continue;
        bool started = false;
        for (const auto& span : default_tokenizer().sentences(section.body)) {
            std::string sentence = section.body.substr(span.start, span.size());
            std::vector<std::string> markers;
            for (auto it = std::sregex_iterator(sentence.begin(), sentence.end(), marker); it != std::sregex_iterator(); ++it)
                markers.push_back((*it)[1]);
            auto text = normalize_ws(std::regex_replace(sentence, marker, ""));
            auto first = text.find_first_not_of("-*\xE2\x80\xA2 ");  // bullet glyphs
            text = first == std::string::npos ? "" : text.substr(first);
            if (!has_words(text)) {
                if (started && !markers.empty()) {
                    auto& prev = out.back().markers;
                    for (auto& m : markers)
                        if (std::find(prev.begin(), prev.end(), m) == prev.end()) prev.push_back(m);
                }
                continue;
            }
            std::vector<std::string> unique;
            for (auto& m : markers)
                if (std::find(unique.begin(), unique.end(), m) == unique.end()) unique.push_back(m);
            out.push_back({s, std::move(text), std::move(unique)});
            started = true;
        }
    }
    return out;
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::attributable: return "Attributable";
        case Verdict::contradictory: return "Contradictory";
        case Verdict::extrapolatory: break;
    }
    return "Extrapolatory";
}

std::optional<Verdict> verdict_from_string(std::string_view s) {
    std::string l;
    for (char c : normalize_ws(s)) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l == "attributable") return Verdict::attributable;
    if (l == "contradictory") return Verdict::contradictory;
    if (l == "extrapolatory") return Verdict::extrapolatory;
    return std::nullopt;
}

Verdict GatewayJudge::judge(const std::string& claim, const std::string& evidence) {
    auto j = gateway_.complete_json(llm::TemplateId::attribution_judge, {{"claim", claim}, {"ref_excerpt", evidence}});
    if (j.contains("output") && j["output"].is_string())
        if (auto v = verdict_from_string(j["output"].get<std::string>())) return *v;
    throw llm::MalformedOutput(llm::TemplateId::attribution_judge, j.dump());
}

CitationScores citation_scores(const Report& report, AttributionJudge& judge, const CitationOptions& options) {
    CitationScores out;
    auto claims = split_claims(report);

    // Each distinct (claim, evidence) pair is judged once.
    std::vector<std::pair<std::string, std::string>> requests;
    std::map<std::pair<std::string, std::string>, std::size_t> request_index;
    auto request = [&](const std::string& claim, const std::string& evidence) {
        auto key = std::make_pair(claim, evidence);
        auto [it, fresh] = request_index.emplace(key, requests.size());
        if (fresh) requests.push_back(key);
        return it->second;
    };
    constexpr std::size_t kNoCall = static_cast<std::size_t>(-1);
    std::vector<std::vector<std::size_t>> pair_calls(claims.size());
    std::vector<std::size_t> support_call(claims.size(), kNoCall);
    for (std::size_t i = 0; i < claims.size(); ++i) {
        const auto& section = report.sections[claims[i].section];
        std::string joined;
        for (const auto& m : claims[i].markers) {
            const Citation* c = section.find_citation(m);
            if (!c || c->kind == Citation::Kind::llm_memory || c->text.empty()) {
                pair_calls[i].push_back(kNoCall);
                continue;
            }
            pair_calls[i].push_back(request(claims[i].text, c->text));
            joined += (joined.empty() ? "" : "\n\n") + c->text;
        }
        if (!joined.empty()) support_call[i] = request(claims[i].text, joined);
    }

    std::vector<Verdict> verdicts(requests.size(), Verdict::extrapolatory);
    std::vector<std::string> errors(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < requests.size();) {
            try {
                verdicts[k] = judge.judge(requests[k].first, requests[k].second);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    if (!requests.empty()) {
        const std::size_t lanes = std::clamp<std::size_t>(options.max_concurrency, 1, requests.size());
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < lanes; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    for (std::size_t k = 0; k < requests.size(); ++k)
        if (!errors[k].empty())
            out.warnings.push_back("judge failed on \"" + requests[k].first + "\"; counted as Extrapolatory: " + errors[k]);

    auto verdict = [&](std::size_t call) { return call == kNoCall ? Verdict::extrapolatory : verdicts[call]; };
    for (std::size_t i = 0; i < claims.size(); ++i) {
        ClaimResult r{claims[i].section, claims[i].text, claims[i].markers, {}, verdict(support_call[i])};
        for (std::size_t call : pair_calls[i]) {
            r.citation_verdicts.push_back(verdict(call));
            out.attributable_pairs += r.citation_verdicts.back() == Verdict::attributable;
        }
        out.pairs += r.markers.size();
        out.claims += 1;
        if (!r.markers.empty()) {
            out.cited_claims += 1;
            out.supported_claims += r.support == Verdict::attributable;
        }
        out.details.push_back(std::move(r));
    }
    out.precision = out.pairs ? double(out.attributable_pairs) / double(out.pairs) : 0.0;
    const std::size_t denominator = options.cited_only ? out.cited_claims : out.claims;
    out.recall = denominator ? double(out.supported_claims) / double(denominator) : 0.0;
    return out;
}

json to_json(const CitationScores& s) {
    json details = json::array();
    for (const auto& d : s.details) {
        json verdicts = json::array();
        for (auto v : d.citation_verdicts) verdicts.push_back(to_string(v));
        details.push_back({{"section", d.section},
                           {"claim", d.claim},
                           {"markers", d.markers},
                           {"citation_verdicts", verdicts},
                           {"support", to_string(d.support)}});
    }
    return {{"precision", s.precision},
            {"recall", s.recall},
            {"claims", s.claims},
            {"cited_claims", s.cited_claims},
            {"supported_claims", s.supported_claims},
            {"pairs", s.pairs},
            {"attributable_pairs", s.attributable_pairs},
            {"details", details},
            {"warnings", s.warnings}};
}

int label_relevance(llm::Gateway& gateway, const std::string& query, const std::string& text) {
    auto reply = gateway.complete(llm::TemplateId::relevance_label, {{"query", query}, {"text", text}}).text;
    for (char c : reply)
        if (c >= '0' && c <= '3') return c - '0';
    throw llm::MalformedOutput(llm::TemplateId::relevance_label, reply);
}

}  // namespace litqa::eval
