#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/synthesis/synthesis.hpp"

namespace litqa {

namespace {

bool space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Whitespace-normalized copy of text[begin, end) plus, for every output
// byte, the input position it came from (collapsed spaces map to the first
// whitespace byte of their run).
struct Normalized {
    std::string text;
    std::vector<std::size_t> origin;
};

Normalized normalize_with_map(std::string_view text, std::size_t begin, std::size_t end) {
    Normalized n;
    std::size_t pending = std::string::npos;
    for (std::size_t i = begin; i < end; ++i) {
        if (space(text[i])) {
            if (!n.text.empty() && pending == std::string::npos) pending = i;
            continue;
        }
        if (pending != std::string::npos) {
            n.text.push_back(' ');
            n.origin.push_back(pending);
            pending = std::string::npos;
        }
        n.text.push_back(text[i]);
        n.origin.push_back(i);
    }
    return n;
}

std::size_t segment_of(const PaperContext& ctx, std::size_t pos) {
    for (std::size_t s = 0; s < ctx.segments.size(); ++s)
        if (pos >= ctx.segments[s].start && pos < ctx.segments[s].end) return s;
    return ctx.segments.size() - 1;
}

Quote make_quote(const PaperContext& ctx, std::size_t start, std::size_t end, std::size_t seg) {
    const auto& s = ctx.segments[seg];
    Quote q;
    q.paper_id = ctx.paper_id;
    q.text = ctx.assembled_text.substr(start, end - start);
    q.source = s.source;
    q.start = start;
    q.end = end;
    q.field = s.field;
    q.field_span = {s.field_offset + (start - s.start), s.field_offset + (std::min(end, s.end) - s.start)};
    return q;
}

std::optional<std::pair<std::size_t, std::size_t>> find_normalized(const Normalized& hay, const std::string& needle) {
    auto at = hay.text.find(needle);
    if (at == std::string::npos) return std::nullopt;
    return std::make_pair(hay.origin[at], hay.origin[at + needle.size() - 1] + 1);
}

bool quote_char_pair(const std::string& s) {
    if (s.size() < 2) return false;
    auto starts = [&](std::string_view p) { return s.rfind(p, 0) == 0; };
    auto ends = [&](std::string_view p) { return s.size() >= p.size() && s.compare(s.size() - p.size(), p.size(), p) == 0; };
    return (starts("\"") && ends("\"")) || (starts("\xE2\x80\x9C") && ends("\xE2\x80\x9D")) ||
           (starts("'") && ends("'"));
}

std::string strip_quote_chars(const std::string& s) {
    std::size_t open = s.rfind("\xE2\x80\x9C", 0) == 0 ? 3 : 1;
    std::size_t close = s.size() >= 3 && s.compare(s.size() - 3, 3, "\xE2\x80\x9D") == 0 ? 3 : 1;
    return normalize_ws(s.substr(open, s.size() - open - close));
}

}  // namespace

std::vector<PaperContext> build_contexts(const RerankedSet& reranked, const HybridIndex& index, const Corpus& corpus) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::string>> by_paper;
    for (const auto& item : reranked.items) {
        auto& ids = by_paper[item.candidate.paper_id];
        if (ids.empty()) order.push_back(item.candidate.paper_id);
        ids.push_back(item.candidate.passage_id);
    }

    std::vector<PaperContext> out;
    for (const auto& paper_id : order) {
        const Paper* paper = corpus.find(paper_id);
        if (!paper) continue;
        PaperContext ctx;
        ctx.paper_id = paper_id;
        auto append = [&](std::string source, FieldRef field, std::size_t field_offset, std::string_view text) {
            if (!ctx.assembled_text.empty()) ctx.assembled_text += kContextSeparator;
            PaperContext::Segment seg{std::move(source), field, ctx.assembled_text.size(), 0, field_offset};
            ctx.assembled_text += text;
            seg.end = ctx.assembled_text.size();
            ctx.segments.push_back(std::move(seg));
        };
        const bool has_abstract = !normalize_ws(paper->abstract).empty();
        if (has_abstract) append("abstract", FieldRef{FieldRef::Kind::abstract, 0}, 0, paper->abstract);
        for (const auto& pid : by_paper[paper_id]) {
            const Passage& p = index.passage(pid);
            if (p.kind == PassageKind::abstract && has_abstract) continue;
            if (normalize_ws(p.text).empty()) continue;
            append(pid, p.field(), p.char_span.start, p.text);
            ctx.passage_ids.push_back(pid);
        }
        if (normalize_ws(ctx.assembled_text).empty()) continue;
        out.push_back(std::move(ctx));
    }
    return out;
}

std::optional<std::vector<std::string>> split_quote_response(const std::string& response) {
    const std::string trimmed = normalize_ws(response);
    if (trimmed.empty()) return std::nullopt;
    std::string upper;
    for (char c : trimmed) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "NONE" || upper == "NONE.") return std::nullopt;

    std::vector<std::string> parts;
    std::string cur;
    auto flush = [&] {
        auto f = normalize_ws(cur);
        if (!f.empty()) parts.push_back(f);
        cur.clear();
    };
    for (std::size_t i = 0; i < response.size();) {
        if (response.compare(i, 3, "...") == 0) {
            flush();
            i += 3;
            while (i < response.size() && response[i] == '.') ++i;
        } else if (response.compare(i, 3, "\xE2\x80\xA6") == 0) {
            flush();
            i += 3;
        } else {
            cur += response[i++];
        }
    }
    flush();
    return parts;
}

std::optional<Quote> locate_quote(const PaperContext& ctx, const std::string& fragment) {
    std::vector<std::string> candidates{normalize_ws(fragment)};
    if (quote_char_pair(candidates[0])) candidates.push_back(strip_quote_chars(candidates[0]));
    for (const auto& needle : candidates) {
        if (needle.empty()) continue;
        for (std::size_t s = 0; s < ctx.segments.size(); ++s) {
            auto norm = normalize_with_map(ctx.assembled_text, ctx.segments[s].start, ctx.segments[s].end);
            if (auto hit = find_normalized(norm, needle)) return make_quote(ctx, hit->first, hit->second, s);
        }
        auto whole = normalize_with_map(ctx.assembled_text, 0, ctx.assembled_text.size());
        if (auto hit = find_normalized(whole, needle))
            return make_quote(ctx, hit->first, hit->second, segment_of(ctx, hit->first));
    }
    return std::nullopt;
}

std::vector<std::string> embedded_citations(const Quote& q, const Paper& paper) {
    std::vector<std::string> out;
    for (const auto& a : paper.citations) {
        if (!(a.field == q.field)) continue;
        if (a.span.start < q.field_span.end && q.field_span.start < a.span.end &&
            std::find(out.begin(), out.end(), a.cited_paper_id) == out.end())
            out.push_back(a.cited_paper_id);
    }
    return out;
}

QuoteExtraction extract_quotes(const std::string& query, const RerankedSet& reranked, const HybridIndex& index,
                               const Corpus& corpus, llm::Gateway& gateway, std::size_t max_concurrency) {
    QuoteExtraction out;
    auto contexts = build_contexts(reranked, index, corpus);
    if (contexts.empty()) return out;

    struct Answer {
        std::string text;
        std::string error;
    };
    std::vector<Answer> answers(contexts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < contexts.size();) {
            try {
                answers[i].text = gateway
                                      .complete(llm::TemplateId::extract_quotes, {{"query", query},
                                                                                  {"paper_id", contexts[i].paper_id},
                                                                                  {"context", contexts[i].assembled_text}})
                                      .text;
            } catch (const std::exception& e) {
                answers[i].error = e.what();
            }
        }
    };
    const std::size_t lanes = std::clamp<std::size_t>(max_concurrency, 1, contexts.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < lanes; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    for (std::size_t i = 0; i < contexts.size(); ++i) {
        auto& ctx = contexts[i];
        if (!answers[i].error.empty()) {
            out.discarded_papers.push_back(ctx.paper_id);
            out.warnings.push_back("quote extraction failed for " + ctx.paper_id + ": " + answers[i].error);
            continue;
        }
        auto fragments = split_quote_response(answers[i].text);
        if (!fragments) {
            out.discarded_papers.push_back(ctx.paper_id);
            continue;
        }
        const Paper& paper = corpus.at(ctx.paper_id);
        std::set<std::pair<std::size_t, std::size_t>> seen;
        std::vector<Quote> kept;
        for (const auto& f : *fragments) {
            auto q = locate_quote(ctx, f);
            if (!q) {
                ++out.dropped_fragments;
                out.warnings.push_back("dropped a quote from " + ctx.paper_id + " that is not verbatim: \"" + f + "\"");
                continue;
            }
            if (!seen.insert({q->start, q->end}).second) continue;
            q->embedded_citations = embedded_citations(*q, paper);
            kept.push_back(std::move(*q));
        }
        if (kept.empty()) {
            out.discarded_papers.push_back(ctx.paper_id);
            continue;
        }
        for (auto& q : kept) {
            q.quote_id = "Q" + std::to_string(out.quotes.size() + 1);
            out.quotes.push_back(std::move(q));
        }
        out.contexts.push_back(std::move(ctx));
    }
    return out;
}

}  // namespace litqa
