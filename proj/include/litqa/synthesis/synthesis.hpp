#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "litqa/index/hybrid_index.hpp"
#include "litqa/llm/gateway.hpp"
#include "litqa/rerank/rerank.hpp"
#include "litqa/synthesis/report.hpp"

namespace litqa {

// ---- quotes ----

/// Contexts for every paper in `reranked`, papers in order of their best
/// rank. A paper without abstract or passage text is skipped.
std::vector<PaperContext> build_contexts(const RerankedSet& reranked, const HybridIndex& index, const Corpus& corpus);

/// Splits a quote-extraction answer on "..." / "…" (surrounding spaces
/// optional). Returns nullopt when the answer signals irrelevance: empty or
/// the word NONE.
std::optional<std::vector<std::string>> split_quote_response(const std::string& response);

/// Locates `fragment` in the context after whitespace normalization of both,
/// preferring a match inside a single segment. Fills text, source, spans and
/// field; leaves ids and citations alone. nullopt when it is not verbatim.
std::optional<Quote> locate_quote(const PaperContext& ctx, const std::string& fragment);

/// Cited paper ids of anchors overlapping the quote's field span.
std::vector<std::string> embedded_citations(const Quote& q, const Paper& paper);

struct QuoteExtraction {
    std::vector<Quote> quotes;
    std::vector<PaperContext> contexts;          // papers that yielded quotes
    std::vector<std::string> discarded_papers;   // irrelevant, failed or no verbatim quote
    std::size_t dropped_fragments = 0;
    std::vector<std::string> warnings;
};

/// One gateway call per paper, run concurrently; results are assembled in
/// paper order so quote ids do not depend on completion order.
QuoteExtraction extract_quotes(const std::string& query, const RerankedSet& reranked, const HybridIndex& index,
                               const Corpus& corpus, llm::Gateway& gateway, std::size_t max_concurrency = 8);

// ---- outline ----

bool is_intro_title(const std::string& title);

/// Themes first, then quote assignment. Section 0 is always an introduction
/// or background section. Failures give the single "Answer" section holding
/// every quote.
Outline plan_outline(const std::string& query, const std::vector<Quote>& quotes, llm::Gateway& gateway);
Outline fallback_outline(const std::vector<Quote>& quotes);

// ---- sections ----

struct CitedAbstract {
    std::string paper_id;
    std::string title;
    std::string abstract;
};

struct FollowResult {
    std::vector<CitedAbstract> abstracts;  // deduplicated, first-citation order
    std::size_t missing = 0;               // cited ids absent from the corpus or without abstract
};

/// Abstracts of papers cited inside the quotes (one hop; followed abstracts
/// are not followed further). A paper citing itself is ignored.
FollowResult follow_citations(const std::vector<const Quote*>& quotes, const Corpus& corpus);

struct Reference {
    std::string marker;  // "Q3", "A1"
    Citation target;
};

/// Quote markers reuse quote ids; abstract markers come from `abstract_ids`,
/// which hands out A1, A2, ... per paper and is shared across a report.
std::vector<Reference> build_reference_pool(const std::vector<const Quote*>& quotes, const FollowResult& followed,
                                            const Corpus& corpus, std::map<std::string, std::string>& abstract_ids);

struct MarkerResolution {
    std::string body;  // markers rewritten to one bracket each
    std::vector<std::pair<std::string, Citation>> citations;
    std::size_t rewritten = 0;  // unknown markers replaced by [M]
    std::size_t memory = 0;     // [M] occurrences in the final body
};

/// Finds bracketed markers ([Q3], [A1], [M], [Q1, Q4], [12]) and resolves
/// them against `pool`. Unknown ids become [M]. A body with no marker at
/// all is attributed to model memory with a trailing [M].
MarkerResolution resolve_markers(const std::string& body, const std::vector<Reference>& pool);

/// Writes section `position` given the sections before it. A model failure
/// yields a placeholder section flagged `failed`.
ReportSection generate_section(const std::string& query, const Outline& outline, std::size_t position,
                               const std::vector<ReportSection>& prior, const std::vector<Reference>& pool,
                               llm::Gateway& gateway, Diagnostics& diagnostics);

// ---- tables ----

struct TableOptions {
    double tau = 0.5;
    std::size_t max_aspects = 6;
    std::size_t context_chars = 12000;
    std::size_t max_concurrency = 8;
};

/// Abstract first, then body sections, cut to `max_chars` bytes.
std::string paper_full_text(const Paper& paper, std::size_t max_chars);

/// Distinct corpus papers behind a section's quote and abstract citations.
std::vector<std::string> cited_papers(const ReportSection& section, const Corpus& corpus);

/// Bulleted sections citing at least two papers get an aspect list and one
/// cell call per (paper, aspect), then filtering. nullopt otherwise or when
/// nothing survives.
std::optional<ComparisonTable> generate_table(const std::string& query, const ReportSection& section,
                                              const std::vector<std::string>& papers, const Corpus& corpus,
                                              llm::Gateway& gateway, const TableOptions& options,
                                              Diagnostics& diagnostics);

/// Repeatedly drops the column with the largest missing fraction above tau
/// (ties: the higher index); once no column qualifies, drops one row by the
/// same rule and starts over. Stops when nothing exceeds tau.
ComparisonTable filter_table(ComparisonTable t, double tau = 0.5);

}  // namespace litqa
