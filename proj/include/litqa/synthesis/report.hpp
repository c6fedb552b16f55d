#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/corpus/types.hpp"

namespace litqa {

/// A paper's abstract followed by its reranked passages in rank order,
/// joined with blank lines. `segments` locate each piece in the text.
struct PaperContext {
    struct Segment {
        std::string source;  // passage id, or "abstract"
        FieldRef field;
        std::size_t start = 0;         // in assembled_text
        std::size_t end = 0;
        std::size_t field_offset = 0;  // field position of `start`
    };

    std::string paper_id;
    std::string assembled_text;
    std::vector<std::string> passage_ids;
    std::vector<Segment> segments;
};

inline constexpr const char* kContextSeparator = "\n\n";

struct Quote {
    std::string quote_id;  // "Q1", "Q2", ... in paper rank order
    std::string paper_id;
    std::string text;      // exact substring of the paper's assembled_text
    std::string source;    // passage id, or "abstract"
    std::size_t start = 0;  // span within assembled_text
    std::size_t end = 0;
    FieldRef field;
    CharSpan field_span;   // the quote's extent within `field` (clipped to one segment)
    std::vector<std::string> embedded_citations;  // cited paper ids, anchor order
};

enum class SectionFormat { paragraph, bullets };
const char* to_string(SectionFormat f);
std::optional<SectionFormat> section_format_from_string(std::string_view s);

struct OutlineSection {
    std::size_t position = 0;
    std::string title;
    SectionFormat format = SectionFormat::paragraph;
    std::vector<std::string> quote_ids;
};

struct Outline {
    std::vector<OutlineSection> sections;
    std::vector<std::string> unassigned_quotes;
    bool fallback = false;
    bool inserted_intro = false;
    std::vector<std::string> warnings;
};

/// What an inline marker points at.
struct Citation {
    enum class Kind { quote, abstract, llm_memory };
    Kind kind = Kind::llm_memory;
    std::string quote_id;
    std::string paper_id;
    std::string paper_title;
    std::string text;  // the evidence shown for the marker
};

inline constexpr const char* kMemoryMarker = "M";

struct TableCell {
    std::optional<std::string> value;  // nullopt: MISSING
    std::optional<std::string> evidence;

    bool missing() const { return !value.has_value(); }
    bool operator==(const TableCell&) const = default;
};

struct ComparisonTable {
    std::size_t section_position = 0;
    std::vector<std::string> columns;  // aspects
    std::vector<std::string> rows;     // paper ids
    std::vector<std::vector<TableCell>> cells;  // [row][column]

    bool empty() const { return rows.empty() || columns.empty(); }
    double row_missing_fraction(std::size_t r) const;
    double column_missing_fraction(std::size_t c) const;
};

struct ReportSection {
    std::size_t position = 0;
    std::string title;
    std::string tldr;
    std::string body;
    SectionFormat format = SectionFormat::paragraph;
    // marker -> target, in order of first appearance in body
    std::vector<std::pair<std::string, Citation>> citations;
    std::optional<ComparisonTable> table;
    bool failed = false;

    const Citation* find_citation(const std::string& marker) const;
};

struct Diagnostics {
    std::size_t dropped_quotes = 0;     // fragments that failed verbatim verification
    std::size_t memory_citations = 0;   // [M] markers in final bodies
    std::size_t rewritten_markers = 0;  // unknown markers turned into [M]
    std::size_t missing_cited_papers = 0;
    std::vector<std::string> discarded_papers;
    std::vector<std::string> unassigned_quotes;
    std::vector<std::string> warnings;
};

struct Report {
    std::string report_id;
    std::string query;
    std::vector<ReportSection> sections;
    std::vector<Quote> quotes;
    Diagnostics diagnostics;
    std::optional<std::string> error_stage;
    std::optional<std::string> error_message;
};

nlohmann::json to_json(const Quote& q);
Quote quote_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Outline& o);
nlohmann::json to_json(const Citation& c);
Citation citation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ComparisonTable& t);
ComparisonTable table_from_json(const nlohmann::json& j);
/// Section without its table; the table travels separately in events.
nlohmann::json section_to_json(const ReportSection& s, bool include_table = true);
ReportSection section_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Diagnostics& d);
nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

std::string to_markdown(const Report& r);

}  // namespace litqa
