#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace litqa {

struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool operator==(const CharSpan&) const = default;
};

struct BodySection {
    std::string title;
    std::string text;
};

/// Which text of a paper a citation anchor or passage points into.
/// `body_index` is only meaningful for body fields.
struct FieldRef {
    enum class Kind { title, abstract, body };
    Kind kind = Kind::abstract;
    std::size_t body_index = 0;

    bool operator==(const FieldRef&) const = default;

    /// "title", "abstract" or "body:<n>".
    std::string to_string() const;
    static FieldRef parse(const std::string& s);
};

struct CitationAnchor {
    FieldRef field;
    CharSpan span;
    std::string cited_paper_id;
};

struct Paper {
    std::string paper_id;
    std::string title;
    std::string abstract;
    std::optional<std::string> venue;
    std::optional<int> year;
    std::set<std::string> fields_of_study;
    std::vector<BodySection> body_sections;
    std::vector<CitationAnchor> citations;

    /// Text of the named field. Throws std::out_of_range for a bad body index.
    const std::string& field_text(const FieldRef& f) const;
};

enum class PassageKind { title, abstract, body };

const char* to_string(PassageKind k);
PassageKind passage_kind_from_string(const std::string& s);

struct Passage {
    std::string passage_id;
    std::string paper_id;
    PassageKind kind = PassageKind::body;
    std::size_t body_index = 0;
    std::string section_path;
    std::string text;
    std::size_t token_count = 0;
    // Span of `text` in the source field, overlap prefix included.
    CharSpan char_span;
    std::size_t overlap_prefix_tokens = 0;
    std::size_t overlap_prefix_chars = 0;
    // A single token could not be fitted within the token budget.
    bool degenerate = false;

    FieldRef field() const;
    std::string_view content() const { return std::string_view(text).substr(overlap_prefix_chars); }
};

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Papers keyed by id, kept in insertion order.
class Corpus {
public:
    /// Throws CorpusError on a duplicate or empty id.
    void add(Paper paper);

    const Paper* find(const std::string& paper_id) const;
    const Paper& at(const std::string& paper_id) const;
    const std::vector<Paper>& papers() const { return papers_; }
    std::size_t size() const { return papers_.size(); }
    bool empty() const { return papers_.empty(); }

private:
    std::vector<Paper> papers_;
    std::map<std::string, std::size_t> by_id_;
};

}  // namespace litqa
