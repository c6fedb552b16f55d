#include "litqa/corpus/types.hpp"

#include <charconv>

namespace litqa {

std::string FieldRef::to_string() const {
    switch (kind) {
        case Kind::title: return "title";
        case Kind::abstract: return "abstract";
        case Kind::body: return "body:" + std::to_string(body_index);
    }
    return "abstract";
}

FieldRef FieldRef::parse(const std::string& s) {
    if (s == "title") return {Kind::title, 0};
    if (s == "abstract") return {Kind::abstract, 0};
    if (s.rfind("body:", 0) == 0) {
        std::size_t idx = 0;
        const char* first = s.data() + 5;
        const char* last = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(first, last, idx);
        if (ec == std::errc() && ptr == last && first != last) return {Kind::body, idx};
    }
    throw CorpusError("bad field reference '" + s + "'");
}

const std::string& Paper::field_text(const FieldRef& f) const {
    switch (f.kind) {
        case FieldRef::Kind::title: return title;
        case FieldRef::Kind::abstract: return abstract;
        case FieldRef::Kind::body: return body_sections.at(f.body_index).text;
    }
    return abstract;
}

const char* to_string(PassageKind k) {
    switch (k) {
        case PassageKind::title: return "title";
        case PassageKind::abstract: return "abstract";
        case PassageKind::body: return "body";
    }
    return "body";
}

PassageKind passage_kind_from_string(const std::string& s) {
    if (s == "title") return PassageKind::title;
    if (s == "abstract") return PassageKind::abstract;
    if (s == "body") return PassageKind::body;
    throw CorpusError("unknown passage kind '" + s + "'");
}

FieldRef Passage::field() const {
    switch (kind) {
        case PassageKind::title: return {FieldRef::Kind::title, 0};
        case PassageKind::abstract: return {FieldRef::Kind::abstract, 0};
        case PassageKind::body: return {FieldRef::Kind::body, body_index};
    }
    return {};
}

void Corpus::add(Paper paper) {
    if (paper.paper_id.empty()) throw CorpusError("paper_id must be non-empty");
    if (by_id_.count(paper.paper_id)) throw CorpusError("duplicate paper_id \"" + paper.paper_id + "\"");
    by_id_.emplace(paper.paper_id, papers_.size());
    papers_.push_back(std::move(paper));
}

const Paper* Corpus::find(const std::string& paper_id) const {
    auto it = by_id_.find(paper_id);
    return it == by_id_.end() ? nullptr : &papers_[it->second];
}

const Paper& Corpus::at(const std::string& paper_id) const {
    const Paper* p = find(paper_id);
    if (!p) throw CorpusError("unknown paper_id \"" + paper_id + "\"");
    return *p;
}

}  // namespace litqa
