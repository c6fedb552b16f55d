#include "litqa/corpus/chunker.hpp"

#include <algorithm>

namespace litqa {

namespace {

struct SentenceTokens {
    std::size_t begin = 0;  // first token index
    std::size_t end = 0;    // one past last token index
};

std::vector<SentenceTokens> sentence_token_ranges(const std::vector<CharSpan>& sentences,
                                                  const std::vector<Token>& tokens) {
    std::vector<SentenceTokens> out;
    out.reserve(sentences.size());
    std::size_t t = 0;
    for (const auto& s : sentences) {
        SentenceTokens r{t, t};
        while (t < tokens.size() && tokens[t].span.start < s.end) ++t;
        r.end = t;
        out.push_back(r);
    }
    return out;
}

}  // namespace

std::vector<ChunkSpan> chunk_field(std::string_view text, const Tokenizer& tokenizer,
                                   const ChunkOptions& options) {
    std::vector<ChunkSpan> out;
    if (text.empty()) return out;

    const auto tokens = tokenizer.tokenize(text);
    const std::size_t n_tokens = tokens.size();
    if (n_tokens == 0) {
        out.push_back({{0, text.size()}, 0, 0, 0, false});
        return out;
    }

    if (options.max_tokens == 0) {
        for (std::size_t t = 0; t < n_tokens; ++t) {
            std::size_t begin = t == 0 ? 0 : tokens[t].span.start;
            std::size_t end = t + 1 < n_tokens ? tokens[t + 1].span.start : text.size();
            out.push_back({{begin, end}, begin, 1, 0, true});
        }
        return out;
    }

    const std::size_t max_tokens = options.max_tokens;
    const std::size_t max_overlap = std::min(options.max_overlap, max_tokens - 1);
    const auto sentences = sentence_token_ranges(tokenizer.sentences(text), tokens);

    // Passages as token ranges: [first, end) with new content starting at `pos`.
    struct Range {
        std::size_t first, pos, end;
    };
    std::vector<Range> ranges;

    std::size_t pos = 0;
    std::size_t overlap = 0;
    std::size_t k = 0;  // sentence containing token `pos`
    while (pos < n_tokens) {
        while (k < sentences.size() && sentences[k].end <= pos) ++k;
        std::size_t end = pos;
        while (k < sentences.size()) {
            std::size_t piece = sentences[k].end - std::max(sentences[k].begin, end);
            if (overlap + (end - pos) + piece > max_tokens) break;
            end = sentences[k].end;
            ++k;
        }
        if (end == pos) {
            std::size_t piece = sentences[k].end - pos;
            if (piece <= max_tokens) {
                // The sentence fits on its own; give up part of the overlap rather than split it.
                overlap = std::min(overlap, max_tokens - piece);
                end = sentences[k].end;
                ++k;
            } else {
                end = pos + (max_tokens - overlap);
            }
        }
        ranges.push_back({pos - overlap, pos, end});

        // The next passage repeats the tail of this passage's final sentence.
        std::size_t last = end - 1;
        std::size_t s = k;
        while (s > 0 && (s >= sentences.size() || sentences[s].begin > last)) --s;
        std::size_t final_begin = std::max(sentences[s].begin, pos);
        overlap = std::min(max_overlap, end - final_begin);
        pos = end;
    }

    out.reserve(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& r = ranges[i];
        std::size_t content_start = i == 0 ? 0 : tokens[r.pos].span.start;
        std::size_t begin = i == 0 ? 0 : tokens[r.first].span.start;
        std::size_t end = i + 1 < ranges.size() ? tokens[ranges[i + 1].pos].span.start : text.size();
        out.push_back({{begin, end}, content_start, r.end - r.first, r.pos - r.first, false});
    }
    return out;
}

std::vector<Passage> chunk_paper(const Paper& paper, const Tokenizer& tokenizer,
                                 const ChunkOptions& options) {
    std::vector<Passage> out;
    auto emit = [&](const std::string& text, PassageKind kind, std::size_t body_index,
                    const std::string& tag, const std::string& section_path) {
        auto spans = chunk_field(text, tokenizer, options);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            const auto& c = spans[i];
            Passage p;
            p.passage_id = paper.paper_id + "#" + tag + ":" + std::to_string(i);
            p.paper_id = paper.paper_id;
            p.kind = kind;
            p.body_index = body_index;
            p.section_path = section_path;
            p.text = text.substr(c.span.start, c.span.size());
            p.token_count = c.token_count;
            p.char_span = c.span;
            p.overlap_prefix_tokens = c.overlap_tokens;
            p.overlap_prefix_chars = c.content_start - c.span.start;
            p.degenerate = c.degenerate;
            out.push_back(std::move(p));
        }
    };
    emit(paper.title, PassageKind::title, 0, "t", "title");
    emit(paper.abstract, PassageKind::abstract, 0, "a", "abstract");
    for (std::size_t i = 0; i < paper.body_sections.size(); ++i) {
        const auto& sec = paper.body_sections[i];
        emit(sec.text, PassageKind::body, i, "b" + std::to_string(i), "body:" + std::to_string(i) + "/" + sec.title);
    }
    return out;
}

}  // namespace litqa
