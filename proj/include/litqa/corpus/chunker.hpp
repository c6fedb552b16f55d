#pragma once

#include <string_view>
#include <vector>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/corpus/types.hpp"

namespace litqa {

struct ChunkOptions {
    std::size_t max_tokens = 480;
    std::size_t max_overlap = 64;
};

/// A passage boundary inside one field, before ids and text are attached.
struct ChunkSpan {
    CharSpan span;                 // overlap included
    std::size_t content_start = 0; // where new (non-overlap) text begins
    std::size_t token_count = 0;
    std::size_t overlap_tokens = 0;
    bool degenerate = false;
};

/// Chunks a single field. Passages are packed greedily with whole sentences;
/// a sentence that cannot fit even in an otherwise empty passage is split at
/// token boundaries. Each passage after the first repeats the tail (at most
/// `max_overlap` tokens) of the previous passage's final sentence.
std::vector<ChunkSpan> chunk_field(std::string_view text, const Tokenizer& tokenizer,
                                   const ChunkOptions& options = {});

/// Chunks title, abstract and every body section of a paper independently.
std::vector<Passage> chunk_paper(const Paper& paper, const Tokenizer& tokenizer,
                                 const ChunkOptions& options = {});

}  // namespace litqa
