#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "litqa/corpus/types.hpp"

namespace litqa {

struct Token {
    CharSpan span;
    std::string_view text;
};

/// Splits text into span-preserving tokens and into sentences.
/// Sentence spans returned by `sentences` tile the input: the first starts at
/// 0, each one ends where the next begins and the last ends at text.size().
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<Token> tokenize(std::string_view text) const = 0;
    virtual std::vector<CharSpan> sentences(std::string_view text) const = 0;
};

/// Words are maximal runs of ASCII alphanumerics and non-ASCII bytes; every
/// other non-space byte is a token of its own. Sentences end after terminal
/// punctuation followed by whitespace (unless the word is a known
/// abbreviation), and at every newline.
class DefaultTokenizer final : public Tokenizer {
public:
    std::vector<Token> tokenize(std::string_view text) const override;
    std::vector<CharSpan> sentences(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

/// Lower-cased word tokens, punctuation dropped. Used for keyword matching.
std::vector<std::string> index_terms(std::string_view text, const Tokenizer& tok = default_tokenizer());

/// Collapses whitespace runs to one space and trims both ends.
std::string normalize_ws(std::string_view text);

}  // namespace litqa
