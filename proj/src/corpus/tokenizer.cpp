#include "litqa/corpus/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace litqa {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_word(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool is_terminal(unsigned char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(unsigned char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

constexpr std::array<std::string_view, 32> kAbbreviations = {
    "al", "approx", "cf", "ch", "co", "corp", "dr", "e.g", "eg", "eq", "eqs", "fig", "figs", "i.e", "ie", "inc", "jr", "ltd", "mr", "mrs", "ms", "no", "nos", "pp",
    "prof", "ref", "refs", "resp", "sec", "st", "tab", "vol",
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// True when the '.' at `dot` ends an abbreviation or an initial rather than a sentence.
bool is_abbreviation(std::string_view text, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !is_space(static_cast<unsigned char>(text[b - 1]))) --b;
    std::string_view word = text.substr(b, dot - b);
    while (!word.empty() && !is_word(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
    if (word.empty()) return false;
    if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))) return true;
    std::string w = lower(word);
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), w) != kAbbreviations.end();
}

}  // namespace

std::vector<Token> DefaultTokenizer::tokenize(std::string_view text) const {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        if (is_word(c)) {
            while (j < n && is_word(static_cast<unsigned char>(text[j]))) ++j;
        }
        out.push_back({{i, j}, text.substr(i, j - i)});
        i = j;
    }
    return out;
}

std::vector<CharSpan> DefaultTokenizer::sentences(std::string_view text) const {
    std::vector<CharSpan> out;
    const std::size_t n = text.size();
    if (n == 0) return out;

    std::size_t start = 0;
    std::size_t i = 0;
    auto skip_space = [&](std::size_t p) {
        while (p < n && is_space(static_cast<unsigned char>(text[p]))) ++p;
        return p;
    };
    // Leading whitespace belongs to the first sentence.
    i = skip_space(0);
    while (i < n) {
        auto c = static_cast<unsigned char>(text[i]);
        if (c == '\n') {
            std::size_t next = skip_space(i);
            if (next < n) {
                out.push_back({start, next});
                start = next;
            }
            i = next;
            continue;
        }
        if (is_terminal(c)) {
            std::size_t j = i + 1;
            while (j < n && (is_terminal(static_cast<unsigned char>(text[j])) ||
                             is_closer(static_cast<unsigned char>(text[j]))))
                ++j;
            if (j < n && !is_space(static_cast<unsigned char>(text[j]))) {
                i = j;
                continue;
            }
            std::size_t next = skip_space(j);
            bool split = next < n;
            if (split && c == '.' && j == i + 1 && is_abbreviation(text, i)) split = false;
            if (split && std::islower(static_cast<unsigned char>(text[next]))) split = false;
            if (split) {
                out.push_back({start, next});
                start = next;
            }
            i = next;
            continue;
        }
        ++i;
    }
    out.push_back({start, n});
    return out;
}

const Tokenizer& default_tokenizer() {
    static const DefaultTokenizer tok;
    return tok;
}

std::vector<std::string> index_terms(std::string_view text, const Tokenizer& tok) {
    std::vector<std::string> out;
    for (const auto& t : tok.tokenize(text)) {
        if (t.text.empty() || !is_word(static_cast<unsigned char>(t.text.front()))) continue;
        out.push_back(lower(t.text));
    }
    return out;
}

std::string normalize_ws(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        if (is_space(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

}  // namespace litqa
