#include "litqa/llm/templates.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

namespace litqa::llm {

namespace {

constexpr const char* kNames[] = {
    "decompose", "extract_quotes", "outline",         "assign_quotes",     "section",
    "table_aspects", "table_value", "relevance_label", "attribution_judge",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Returns the end of `{name}` starting at i, or npos.
std::size_t placeholder_end(std::string_view text, std::size_t i) {
    std::size_t j = i + 1;
    if (j >= text.size() || !ident_start(text[j])) return std::string_view::npos;
    while (j < text.size() && ident_char(text[j])) ++j;
    if (j >= text.size() || text[j] != '}') return std::string_view::npos;
    return j;
}

const char* kDecompose = R"(You prepare a user's research question for two search engines over scientific papers.
One engine matches keywords, the other matches meaning.
Also extract any constraints the user states about paper metadata.

Question: {query}

Respond with a single JSON object and nothing else:
{{"keyword": "<short keyword query>", "semantic": "<natural-language paraphrase>", "year_min": <integer or null>, "year_max": <integer or null>, "venues": [<venue names>], "fields_of_study": [<fields>]}}
Use null and empty lists when the question states no constraint. "after 2021" means year_min 2022.)";

const char* kExtractQuotes = R"(Question: {query}

Below is text from the paper {paper_id}: its abstract followed by passages retrieved for the question.

{context}

Copy, exactly as written, the sentences from this text that help answer the question.
Do not paraphrase, fix or shorten them. Separate consecutive quotes with "...".
If nothing in the text is relevant, respond with the single word NONE.)";

const char* kOutline = R"(Question: {query}

Plan a report that answers the question. List the themes it should cover in a logical order.
The first section must be an introduction or background for the rest of the answer.
Give each section a format: "paragraph" for a synthesis of ideas, or "bullets" for a list of closely related items such as methods, datasets or systems.

Respond with a single JSON object and nothing else:
{{"sections": [{{"title": "<section title>", "format": "paragraph" | "bullets"}}]}})";

const char* kAssignQuotes = R"(Question: {query}

Report sections:
{sections}

Quotes extracted from papers:
{quotes}

Assign each quote to the sections whose content it supports. A quote may go to several sections or to none.

Respond with a single JSON object and nothing else:
{{"assignments": {{"<quote id>": [<section numbers>]}}}})";

const char* kSection = R"(Question: {query}

Report outline:
{outline}

Sections written so far:
{prior_sections}

Write section {position}, "{title}", formatted as {format}.
Use the references below. Cite each claim with the bracketed id of its reference, for example [Q1] or [A2].
If the references do not cover something the section needs, write it from your own knowledge and cite it as [M].

References:
{references}

Respond with a single JSON object and nothing else:
{{"tldr": "<one sentence summary of the section>", "body": "<section text with citations>"}})";

const char* kTableAspects = R"(Question: {query}
Section: {section_title}

Papers discussed in this section:
{abstracts}

Name the aspects on which these papers can be compared in a table, such as task, dataset, method or result.

Respond with a single JSON object and nothing else:
{{"aspects": ["<aspect>", ...]}})";

const char* kTableValue = R"(Question: {query}
Aspect: {aspect}

Full text of paper {paper_id}:
{full_text}

State the value of the aspect for this paper in a few words, and copy the excerpt that supports it.

Respond with a single JSON object and nothing else:
{{"value": "<value>" or null, "excerpt": "<verbatim excerpt>" or null}}
Use null when the paper does not state it.)";

const char* kRelevanceLabel =
    R"(If any part of the following text is relevant to the following question, then return 1, otherwise return 0. Non-english results are not relevant, results which are primarily tables are not relevant.

Question: {query}
Text: {text})";

const char* kAttributionJudge = R"(As an Attribution Validator, your task is to verify whether a given reference can support the given claim.
A claim can be either a plain sentence or a question followed by its answer.
Specifically, your response should clearly indicate the relationship: Attributable, Contradictory or Extrapolatory.
A contradictory error occurs when you can infer that the answer contradicts the fact presented in the context, while an extrapolatory error means that you cannot infer the correctness of the answer based on the information provided in the context.
Output your response as a json with only a single key "output" and a value of one among - ("Attributable", "Contradictory", "Extrapolatory").
Claim: {claim}
Reference: {ref_excerpt})";

}  // namespace

std::string to_string(TemplateId id) { return kNames[static_cast<int>(id)]; }

std::optional<TemplateId> template_id_from_string(std::string_view s) {
    for (auto id : all_template_ids)
        if (s == kNames[static_cast<int>(id)]) return id;
    return std::nullopt;
}

std::string render(std::string_view text, const Vars& vars) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        char c = text[i];
        if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            out += '{';
            i += 2;
        } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            out += '}';
            i += 2;
        } else if (c == '{') {
            std::size_t end = placeholder_end(text, i);
            if (end == std::string_view::npos) {
                out += c;
                ++i;
                continue;
            }
            std::string name(text.substr(i + 1, end - i - 1));
            auto it = vars.find(name);
            if (it == vars.end()) throw RenderError(name);
            out += it->second;
            i = end + 1;
        } else {
            out += c;
            ++i;
        }
    }
    return out;
}

std::vector<std::string> placeholders(std::string_view text) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < text.size();) {
        if ((text[i] == '{' || text[i] == '}') && i + 1 < text.size() && text[i + 1] == text[i]) {
            i += 2;
            continue;
        }
        if (text[i] == '{') {
            std::size_t end = placeholder_end(text, i);
            if (end != std::string_view::npos) {
                std::string name(text.substr(i + 1, end - i - 1));
                if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
                i = end + 1;
                continue;
            }
        }
        ++i;
    }
    return names;
}

TemplateRegistry TemplateRegistry::defaults() {
    TemplateRegistry r;
    auto add = [&](TemplateId id, const char* text, OutputSchema schema) {
        r.templates_[id] = PromptTemplate{id, text, schema};
    };
    add(TemplateId::decompose, kDecompose, OutputSchema::json_object);
    add(TemplateId::extract_quotes, kExtractQuotes, OutputSchema::text);
    add(TemplateId::outline, kOutline, OutputSchema::json_object);
    add(TemplateId::assign_quotes, kAssignQuotes, OutputSchema::json_object);
    add(TemplateId::section, kSection, OutputSchema::json_object);
    add(TemplateId::table_aspects, kTableAspects, OutputSchema::json_object);
    add(TemplateId::table_value, kTableValue, OutputSchema::json_object);
    add(TemplateId::relevance_label, kRelevanceLabel, OutputSchema::text);
    add(TemplateId::attribution_judge, kAttributionJudge, OutputSchema::json_object);
    return r;
}

const PromptTemplate& TemplateRegistry::get(TemplateId id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw std::out_of_range("no template for " + to_string(id));
    return it->second;
}

void TemplateRegistry::set(TemplateId id, std::string text) {
    auto it = templates_.find(id);
    OutputSchema schema = it == templates_.end() ? OutputSchema::text : it->second.schema;
    templates_[id] = PromptTemplate{id, std::move(text), schema};
}

void TemplateRegistry::load_overrides(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template file " + path);
    auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw std::runtime_error(path + ": expected a JSON object");
    for (auto& [key, value] : j.items()) {
        auto id = template_id_from_string(key);
        if (!id) throw std::runtime_error(path + ": unknown template id \"" + key + "\"");
        set(*id, value.get<std::string>());
    }
}

}  // namespace litqa::llm
