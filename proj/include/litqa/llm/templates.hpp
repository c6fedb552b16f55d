#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace litqa::llm {

enum class TemplateId {
    decompose,
    extract_quotes,
    outline,
    assign_quotes,
    section,
    table_aspects,
    table_value,
    relevance_label,
    attribution_judge,
};

inline constexpr std::array<TemplateId, 9> all_template_ids{
    TemplateId::decompose,    TemplateId::extract_quotes, TemplateId::outline,
    TemplateId::assign_quotes, TemplateId::section,       TemplateId::table_aspects,
    TemplateId::table_value,  TemplateId::relevance_label, TemplateId::attribution_judge,
};

std::string to_string(TemplateId id);
std::optional<TemplateId> template_id_from_string(std::string_view s);

enum class OutputSchema { text, json_object };

using Vars = std::map<std::string, std::string>;

class RenderError : public std::runtime_error {
public:
    explicit RenderError(std::string placeholder)
        : std::runtime_error("unbound placeholder {" + placeholder + "}"), placeholder(std::move(placeholder)) {}

    std::string placeholder;
};

/// Substitutes `{name}` placeholders (name = [A-Za-z_][A-Za-z0-9_]*).
/// `{{` and `}}` produce literal braces; any other brace is copied as is.
std::string render(std::string_view text, const Vars& vars);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view text);

struct PromptTemplate {
    TemplateId id;
    std::string text;
    OutputSchema schema = OutputSchema::text;

    std::string render(const Vars& vars) const { return llm::render(text, vars); }
};

class TemplateRegistry {
public:
    /// Registry holding the built-in prompt for every TemplateId.
    static TemplateRegistry defaults();

    const PromptTemplate& get(TemplateId id) const;
    void set(TemplateId id, std::string text);

    /// Replaces texts from a JSON object {"<template_id>": "<text>", ...}.
    void load_overrides(const std::string& path);

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

}  // namespace litqa::llm
