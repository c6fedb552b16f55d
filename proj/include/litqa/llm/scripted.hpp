#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/llm/provider.hpp"

namespace litqa::llm {

/// Stable 16-hex-digit FNV-1a digest of a template id and its bindings.
std::string request_digest(TemplateId id, const Vars& vars);

/// One script line. A request matches when the template id agrees (or the
/// entry is a wildcard), the digest agrees (if given) and every `contains`
/// binding is a substring of the request's variable of that name.
struct ScriptEntry {
    std::optional<TemplateId> template_id;  // nullopt: any template
    std::optional<std::string> digest;
    Vars contains;

    std::string response;
    std::optional<std::string> response_template;  // rendered with the request vars
    bool echo = false;                             // respond with the rendered prompt
    std::optional<std::string> error;              // throw ProviderError instead
    bool retriable = true;
    int times = 0;  // uses before the entry is exhausted; 0 = unlimited

    static ScriptEntry from_json(const nlohmann::json& j);
};

/// Accepts a JSON array of entries or an object with an "entries" array.
std::vector<ScriptEntry> parse_script(const nlohmann::json& j);
std::vector<ScriptEntry> load_script(const std::string& path);

/// Deterministic offline provider. Entries are tried in order and the first
/// live match answers. A request no entry matches is a ScriptMismatch.
class ScriptedProvider final : public ChatProvider {
public:
    explicit ScriptedProvider(std::vector<ScriptEntry> script, std::string id = "scripted");

    std::string id() const override { return id_; }
    CompletionResult complete(const CompletionRequest& req, const std::string& prompt) override;

    struct Call {
        TemplateId template_id;
        std::string digest;
        Vars vars;
    };
    std::vector<Call> calls() const;
    std::size_t call_count(TemplateId id) const;

private:
    std::vector<ScriptEntry> script_;
    std::vector<int> used_;
    std::string id_;
    std::vector<Call> calls_;
    mutable std::mutex mu_;
};

}  // namespace litqa::llm
