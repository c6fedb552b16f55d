#include "litqa/llm/openai.hpp"

#include <cstdlib>

#include "http_util.hpp"
#include "litqa/llm/scripted.hpp"

namespace litqa::llm {

namespace {

bool retriable_status(int status) { return status == 408 || status == 429 || status >= 500; }

httplib::Headers auth_headers(const ProviderConfig& c) {
    httplib::Headers h;
    auto key = c.api_key();
    if (!key.empty()) h.emplace("Authorization", "Bearer " + key);
    return h;
}

nlohmann::json post_json(const ProviderConfig& c, const std::string& path, const nlohmann::json& body) {
    auto base = detail::split_base_url(c.endpoint);
    auto client = detail::make_client(base.origin, c.timeout_s);
    auto res = client->Post(base.prefix + path, auth_headers(c), body.dump(), "application/json");
    if (!res) throw ProviderError(c.endpoint + path + ": " + httplib::to_string(res.error()), true);
    if (res->status != 200)
        throw ProviderError(c.endpoint + path + ": HTTP " + std::to_string(res->status) + " " + res->body,
                            retriable_status(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw ProviderError(c.endpoint + path + ": response is not JSON", true);
    return j;
}

}  // namespace

ProviderConfig ProviderConfig::from_json(const nlohmann::json& j) {
    ProviderConfig c;
    c.kind = j.value("kind", c.kind);
    c.id = j.value("id", c.id);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.model = j.value("model", c.model);
    c.script = j.value("script", c.script);
    c.decoding.max_tokens = j.value("max_tokens", c.decoding.max_tokens);
    c.decoding.temperature = j.value("temperature", c.decoding.temperature);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.requests_per_second = j.value("requests_per_second", c.requests_per_second);
    c.max_retries = j.value("max_retries", c.max_retries);
    if (c.kind != "scripted" && c.kind != "openai")
        throw std::invalid_argument("unknown provider kind \"" + c.kind + "\"");
    return c;
}

nlohmann::json ProviderConfig::to_json() const {
    return {{"kind", kind},
            {"id", id},
            {"endpoint", endpoint},
            {"api_key_env", api_key_env},
            {"model", model},
            {"script", script},
            {"max_tokens", decoding.max_tokens},
            {"temperature", decoding.temperature},
            {"timeout_s", timeout_s},
            {"requests_per_second", requests_per_second},
            {"max_retries", max_retries}};
}

std::string ProviderConfig::api_key() const {
    if (api_key_env.empty()) return {};
    const char* v = std::getenv(api_key_env.c_str());
    return v ? v : "";
}

OpenAiChatProvider::OpenAiChatProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw std::invalid_argument("openai provider needs an endpoint");
}

CompletionResult OpenAiChatProvider::complete(const CompletionRequest& req, const std::string& prompt) {
    nlohmann::json body{{"model", config_.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"temperature", req.params.temperature},
                        {"max_tokens", req.params.max_tokens}};
    auto j = post_json(config_, "/chat/completions", body);
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw ProviderError("chat completion without choices", true);
    const auto& choice = j["choices"][0];
    if (choice.value("finish_reason", std::string()) == "content_filter")
        throw ProviderError("completion refused by content filter", true);
    const auto& msg = choice.value("message", nlohmann::json::object());
    if (!msg.contains("content") || !msg["content"].is_string())
        throw ProviderError(msg.contains("refusal") ? "completion refused" : "completion without content", true);

    CompletionResult r;
    r.text = msg["content"].get<std::string>();
    r.provider_id = id();
    if (j.contains("usage")) {
        r.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0ULL);
        r.usage.completion_tokens = j["usage"].value("completion_tokens", 0ULL);
    }
    return r;
}

OpenAiEmbeddingProvider::OpenAiEmbeddingProvider(ProviderConfig config, std::size_t dimension, std::size_t batch_size)
    : config_(std::move(config)), dim_(dimension), batch_(batch_size) {
    if (config_.endpoint.empty()) throw std::invalid_argument("embedding provider needs an endpoint");
}

std::vector<Embedding> OpenAiEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
    nlohmann::json body{{"model", config_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto j = post_json(config_, "/embeddings", body);
    if (!j.contains("data") || !j["data"].is_array() || j["data"].size() != texts.size())
        throw ProviderError("embedding response has the wrong number of items", false);
    std::vector<Embedding> out(texts.size());
    for (const auto& item : j["data"]) {
        auto idx = item.value("index", std::size_t{0});
        if (idx >= out.size()) throw ProviderError("embedding index out of range", false);
        out[idx] = item.at("embedding").get<Embedding>();
    }
    return out;
}

std::shared_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config) {
    if (config.kind == "openai") return std::make_shared<OpenAiChatProvider>(config);
    if (config.script.empty()) throw std::invalid_argument("scripted provider needs a script file");
    return std::make_shared<ScriptedProvider>(load_script(config.script), config.id.empty() ? "scripted" : config.id);
}

}  // namespace litqa::llm
