#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "litqa/embedding/embedding.hpp"
#include "litqa/llm/provider.hpp"

namespace litqa::llm {

/// How to reach a model. `kind` is "scripted" (reads `script`) or "openai"
/// (any server speaking the OpenAI chat/embeddings API at `endpoint`).
/// Credentials are read from the environment variable named `api_key_env`.
struct ProviderConfig {
    std::string kind = "scripted";
    std::string id;
    std::string endpoint;
    std::string api_key_env;
    std::string model;
    std::string script;
    DecodingParams decoding;
    double timeout_s = 60.0;
    double requests_per_second = 0.0;
    int max_retries = 2;

    static ProviderConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string api_key() const;
};

/// POST {endpoint}/chat/completions with the rendered prompt as one user
/// message. Timeouts, 429, 5xx and content-filter refusals are retriable.
class OpenAiChatProvider final : public ChatProvider {
public:
    explicit OpenAiChatProvider(ProviderConfig config);
    std::string id() const override { return config_.id.empty() ? "openai:" + config_.model : config_.id; }
    CompletionResult complete(const CompletionRequest& req, const std::string& prompt) override;

private:
    ProviderConfig config_;
};

/// POST {endpoint}/embeddings; `dimension` must match the model.
class OpenAiEmbeddingProvider final : public EmbeddingProvider {
public:
    OpenAiEmbeddingProvider(ProviderConfig config, std::size_t dimension, std::size_t batch_size = 64);
    std::string id() const override { return config_.id.empty() ? "openai:" + config_.model : config_.id; }
    std::size_t dimension() const override { return dim_; }
    std::size_t batch_size() const override { return batch_; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

private:
    ProviderConfig config_;
    std::size_t dim_;
    std::size_t batch_;
};

std::shared_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config);

}  // namespace litqa::llm
