#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "litqa/corpus/ingest.hpp"
#include "litqa/llm/openai.hpp"
#include "litqa/service/pipeline.hpp"

namespace litqa {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Embedding backend: {"kind": "hash", "dim": 256, "seed": n} or
/// {"kind": "openai", "dim": n, "batch": n, ...ProviderConfig fields}.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const nlohmann::json& spec);

/// Rerank backend: {"kind": "token-overlap"} or {"kind": "http", ...ProviderConfig fields}.
std::unique_ptr<RerankScorer> make_rerank_scorer(const nlohmann::json& spec);

struct ServiceConfig {
    std::filesystem::path corpus_store;  // directory written by `ingest`
    std::filesystem::path index_dir;     // directory written by `index build`
    std::filesystem::path report_dir = "reports";
    nlohmann::json embedding = {{"kind", "hash"}, {"dim", 256}};
    nlohmann::json rerank = {{"kind", "token-overlap"}};
    llm::ProviderConfig chat;
    std::optional<std::string> templates;  // JSON file of prompt overrides
    std::optional<std::string> denylist;
    std::optional<std::string> moderation_endpoint;
    PipelineConfig pipeline;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> webui_dir;

    /// Relative paths are resolved against `base`.
    static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
    /// Reads `path` (when non-empty), then applies environment overrides.
    static ServiceConfig load(const std::filesystem::path& path,
                              const std::function<const char*(const char*)>& getenv = std::getenv);
    /// LITQA_* variables; see the README for the list.
    void apply_env(const std::function<const char*(const char*)>& getenv = std::getenv);
    nlohmann::json to_json() const;
};

/// Loaded corpus, index and providers, plus the engine that borrows them.
class Runtime {
public:
    /// Throws ConfigError when something cannot be loaded or the embedding
    /// provider differs from the one the index was built with.
    explicit Runtime(ServiceConfig config);

    const ServiceConfig& config() const { return config_; }
    const Corpus& corpus() const { return store_.corpus; }
    const HybridIndex& index() const { return index_; }
    EmbeddingProvider& embedder() { return *embedder_; }
    RerankScorer& scorer() { return *scorer_; }
    llm::Gateway& gateway() { return *gateway_; }
    std::shared_ptr<llm::ChatProvider> chat_provider() const { return chat_; }
    Engine engine();

private:
    ServiceConfig config_;
    Store store_;
    HybridIndex index_;
    std::unique_ptr<EmbeddingProvider> embedder_;
    std::unique_ptr<RerankScorer> scorer_;
    std::shared_ptr<llm::ChatProvider> chat_;
    std::unique_ptr<llm::Gateway> gateway_;
    std::unique_ptr<llm::Moderator> moderator_;
};

}  // namespace litqa
