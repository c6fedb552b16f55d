#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/llm/provider.hpp"
#include "litqa/llm/templates.hpp"

namespace litqa::llm {

struct GatewayConfig {
    int max_retries = 2;  // extra attempts after a retriable ProviderError
    std::chrono::milliseconds backoff{0};  // doubled after each retry
    DecodingParams decoding;
};

struct UsageRecord {
    TemplateId template_id;
    std::string provider_id;
    Usage usage;
    double latency_ms = 0.0;
    int attempts = 0;
    bool ok = false;
};

/// The single entry point for model calls: renders templates, applies the
/// rate limiter and retry budget, and keeps a usage log.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<ChatProvider> provider, TemplateRegistry templates = TemplateRegistry::defaults(),
                     GatewayConfig config = {}, std::shared_ptr<RateLimiter> limiter = nullptr);

    CompletionResult complete(const CompletionRequest& req);
    CompletionResult complete(TemplateId id, Vars vars);

    /// Completes and parses a single JSON object. A malformed response is
    /// retried once with the identical prompt, then raises MalformedOutput.
    nlohmann::json complete_json(TemplateId id, Vars vars);

    const TemplateRegistry& templates() const { return templates_; }
    const GatewayConfig& config() const { return config_; }
    std::string provider_id() const { return provider_->id(); }

    std::vector<UsageRecord> usage_log() const;
    Usage total_usage() const;

private:
    std::shared_ptr<ChatProvider> provider_;
    TemplateRegistry templates_;
    GatewayConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
    mutable std::mutex mu_;
    std::vector<UsageRecord> log_;
};

/// Extracts a JSON object from model output, tolerating code fences and
/// text around the outermost braces. Returns nullopt if none parses.
std::optional<nlohmann::json> parse_json_object(const std::string& text);

}  // namespace litqa::llm
