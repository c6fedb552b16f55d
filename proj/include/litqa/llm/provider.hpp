#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>

#include "litqa/llm/templates.hpp"

namespace litqa::llm {

struct DecodingParams {
    int max_tokens = 1024;
    double temperature = 0.0;
};

struct CompletionRequest {
    TemplateId template_id;
    Vars vars;
    DecodingParams params;
};

struct Usage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
};

struct CompletionResult {
    std::string text;
    Usage usage;
    std::string provider_id;
    double latency_ms = 0.0;
};

class LlmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Timeout, refusal, transport or upstream failure. `retriable` tells the
/// gateway whether another attempt may succeed.
class ProviderError : public LlmError {
public:
    ProviderError(const std::string& what, bool retriable) : LlmError(what), retriable(retriable) {}
    bool retriable;
};

class ScriptMismatch : public LlmError {
public:
    ScriptMismatch(TemplateId id, std::string digest)
        : LlmError("no scripted response for " + to_string(id) + " digest " + digest), template_id(id),
          digest(std::move(digest)) {}

    TemplateId template_id;
    std::string digest;
};

class MalformedOutput : public LlmError {
public:
    MalformedOutput(TemplateId id, std::string raw)
        : LlmError("malformed " + to_string(id) + " output"), template_id(id), raw(std::move(raw)) {}

    TemplateId template_id;
    std::string raw;
};

/// Chat-completion backend. Implementations must be safe to call from
/// several threads.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string id() const = 0;
    /// `prompt` is the rendered template; `req` carries the id and bindings.
    virtual CompletionResult complete(const CompletionRequest& req, const std::string& prompt) = 0;
};

/// Token bucket. `rate` requests per second, up to `burst` at once;
/// rate <= 0 disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double rate, double burst = 1.0);
    void acquire();

private:
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

}  // namespace litqa::llm
