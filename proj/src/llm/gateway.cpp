#include "litqa/llm/gateway.hpp"

#include <thread>

namespace litqa::llm {

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, TemplateRegistry templates, GatewayConfig config,
                 std::shared_ptr<RateLimiter> limiter)
    : provider_(std::move(provider)), templates_(std::move(templates)), config_(config), limiter_(std::move(limiter)) {
    if (!provider_) throw std::invalid_argument("gateway needs a provider");
}

CompletionResult Gateway::complete(TemplateId id, Vars vars) {
    return complete(CompletionRequest{id, std::move(vars), config_.decoding});
}

CompletionResult Gateway::complete(const CompletionRequest& req) {
    const std::string prompt = templates_.get(req.template_id).render(req.vars);

    UsageRecord rec{req.template_id, provider_->id(), {}, 0.0, 0, false};
    auto backoff = config_.backoff;
    auto start = std::chrono::steady_clock::now();
    auto log = [&] {
        rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::lock_guard lock(mu_);
        log_.push_back(rec);
    };
    for (;;) {
        ++rec.attempts;
        try {
            if (limiter_) limiter_->acquire();
            auto result = provider_->complete(req, prompt);
            rec.usage = result.usage;
            rec.ok = true;
            log();
            result.latency_ms = rec.latency_ms;
            return result;
        } catch (const ProviderError& e) {
            if (!e.retriable || rec.attempts > config_.max_retries) {
                log();
                throw;
            }
        } catch (...) {
            log();
            throw;
        }
        if (backoff.count() > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

nlohmann::json Gateway::complete_json(TemplateId id, Vars vars) {
    CompletionRequest req{id, std::move(vars), config_.decoding};
    std::string raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        raw = complete(req).text;
        if (auto j = parse_json_object(raw)) return *j;
    }
    throw MalformedOutput(id, raw);
}

std::vector<UsageRecord> Gateway::usage_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

Usage Gateway::total_usage() const {
    std::lock_guard lock(mu_);
    Usage total;
    for (const auto& r : log_) {
        total.prompt_tokens += r.usage.prompt_tokens;
        total.completion_tokens += r.usage.completion_tokens;
    }
    return total;
}

std::optional<nlohmann::json> parse_json_object(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (!j.is_discarded()) {
        if (j.is_object()) return j;
        return std::nullopt;
    }
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

}  // namespace litqa::llm
