#include "litqa/service/config.hpp"

#include <fstream>

namespace litqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

double parse_double(const char* name, const char* v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != std::string(v).size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(std::string(name) + " is not a number: \"" + v + "\"");
    }
}

std::size_t parse_count(const char* name, const char* v) {
    double d = parse_double(name, v);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
        throw ConfigError(std::string(name) + " must be a non-negative integer");
    return static_cast<std::size_t>(d);
}

}  // namespace

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const json& spec) {
    auto kind = spec.value("kind", std::string("hash"));
    if (kind == "hash")
        return std::make_unique<HashEmbeddingProvider>(spec.value("dim", std::size_t{256}),
                                                       spec.value("seed", std::uint64_t{0x5eed5eedULL}));
    if (kind == "openai") {
        if (!spec.contains("dim")) throw ConfigError("openai embeddings need \"dim\"");
        return std::make_unique<llm::OpenAiEmbeddingProvider>(llm::ProviderConfig::from_json(spec),
                                                              spec.at("dim").get<std::size_t>(),
                                                              spec.value("batch", std::size_t{64}));
    }
    throw ConfigError("unknown embedding kind \"" + kind + "\"");
}

std::unique_ptr<RerankScorer> make_rerank_scorer(const json& spec) {
    auto kind = spec.value("kind", std::string("token-overlap"));
    if (kind == "token-overlap") return std::make_unique<TokenOverlapScorer>();
    if (kind == "http") return std::make_unique<HttpRerankScorer>(llm::ProviderConfig::from_json(spec));
    throw ConfigError("unknown rerank kind \"" + kind + "\"");
}

ServiceConfig ServiceConfig::from_json(const json& j, const fs::path& base) {
    ServiceConfig c;
    try {
        if (j.contains("corpus_store")) c.corpus_store = resolve(base, j["corpus_store"].get<std::string>());
        if (j.contains("index")) c.index_dir = resolve(base, j["index"].get<std::string>());
        if (j.contains("report_dir")) c.report_dir = resolve(base, j["report_dir"].get<std::string>());
        if (j.contains("embedding")) c.embedding = j["embedding"];
        if (j.contains("rerank")) c.rerank = j["rerank"];
        if (j.contains("chat")) {
            c.chat = llm::ProviderConfig::from_json(j["chat"]);
            if (!c.chat.script.empty()) c.chat.script = resolve(base, c.chat.script).string();
        }
        if (j.contains("templates")) c.templates = resolve(base, j["templates"].get<std::string>()).string();
        if (j.contains("moderation")) {
            const auto& m = j["moderation"];
            if (m.contains("denylist")) c.denylist = resolve(base, m["denylist"].get<std::string>()).string();
            if (m.contains("endpoint")) c.moderation_endpoint = m["endpoint"].get<std::string>();
            c.pipeline.moderation_fail_open = m.value("fail_open", false);
        }
        if (j.contains("retrieval")) {
            const auto& r = j["retrieval"];
            auto& rc = c.pipeline.retrieval;
            rc.max_snippets = r.value("max_snippets", rc.max_snippets);
            rc.max_abstracts = r.value("max_abstracts", rc.max_abstracts);
            rc.index.w_dense = r.value("w_dense", rc.index.w_dense);
            rc.index.w_sparse = r.value("w_sparse", 1.0 - rc.index.w_dense);
            rc.index.exhaustive = r.value("exhaustive", rc.index.exhaustive);
            rc.index.candidate_pool_per_arm = r.value("candidate_pool_per_arm", rc.index.candidate_pool_per_arm);
        }
        if (j.contains("rerank_k")) c.pipeline.rerank.k = j["rerank_k"].get<std::size_t>();
        if (j.contains("rerank_batch")) c.pipeline.rerank.batch_size = j["rerank_batch"].get<std::size_t>();
        if (j.contains("table")) {
            const auto& t = j["table"];
            auto& tc = c.pipeline.table;
            tc.tau = t.value("tau", tc.tau);
            tc.max_aspects = t.value("max_aspects", tc.max_aspects);
            tc.context_chars = t.value("context_chars", tc.context_chars);
        }
        c.pipeline.quote_concurrency = j.value("quote_concurrency", c.pipeline.quote_concurrency);
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        if (j.contains("webui_dir")) c.webui_dir = resolve(base, j["webui_dir"].get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path, const std::function<const char*(const char*)>& getenv) {
    ServiceConfig c;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path.string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config " + path.string() + " is not JSON: " + e.what());
        }
        c = from_json(j, path.parent_path());
    }
    c.apply_env(getenv);
    return c;
}

void ServiceConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
    auto get = [&](const char* name) -> const char* {
        const char* v = getenv(name);
        return v && *v ? v : nullptr;
    };
    if (auto v = get("LITQA_CORPUS_STORE")) corpus_store = v;
    if (auto v = get("LITQA_INDEX")) index_dir = v;
    if (auto v = get("LITQA_REPORT_DIR")) report_dir = v;
    if (auto v = get("LITQA_CHAT_KIND")) chat.kind = v;
    if (auto v = get("LITQA_CHAT_ENDPOINT")) chat.endpoint = v;
    if (auto v = get("LITQA_CHAT_MODEL")) chat.model = v;
    if (auto v = get("LITQA_CHAT_SCRIPT")) chat.script = v;
    if (auto v = get("LITQA_TEMPLATES")) templates = v;
    if (auto v = get("LITQA_DENYLIST")) denylist = v;
    if (auto v = get("LITQA_W_DENSE")) {
        double w = parse_double("LITQA_W_DENSE", v);
        pipeline.retrieval.index.w_dense = w;
        pipeline.retrieval.index.w_sparse = 1.0 - w;
    }
    if (auto v = get("LITQA_MAX_SNIPPETS")) pipeline.retrieval.max_snippets = parse_count("LITQA_MAX_SNIPPETS", v);
    if (auto v = get("LITQA_MAX_ABSTRACTS")) pipeline.retrieval.max_abstracts = parse_count("LITQA_MAX_ABSTRACTS", v);
    if (auto v = get("LITQA_RERANK_K")) pipeline.rerank.k = parse_count("LITQA_RERANK_K", v);
    if (auto v = get("LITQA_TAU")) pipeline.table.tau = parse_double("LITQA_TAU", v);
    if (auto v = get("LITQA_HOST")) host = v;
    if (auto v = get("LITQA_PORT")) port = static_cast<int>(parse_count("LITQA_PORT", v));
    if (auto v = get("LITQA_WEBUI_DIR")) webui_dir = fs::path(v);
}

json ServiceConfig::to_json() const {
    json j{{"corpus_store", corpus_store.string()},
           {"index", index_dir.string()},
           {"report_dir", report_dir.string()},
           {"embedding", embedding},
           {"rerank", rerank},
           {"chat", chat.to_json()},
           {"retrieval",
            {{"max_snippets", pipeline.retrieval.max_snippets},
             {"max_abstracts", pipeline.retrieval.max_abstracts},
             {"w_dense", pipeline.retrieval.index.w_dense},
             {"w_sparse", pipeline.retrieval.index.w_sparse},
             {"exhaustive", pipeline.retrieval.index.exhaustive},
             {"candidate_pool_per_arm", pipeline.retrieval.index.candidate_pool_per_arm}}},
           {"rerank_k", pipeline.rerank.k},
           {"rerank_batch", pipeline.rerank.batch_size},
           {"table",
            {{"tau", pipeline.table.tau},
             {"max_aspects", pipeline.table.max_aspects},
             {"context_chars", pipeline.table.context_chars}}},
           {"quote_concurrency", pipeline.quote_concurrency},
           {"host", host},
           {"port", port}};
    json moderation{{"fail_open", pipeline.moderation_fail_open}};
    if (denylist) moderation["denylist"] = *denylist;
    if (moderation_endpoint) moderation["endpoint"] = *moderation_endpoint;
    j["moderation"] = moderation;
    if (templates) j["templates"] = *templates;
    if (webui_dir) j["webui_dir"] = webui_dir->string();
    return j;
}

Runtime::Runtime(ServiceConfig config) : config_(std::move(config)) {
    try {
        config_.pipeline.retrieval.index.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("retrieval weights: ") + e.what());
    }
    if (config_.corpus_store.empty()) throw ConfigError("no corpus store configured");
    if (config_.index_dir.empty()) throw ConfigError("no index configured");
    try {
        store_ = read_store(config_.corpus_store);
        index_ = HybridIndex::load(config_.index_dir);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    embedder_ = make_embedding_provider(config_.embedding);
    if (embedder_->id() != index_.provider_id())
        throw ConfigError("index was built with embedding provider \"" + index_.provider_id() +
                          "\" but the config selects \"" + embedder_->id() + "\"");
    scorer_ = make_rerank_scorer(config_.rerank);
    try {
        chat_ = llm::make_chat_provider(config_.chat);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("chat provider: ") + e.what());
    }
    auto templates = llm::TemplateRegistry::defaults();
    if (config_.templates) templates.load_overrides(*config_.templates);
    llm::GatewayConfig gc;
    gc.max_retries = config_.chat.max_retries;
    gc.decoding = config_.chat.decoding;
    std::shared_ptr<llm::RateLimiter> limiter;
    if (config_.chat.requests_per_second > 0)
        limiter = std::make_shared<llm::RateLimiter>(config_.chat.requests_per_second,
                                                     std::max(1.0, config_.chat.requests_per_second));
    gateway_ = std::make_unique<llm::Gateway>(chat_, std::move(templates), gc, limiter);
    if (config_.moderation_endpoint)
        moderator_ = std::make_unique<llm::HttpModerator>(*config_.moderation_endpoint, config_.chat.api_key());
    else if (config_.denylist)
        moderator_ = std::make_unique<llm::DenylistModerator>(llm::DenylistModerator::from_file(*config_.denylist));
}

Engine Runtime::engine() {
    Engine e;
    e.corpus = &store_.corpus;
    e.index = &index_;
    e.embedder = embedder_.get();
    e.scorer = scorer_.get();
    e.gateway = gateway_.get();
    e.moderator = moderator_.get();
    e.config = config_.pipeline;
    return e;
}

}  // namespace litqa
