#pragma once

// The checked-in fixture corpus and provider script, indexed in memory.

#include <atomic>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "litqa/corpus/chunker.hpp"
#include "litqa/corpus/ingest.hpp"
#include "litqa/llm/scripted.hpp"
#include "litqa/service/pipeline.hpp"

namespace litqa::testing {

inline std::string fixture_path(const std::string& name) { return std::string(LITQA_FIXTURE_DIR) + "/" + name; }

inline std::vector<std::string> fixture_queries() {
    std::ifstream in(fixture_path("queries.txt"));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

struct FixtureWorld {
    Corpus corpus;
    std::vector<Passage> passages;
    HybridIndex index;
    HashEmbeddingProvider embedder{256};
    TokenOverlapScorer scorer;
    std::shared_ptr<llm::ScriptedProvider> provider;
    std::unique_ptr<llm::Gateway> gateway;
    llm::DenylistModerator moderator;

    Engine engine() {
        Engine e;
        e.corpus = &corpus;
        e.index = &index;
        e.embedder = &embedder;
        e.scorer = &scorer;
        e.gateway = gateway.get();
        e.moderator = &moderator;
        return e;
    }
};

/// Fixture corpus with the given script (default: the checked-in one).
inline std::unique_ptr<FixtureWorld> fixture_world(std::vector<llm::ScriptEntry> script = {}) {
    auto w = std::make_unique<FixtureWorld>();
    std::ifstream in(fixture_path("corpus.jsonl"));
    w->corpus = ingest_corpus(in).corpus;
    for (const auto& p : w->corpus.papers()) {
        auto ps = chunk_paper(p, default_tokenizer());
        w->passages.insert(w->passages.end(), ps.begin(), ps.end());
    }
    w->index = HybridIndex::build(w->passages, w->corpus, w->embedder);
    if (script.empty()) script = llm::load_script(fixture_path("script.json"));
    w->provider = std::make_shared<llm::ScriptedProvider>(std::move(script));
    llm::GatewayConfig gc;
    gc.backoff = std::chrono::milliseconds(0);
    w->gateway = std::make_unique<llm::Gateway>(w->provider, llm::TemplateRegistry::defaults(), gc);
    w->moderator = llm::DenylistModerator::from_file(fixture_path("denylist.txt"));
    return w;
}

/// Deterministic ids and a clock that ticks one millisecond per reading.
struct FakeClock {
    std::shared_ptr<std::atomic<long long>> ms = std::make_shared<std::atomic<long long>>(1'760'000'000'000LL);
    Clock clock() const {
        auto m = ms;
        return [m] { return std::chrono::system_clock::time_point(std::chrono::milliseconds(m->fetch_add(1))); };
    }
};

inline QueryService::IdGenerator counting_ids(std::string prefix = "r") {
    auto n = std::make_shared<std::atomic<int>>(0);
    return [n, prefix] { return prefix + std::to_string(n->fetch_add(1)); };
}

}  // namespace litqa::testing
