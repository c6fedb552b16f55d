#pragma once

#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "litqa/llm/gateway.hpp"
#include "litqa/llm/moderation.hpp"
#include "litqa/rerank/rerank.hpp"
#include "litqa/retrieval/orchestrator.hpp"
#include "litqa/service/events.hpp"
#include "litqa/service/store.hpp"
#include "litqa/synthesis/synthesis.hpp"

namespace litqa {

struct PipelineConfig {
    RetrievalConfig retrieval;
    RerankOptions rerank;
    TableOptions table;
    std::size_t quote_concurrency = 8;
    bool moderation_fail_open = false;
};

/// Borrowed handles to everything a query needs. All members must outlive
/// the runs that use them; none is mutated by a run except through the
/// gateway's and providers' own synchronization.
struct Engine {
    const Corpus* corpus = nullptr;
    const HybridIndex* index = nullptr;
    EmbeddingProvider* embedder = nullptr;
    RerankScorer* scorer = nullptr;
    llm::Gateway* gateway = nullptr;
    llm::Moderator* moderator = nullptr;  // null: every query is accepted
    PipelineConfig config;
};

using EventEmitter = std::function<void(EventKind, nlohmann::json)>;

struct PipelineResult {
    Report report;
    EventKind terminal = EventKind::done;
    nlohmann::json terminal_payload = nlohmann::json::object();
};

/// Every stage for one query. Emits the accepted, stage and warning events
/// but not the terminal one, which the caller sends after persisting the
/// report. Never throws: a stage failure ends the run with an error result
/// and the sections produced so far.
PipelineResult run_pipeline(const Engine& engine, const std::string& query, const std::string& report_id,
                            const EventEmitter& emit);

/// Sections JSON (as in the stored report) rebuilt from an event log.
nlohmann::json replay_sections(const std::vector<ProgressEvent>& events);

class QueryService {
public:
    using IdGenerator = std::function<std::string()>;

    QueryService(Engine engine, std::shared_ptr<ReportStore> store, Clock clock = {}, IdGenerator ids = {});

    std::string new_report_id();

    /// Runs a query to completion on the calling thread. Each event is
    /// stamped, persisted and then handed to `on_event`.
    Report run(const std::string& query, const std::string& report_id,
               const std::function<void(const ProgressEvent&)>& on_event = {});
    Report ask(const std::string& query, const std::function<void(const ProgressEvent&)>& on_event = {}) {
        return run(query, new_report_id(), on_event);
    }

    enum class Status { unknown, running, finished };
    Status status(const std::string& report_id) const;

    /// Throws NotFound for an unknown or unfinished report.
    nlohmann::json get_report(const std::string& report_id) const;
    std::vector<ProgressEvent> events(const std::string& report_id) const;

    /// Validates, stamps the time and appends. Throws ValidationError or NotFound.
    FeedbackRecord record_feedback(FeedbackRecord f);
    std::vector<FeedbackRecord> feedback(const std::string& report_id) const;

    const Engine& engine() const { return engine_; }
    ReportStore& store() { return *store_; }

private:
    Engine engine_;
    std::shared_ptr<ReportStore> store_;
    Clock clock_;
    IdGenerator ids_;
};

}  // namespace litqa
