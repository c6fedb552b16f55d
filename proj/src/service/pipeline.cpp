#include "litqa/service/pipeline.hpp"

#include "litqa/corpus/tokenizer.hpp"

namespace litqa {

using nlohmann::json;

PipelineResult run_pipeline(const Engine& engine, const std::string& query, const std::string& report_id,
                            const EventEmitter& emit) {
    PipelineResult out;
    Report& r = out.report;
    r.report_id = report_id;
    r.query = query;
    Diagnostics& diag = r.diagnostics;

    emit(EventKind::accepted, {{"report_id", report_id}, {"query", query}});

    std::string stage = "moderation";
    auto warn = [&](const std::string& message) {
        diag.warnings.push_back(message);
        emit(EventKind::warning, {{"stage", stage}, {"message", message}});
    };
    auto warn_all = [&](const std::vector<std::string>& messages) {
        for (const auto& m : messages) warn(m);
    };
    // Warnings that synthesis steps recorded straight into the diagnostics.
    auto announce_since = [&](std::size_t from) {
        for (std::size_t i = from; i < diag.warnings.size(); ++i)
            emit(EventKind::warning, {{"stage", stage}, {"message", diag.warnings[i]}});
    };

    try {
        std::optional<std::string> blocked;
        if (normalize_ws(query).empty()) blocked = "empty query";
        else if (engine.moderator)
            if (auto m = llm::moderate_query(query, *engine.moderator, engine.config.moderation_fail_open); !m.allowed)
                blocked = m.reason;
        if (blocked) {
            r.error_stage = stage;
            r.error_message = *blocked;
            out.terminal = EventKind::blocked;
            out.terminal_payload = {{"reason", *blocked}};
            return out;
        }

        stage = "decompose";
        auto dq = decompose(query, *engine.gateway);
        warn_all(dq.warnings);
        emit(EventKind::decomposed, to_json(dq));

        stage = "retrieve";
        auto candidates = retrieve(dq, *engine.index, *engine.embedder, engine.config.retrieval);
        warn_all(candidates.warnings);
        emit(EventKind::retrieved, {{"n_snippets", candidates.snippets.size()}, {"n_abstracts", candidates.abstracts.size()}});

        stage = "rerank";
        auto reranked = rerank_top_k(query, candidates, *engine.scorer, *engine.index, engine.config.rerank);
        warn_all(reranked.warnings);
        emit(EventKind::reranked, {{"k", reranked.retained_k}, {"scorer", reranked.scorer_id}, {"fallback", reranked.fallback}});

        stage = "quotes";
        auto extraction = extract_quotes(query, reranked, *engine.index, *engine.corpus, *engine.gateway,
                                         engine.config.quote_concurrency);
        warn_all(extraction.warnings);
        diag.dropped_quotes = extraction.dropped_fragments;
        diag.discarded_papers = extraction.discarded_papers;
        r.quotes = extraction.quotes;
        emit(EventKind::quotes_extracted, {{"n_quotes", r.quotes.size()},
                                           {"n_papers", extraction.contexts.size()},
                                           {"discarded_papers", extraction.discarded_papers},
                                           {"dropped_fragments", extraction.dropped_fragments}});

        stage = "outline";
        auto outline = plan_outline(query, r.quotes, *engine.gateway);
        warn_all(outline.warnings);
        diag.unassigned_quotes = outline.unassigned_quotes;
        emit(EventKind::outline, to_json(outline));

        std::map<std::string, const Quote*> quote_by_id;
        for (const auto& q : r.quotes) quote_by_id[q.quote_id] = &q;
        std::map<std::string, std::string> abstract_ids;
        for (std::size_t pos = 0; pos < outline.sections.size(); ++pos) {
            stage = "section";
            std::vector<const Quote*> assigned;
            for (const auto& id : outline.sections[pos].quote_ids)
                if (auto it = quote_by_id.find(id); it != quote_by_id.end()) assigned.push_back(it->second);
            auto followed = follow_citations(assigned, *engine.corpus);
            diag.missing_cited_papers += followed.missing;
            auto pool = build_reference_pool(assigned, followed, *engine.corpus, abstract_ids);

            std::size_t mark = diag.warnings.size();
            r.sections.push_back(generate_section(query, outline, pos, r.sections, pool, *engine.gateway, diag));
            announce_since(mark);
            emit(EventKind::section, section_to_json(r.sections.back(), false));

            stage = "table";
            mark = diag.warnings.size();
            auto& section = r.sections.back();
            auto table = generate_table(query, section, cited_papers(section, *engine.corpus), *engine.corpus,
                                        *engine.gateway, engine.config.table, diag);
            announce_since(mark);
            if (table) {
                section.table = std::move(table);
                emit(EventKind::table, to_json(*section.table));
            }
        }
        out.terminal = EventKind::done;
        out.terminal_payload = {{"n_sections", r.sections.size()},
                                {"n_quotes", r.quotes.size()},
                                {"memory_citations", diag.memory_citations}};
    } catch (const std::exception& e) {
        r.error_stage = stage;
        r.error_message = e.what();
        out.terminal = EventKind::error;
        out.terminal_payload = {{"stage", stage}, {"message", e.what()}};
    }
    return out;
}

json replay_sections(const std::vector<ProgressEvent>& events) {
    std::vector<ReportSection> sections;
    for (const auto& e : events) {
        if (e.kind == EventKind::section) {
            sections.push_back(section_from_json(e.payload));
        } else if (e.kind == EventKind::table) {
            auto t = table_from_json(e.payload);
            for (auto& s : sections)
                if (s.position == t.section_position) s.table = t;
        }
    }
    json out = json::array();
    for (const auto& s : sections) out.push_back(section_to_json(s));
    return out;
}

QueryService::QueryService(Engine engine, std::shared_ptr<ReportStore> store, Clock clock, IdGenerator ids)
    : engine_(engine), store_(std::move(store)), clock_(std::move(clock)), ids_(std::move(ids)) {
    if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
    if (!ids_) ids_ = random_report_id;
    if (!engine_.corpus || !engine_.index || !engine_.embedder || !engine_.scorer || !engine_.gateway)
        throw std::invalid_argument("query service needs a corpus, index, embedder, scorer and gateway");
    if (!store_) throw std::invalid_argument("query service needs a report store");
}

std::string QueryService::new_report_id() { return ids_(); }

Report QueryService::run(const std::string& query, const std::string& report_id,
                         const std::function<void(const ProgressEvent&)>& on_event) {
    std::uint64_t seq = 0;
    auto publish = [&](EventKind kind, json payload) {
        ProgressEvent e{report_id, seq++, kind, std::move(payload), format_timestamp(clock_())};
        store_->append_event(e);
        if (on_event) on_event(e);
    };
    auto result = run_pipeline(engine_, query, report_id, publish);
    store_->put_report(report_id, to_json(result.report));
    publish(result.terminal, std::move(result.terminal_payload));
    return std::move(result.report);
}

QueryService::Status QueryService::status(const std::string& report_id) const {
    if (store_->report(report_id)) return Status::finished;
    return store_->exists(report_id) ? Status::running : Status::unknown;
}

json QueryService::get_report(const std::string& report_id) const {
    auto r = store_->report(report_id);
    if (!r) throw NotFound("unknown report " + report_id);
    return *r;
}

std::vector<ProgressEvent> QueryService::events(const std::string& report_id) const {
    if (!store_->exists(report_id)) throw NotFound("unknown report " + report_id);
    return store_->events(report_id);
}

FeedbackRecord QueryService::record_feedback(FeedbackRecord f) {
    f.validate();
    if (!store_->exists(f.report_id)) throw NotFound("unknown report " + f.report_id);
    f.timestamp = format_timestamp(clock_());
    store_->append_feedback(f);
    return f;
}

std::vector<FeedbackRecord> QueryService::feedback(const std::string& report_id) const {
    if (!store_->exists(report_id)) throw NotFound("unknown report " + report_id);
    return store_->feedback(report_id);
}

}  // namespace litqa
