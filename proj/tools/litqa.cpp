#include <CLI11.hpp>

#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

#include "litqa/corpus/chunker.hpp"
#include "litqa/corpus/ingest.hpp"
#include "litqa/eval/eval.hpp"
#include "litqa/llm/scripted.hpp"
#include "litqa/service/config.hpp"
#include "litqa/service/server.hpp"

using namespace litqa;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return json::parse(in);
}

int cmd_ingest(const std::string& input, const std::string& store) {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open " + input);
    auto result = ingest_corpus(in);
    for (const auto& s : result.skipped) std::cerr << input << ":" << s.line << ": skipped: " << s.reason << "\n";
    std::vector<Passage> passages;
    for (const auto& paper : result.corpus.papers()) {
        auto ps = chunk_paper(paper, default_tokenizer());
        passages.insert(passages.end(), ps.begin(), ps.end());
    }
    write_store(store, result.corpus, passages);
    std::cout << json{{"papers", result.corpus.size()}, {"passages", passages.size()}, {"skipped", result.skipped.size()}}.dump()
              << "\n";
    return 0;
}

int cmd_index_build(const std::string& store_dir, const std::string& index_dir, const std::string& embedding) {
    auto store = read_store(store_dir);
    auto provider = make_embedding_provider(json::parse(embedding));
    auto index = HybridIndex::build(store.passages, store.corpus, *provider);
    index.save(index_dir);
    std::cout << json{{"passages", index.size()}, {"provider", index.provider_id()}, {"dimension", index.dimension()}}.dump()
              << "\n";
    return 0;
}

int cmd_index_search(Runtime& rt, const std::string& q, std::size_t k) {
    auto e = rt.embedder().embed_batch(std::vector<std::string>{q}).at(0);
    for (const auto& hit : rt.index().search_hybrid(q, e, {}, k, rt.config().pipeline.retrieval.index))
        std::cout << scored_passage_to_json(hit).dump() << "\n";
    return 0;
}

int cmd_ask(Runtime& rt, const std::string& q, bool markdown, bool quiet) {
    auto store = std::make_shared<FileReportStore>(rt.config().report_dir);
    QueryService service(rt.engine(), store);
    auto report = service.ask(q, [&](const ProgressEvent& e) {
        if (!quiet) std::cerr << to_ndjson(e);
    });
    std::cout << (markdown ? to_markdown(report) : to_json(report).dump(2) + "\n");
    return report.error_stage ? 1 : 0;
}

int cmd_serve(Runtime& rt) {
    const auto& c = rt.config();
    auto store = std::make_shared<FileReportStore>(c.report_dir);
    QueryService service(rt.engine(), store);
    ServerOptions options;
    if (c.webui_dir) options.static_dir = c.webui_dir->string();
    options.health = {{"papers", rt.corpus().size()}, {"passages", rt.index().size()}, {"embedding", rt.index().provider_id()}};
    HttpServer server(service, options);
    int port = server.bind(c.host, c.port);
    if (port <= 0) throw std::runtime_error("cannot bind " + c.host + ":" + std::to_string(c.port));
    spdlog::info("listening on {}:{}", c.host, port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.run();
    g_server = nullptr;
    return 0;
}

std::unique_ptr<eval::AttributionJudge> make_judge(const std::string& spec, std::unique_ptr<llm::Gateway>& gateway,
                                                   const std::string& config_path) {
    if (spec.rfind("scripted:", 0) == 0) {
        auto provider = std::make_shared<llm::ScriptedProvider>(llm::load_script(spec.substr(9)));
        gateway = std::make_unique<llm::Gateway>(provider);
    } else if (spec == "config") {
        auto c = ServiceConfig::load(config_path);
        gateway = std::make_unique<llm::Gateway>(llm::make_chat_provider(c.chat));
    } else {
        throw std::runtime_error("--judge must be scripted:<script> or config");
    }
    return std::make_unique<eval::GatewayJudge>(*gateway);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Literature question answering over a local paper corpus"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("-c,--config", config_path, "Service config JSON (LITQA_* variables override it)")
        ->envname("LITQA_CONFIG");
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    std::string input, store_dir, index_dir, embedding = R"({"kind":"hash","dim":256})", query;
    std::size_t k = 10;

    auto* ingest = app.add_subcommand("ingest", "Validate a JSONL corpus, chunk it and write a store");
    ingest->add_option("input", input, "Papers, one JSON record per line")->required()->check(CLI::ExistingFile);
    ingest->add_option("-o,--store", store_dir, "Output store directory")->required();

    auto* index = app.add_subcommand("index", "Build or query the hybrid index");
    index->require_subcommand(1);
    auto* build = index->add_subcommand("build", "Embed passages and write an index");
    build->add_option("--store", store_dir, "Store directory")->required()->check(CLI::ExistingDirectory);
    build->add_option("-o,--index", index_dir, "Output index directory")->required();
    build->add_option("--embedding", embedding, "Embedding provider spec as JSON")->capture_default_str();
    auto* search = index->add_subcommand("search", "Hybrid search with the configured weights");
    search->add_option("query", query)->required();
    search->add_option("-k", k, "Number of hits")->capture_default_str();

    auto* retrieve_cmd = app.add_subcommand("retrieve", "Decompose a query and print the candidate set");
    retrieve_cmd->add_option("query", query)->required();
    auto* rerank_cmd = app.add_subcommand("rerank", "Retrieve, then rerank and print the kept passages");
    rerank_cmd->add_option("query", query)->required();

    bool markdown = false, quiet = false;
    auto* ask = app.add_subcommand("ask", "Answer a query; progress events go to stderr");
    ask->add_option("query", query)->required();
    auto* fmt = ask->add_option_group("format");
    fmt->add_flag("--json", "Print the report as JSON (default)");
    fmt->add_flag("--markdown", markdown, "Print the report as Markdown");
    fmt->require_option(0, 1);
    ask->add_flag("-q,--quiet", quiet, "Do not print progress events");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string host;
    int port = -1;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    auto* eval_cmd = app.add_subcommand("eval", "Retrieval metrics, weight sweeps and citation scores");
    eval_cmd->require_subcommand(1);
    std::string labels, runs, queries, grid = "0:1:0.1", report_path, judge_spec;
    bool binary = false, cited_only = false;
    int threshold = 1;
    auto* eval_retrieval = eval_cmd->add_subcommand("retrieval", "nDCG@k and mRR of stored rankings");
    eval_retrieval->add_option("--labels", labels, "{query_id, passage_id, grade} lines")->required()->check(CLI::ExistingFile);
    eval_retrieval->add_option("--runs", runs, "{query_id, ranking} lines")->required()->check(CLI::ExistingFile);
    eval_retrieval->add_option("-k", k, "nDCG cutoff")->capture_default_str();
    eval_retrieval->add_option("--threshold", threshold, "Minimum grade counted as relevant by mRR")->capture_default_str();
    eval_retrieval->add_flag("--binary", binary, "Labels are 0/1");
    auto* eval_sweep = eval_cmd->add_subcommand("sweep", "Score hybrid search over a grid of dense weights");
    eval_sweep->add_option("--queries", queries, "{query_id, text} lines")->required()->check(CLI::ExistingFile);
    eval_sweep->add_option("--labels", labels)->required()->check(CLI::ExistingFile);
    eval_sweep->add_option("--grid", grid, "start:stop:step or a comma list")->capture_default_str();
    eval_sweep->add_option("-k", k, "nDCG cutoff")->capture_default_str();
    eval_sweep->add_flag("--binary", binary, "Labels are 0/1");
    auto* eval_cite = eval_cmd->add_subcommand("cite", "Citation precision and recall of a report");
    eval_cite->add_option("--report", report_path, "Report JSON")->required()->check(CLI::ExistingFile);
    eval_cite->add_option("--judge", judge_spec, "scripted:<script.json> or config")->required();
    eval_cite->add_flag("--cited-only", cited_only, "Leave uncited sentences out of recall");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
    if (serve->parsed()) spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (ingest->parsed()) return cmd_ingest(input, store_dir);
        if (build->parsed()) return cmd_index_build(store_dir, index_dir, embedding);
        if (eval_retrieval->parsed()) {
            auto scheme = binary ? eval::GradeScheme::binary : eval::GradeScheme::graded;
            auto s = eval::evaluate_runs(eval::load_runs(runs), eval::load_labels(labels, scheme), k, threshold);
            json per = json::array();
            for (const auto& q : s.per_query) per.push_back({{"query_id", q.query_id}, {"ndcg", q.ndcg}, {"rr", q.reciprocal_rank}});
            std::cout << json{{"ndcg", s.ndcg}, {"mrr", s.mrr}, {"k", k}, {"per_query", per}}.dump(2) << "\n";
            return 0;
        }
        if (eval_cite->parsed()) {
            std::unique_ptr<llm::Gateway> gateway;
            auto judge = make_judge(judge_spec, gateway, config_path);
            auto report = report_from_json(read_json_file(report_path));
            eval::CitationOptions options;
            options.cited_only = cited_only;
            std::cout << eval::to_json(eval::citation_scores(report, *judge, options)).dump(2) << "\n";
            return 0;
        }

        auto config = ServiceConfig::load(config_path);
        if (!host.empty()) config.host = host;
        if (port >= 0) config.port = port;
        Runtime rt(std::move(config));
        if (search->parsed()) return cmd_index_search(rt, query, k);
        if (retrieve_cmd->parsed() || rerank_cmd->parsed()) {
            auto dq = decompose(query, rt.gateway());
            auto candidates = retrieve(dq, rt.index(), rt.embedder(), rt.config().pipeline.retrieval);
            if (retrieve_cmd->parsed()) {
                std::cout << json{{"decomposed", to_json(dq)}, {"candidates", to_json(candidates)}}.dump(2) << "\n";
            } else {
                auto reranked = rerank_top_k(query, candidates, rt.scorer(), rt.index(), rt.config().pipeline.rerank);
                std::cout << to_json(reranked).dump(2) << "\n";
            }
            return 0;
        }
        if (ask->parsed()) return cmd_ask(rt, query, markdown, quiet);
        if (serve->parsed()) return cmd_serve(rt);
        if (eval_sweep->parsed()) {
            std::ifstream in(queries);
            auto dev = eval::parse_queries(in);
            auto scheme = binary ? eval::GradeScheme::binary : eval::GradeScheme::graded;
            eval::SweepOptions options;
            options.k = k;
            options.base = rt.config().pipeline.retrieval.index;
            auto r = eval::sweep_weights(dev, eval::load_labels(labels, scheme), rt.index(), rt.embedder(),
                                         eval::parse_grid(grid), options);
            std::cout << eval::to_json(r).dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "litqa: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
