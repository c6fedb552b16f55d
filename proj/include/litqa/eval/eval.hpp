#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/embedding/embedding.hpp"
#include "litqa/index/hybrid_index.hpp"
#include "litqa/llm/gateway.hpp"
#include "litqa/synthesis/report.hpp"

namespace litqa::eval {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class GradeScheme { graded, binary };  // 0..3 or 0..1

struct RelevanceLabel {
    std::string query_id;
    std::string passage_id;
    int grade = 0;
};

using Grades = std::map<std::string, int>;      // passage_id -> grade
using LabelSet = std::map<std::string, Grades>;  // query_id -> grades
using RunSet = std::map<std::string, std::vector<std::string>>;  // query_id -> ranking

/// Line-delimited {query_id, passage_id, grade}. Blank lines are skipped.
/// Throws EvalError naming the line for bad JSON, out-of-range grades or a
/// repeated (query_id, passage_id) pair.
LabelSet parse_labels(std::istream& in, GradeScheme scheme = GradeScheme::graded);
LabelSet load_labels(const std::filesystem::path& path, GradeScheme scheme = GradeScheme::graded);

/// Line-delimited {query_id, ranking: [passage_id...]}.
RunSet parse_runs(std::istream& in);
RunSet load_runs(const std::filesystem::path& path);

/// Graded nDCG with gain 2^g - 1 and log2(i + 1) discount. Unlabelled items
/// have grade 0; an ideal DCG of 0 gives 0. Throws EvalError for k < 1.
double ndcg_at_k(const std::vector<std::string>& ranking, const Grades& grades, std::size_t k = 10);

/// Mean reciprocal rank of the first item with grade >= threshold, 0 for a
/// query without one. An empty query list gives 0.
double mrr(const std::vector<std::vector<std::string>>& rankings, const std::vector<Grades>& grades,
           int relevant_threshold = 1);

struct QueryScore {
    std::string query_id;
    double ndcg = 0.0;
    double reciprocal_rank = 0.0;
};

struct RetrievalScores {
    double ndcg = 0.0;  // mean over labelled queries
    double mrr = 0.0;
    std::vector<QueryScore> per_query;
};

/// Scores every labelled query; a query without a run counts as an empty ranking.
RetrievalScores evaluate_runs(const RunSet& runs, const LabelSet& labels, std::size_t k = 10,
                              int relevant_threshold = 1);

struct DevQuery {
    std::string query_id;
    std::string text;
};

/// Line-delimited {query_id, text}.
std::vector<DevQuery> parse_queries(std::istream& in);

struct SweepOptions {
    std::size_t k = 10;
    std::size_t depth = 100;  // ranking depth passed to search_hybrid
    int relevant_threshold = 1;
    IndexConfig base;  // BM25 and candidate settings; weights are overridden
};

struct SweepRow {
    double w_dense = 0.0;
    double ndcg = 0.0;
    double mrr = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // grid order
    std::size_t argmax = 0;      // best nDCG, then best mRR, then first
};

nlohmann::json to_json(const SweepResult& r);

/// "start:stop:step" (inclusive, step > 0) or a comma list. Values are
/// rounded to 1e-9 so 0:1:0.1 yields exactly 0.1, 0.2, ...
std::vector<double> parse_grid(const std::string& spec);

/// Reruns search_hybrid over every dev query for each w_dense in the grid
/// (w_sparse = 1 - w_dense) and scores the rankings. Throws EvalError for an
/// empty grid or a weight outside [0, 1].
SweepResult sweep_weights(const std::vector<DevQuery>& queries, const LabelSet& labels, const HybridIndex& index,
                          EmbeddingProvider& embedder, const std::vector<double>& grid,
                          const SweepOptions& options = {});

enum class Verdict { attributable, contradictory, extrapolatory };
const char* to_string(Verdict v);
/// Case-insensitive; nullopt for anything else.
std::optional<Verdict> verdict_from_string(std::string_view s);

/// Decides whether `evidence` supports `claim`. Must be safe to call concurrently.
class AttributionJudge {
public:
    virtual ~AttributionJudge() = default;
    virtual Verdict judge(const std::string& claim, const std::string& evidence) = 0;
};

/// Uses the attribution_judge template and reads {"output": verdict}.
class GatewayJudge final : public AttributionJudge {
public:
    explicit GatewayJudge(llm::Gateway& gateway) : gateway_(gateway) {}
    Verdict judge(const std::string& claim, const std::string& evidence) override;

private:
    llm::Gateway& gateway_;
};

struct CitationOptions {
    bool cited_only = false;  // drop uncited claims from the recall denominator
    std::size_t max_concurrency = 8;
};

struct ClaimResult {
    std::size_t section = 0;
    std::string claim;
    std::vector<std::string> markers;
    std::vector<Verdict> citation_verdicts;  // one per marker
    Verdict support = Verdict::extrapolatory;  // all evidence together
};

struct CitationScores {
    double precision = 0.0;
    double recall = 0.0;
    std::size_t claims = 0;
    std::size_t cited_claims = 0;
    std::size_t supported_claims = 0;
    std::size_t pairs = 0;
    std::size_t attributable_pairs = 0;
    std::vector<ClaimResult> details;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const CitationScores& s);

/// Every sentence of every non-failed section body is a claim; markers that
/// trail a sentence on their own belong to the sentence before. Model-memory
/// citations are never attributable and are not sent to the judge. A judge
/// exception counts as Extrapolatory and adds a warning.
CitationScores citation_scores(const Report& report, AttributionJudge& judge, const CitationOptions& options = {});

/// Asks the relevance_label template whether `text` answers `query`.
/// The first digit 0..3 in the reply is the grade; anything else throws
/// llm::MalformedOutput.
int label_relevance(llm::Gateway& gateway, const std::string& query, const std::string& text);

}  // namespace litqa::eval
