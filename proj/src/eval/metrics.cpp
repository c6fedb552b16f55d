#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "litqa/eval/eval.hpp"

namespace litqa::eval {

using nlohmann::json;

namespace {

template <class F>
void each_json_line(std::istream& in, const char* what, F f) {
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            f(json::parse(line));
        } catch (const EvalError& e) {
            throw EvalError(std::string(what) + " line " + std::to_string(n) + ": " + e.what());
        } catch (const json::exception& e) {
            throw EvalError(std::string(what) + " line " + std::to_string(n) + ": " + e.what());
        }
    }
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot open " + path.string());
    return in;
}

int grade_of(const Grades& grades, const std::string& id) {
    auto it = grades.find(id);
    return it == grades.end() ? 0 : it->second;
}

double gain(int grade, std::size_t i) { return (std::exp2(double(grade)) - 1.0) / std::log2(double(i) + 2.0); }

double reciprocal_rank(const std::vector<std::string>& ranking, const Grades& grades, int threshold) {
    for (std::size_t i = 0; i < ranking.size(); ++i)
        if (grade_of(grades, ranking[i]) >= threshold) return 1.0 / double(i + 1);
    return 0.0;
}

}  // namespace

LabelSet parse_labels(std::istream& in, GradeScheme scheme) {
    const int top = scheme == GradeScheme::graded ? 3 : 1;
    LabelSet out;
    each_json_line(in, "labels", [&](const json& j) {
        RelevanceLabel l{j.at("query_id").get<std::string>(), j.at("passage_id").get<std::string>(),
                         j.at("grade").get<int>()};
        if (l.grade < 0 || l.grade > top)
            throw EvalError("grade " + std::to_string(l.grade) + " outside 0.." + std::to_string(top));
        if (!out[l.query_id].emplace(l.passage_id, l.grade).second)
            throw EvalError("duplicate label for " + l.query_id + "/" + l.passage_id);
    });
    return out;
}

LabelSet load_labels(const std::filesystem::path& path, GradeScheme scheme) {
    auto in = open(path);
    return parse_labels(in, scheme);
}

RunSet parse_runs(std::istream& in) {
    RunSet out;
    each_json_line(in, "runs", [&](const json& j) {
        auto id = j.at("query_id").get<std::string>();
        if (!out.emplace(id, j.at("ranking").get<std::vector<std::string>>()).second)
            throw EvalError("duplicate run for " + id);
    });
    return out;
}

RunSet load_runs(const std::filesystem::path& path) {
    auto in = open(path);
    return parse_runs(in);
}

std::vector<DevQuery> parse_queries(std::istream& in) {
    std::vector<DevQuery> out;
    each_json_line(in, "queries", [&](const json& j) {
        out.push_back({j.at("query_id").get<std::string>(), j.at("text").get<std::string>()});
    });
    return out;
}

double ndcg_at_k(const std::vector<std::string>& ranking, const Grades& grades, std::size_t k) {
    if (k < 1) throw EvalError("nDCG cutoff must be at least 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) dcg += gain(grade_of(grades, ranking[i]), i);
    std::vector<int> ideal;
    for (const auto& [_, g] : grades) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) idcg += gain(ideal[i], i);
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

double mrr(const std::vector<std::vector<std::string>>& rankings, const std::vector<Grades>& grades,
           int relevant_threshold) {
    if (rankings.size() != grades.size()) throw EvalError("mrr: one grade map per ranking");
    if (rankings.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t q = 0; q < rankings.size(); ++q) sum += reciprocal_rank(rankings[q], grades[q], relevant_threshold);
    return sum / double(rankings.size());
}

RetrievalScores evaluate_runs(const RunSet& runs, const LabelSet& labels, std::size_t k, int relevant_threshold) {
    RetrievalScores out;
    static const std::vector<std::string> none;
    for (const auto& [qid, grades] : labels) {
        auto it = runs.find(qid);
        const auto& ranking = it == runs.end() ? none : it->second;
        QueryScore s{qid, ndcg_at_k(ranking, grades, k), reciprocal_rank(ranking, grades, relevant_threshold)};
        out.ndcg += s.ndcg;
        out.mrr += s.reciprocal_rank;
        out.per_query.push_back(s);
    }
    if (!labels.empty()) {
        out.ndcg /= double(labels.size());
        out.mrr /= double(labels.size());
    }
    return out;
}

std::vector<double> parse_grid(const std::string& spec) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v)) throw EvalError("bad grid value '" + s + "' in " + spec);
        return v;
    };
    auto round9 = [](double v) { return std::round(v * 1e9) / 1e9; };
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw EvalError("grid range must be start:stop:step, got " + spec);
        double start = number(parts[0]), stop = number(parts[1]), step = number(parts[2]);
        if (step <= 0 || stop < start) throw EvalError("grid range needs step > 0 and stop >= start: " + spec);
        auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) out.push_back(round9(start + double(i) * step));
    } else {
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    }
    if (out.empty()) throw EvalError("empty weight grid");
    return out;
}

json to_json(const SweepResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back({{"w_dense", row.w_dense}, {"ndcg", row.ndcg}, {"mrr", row.mrr}});
    json best = r.rows.empty() ? json(nullptr) : rows[r.argmax];
    return {{"rows", rows}, {"argmax", best}};
}

SweepResult sweep_weights(const std::vector<DevQuery>& queries, const LabelSet& labels, const HybridIndex& index,
                          EmbeddingProvider& embedder, const std::vector<double>& grid, const SweepOptions& options) {
    if (grid.empty()) throw EvalError("empty weight grid");
    for (double w : grid)
        if (!(w >= 0.0 && w <= 1.0)) throw EvalError("w_dense " + std::to_string(w) + " outside [0, 1]");

    std::vector<std::string> texts;
    for (const auto& q : queries) texts.push_back(q.text);
    auto embeddings = texts.empty() ? std::vector<Embedding>{} : embedder.embed_batch(texts);

    SweepResult out;
    for (double w : grid) {
        IndexConfig config = options.base;
        config.w_dense = w;
        config.w_sparse = 1.0 - w;
        RunSet runs;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto hits = index.search_hybrid(queries[i].text, embeddings[i], {}, options.depth, config);
            auto& ranking = runs[queries[i].query_id];
            for (const auto& h : hits) ranking.push_back(h.passage_id);
        }
        LabelSet asked;
        for (const auto& q : queries)
            if (auto it = labels.find(q.query_id); it != labels.end()) asked.insert(*it);
        auto scores = evaluate_runs(runs, asked, options.k, options.relevant_threshold);
        out.rows.push_back({w, scores.ndcg, scores.mrr});
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const auto& a = out.rows[i];
        const auto& b = out.rows[out.argmax];
        if (a.ndcg > b.ndcg || (a.ndcg == b.ndcg && a.mrr > b.mrr)) out.argmax = i;
    }
    return out;
}

}  // namespace litqa::eval
