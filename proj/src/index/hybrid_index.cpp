#include "litqa/index/hybrid_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "litqa/corpus/tokenizer.hpp"
#include "litqa/kernels/kernels.hpp"

namespace litqa {

namespace {

bool iequals(const std::string& a, const std::string& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

bool contains_ci(const std::set<std::string>& set, const std::string& v) {
    return std::any_of(set.begin(), set.end(), [&](const std::string& s) { return iequals(s, v); });
}

// Descending score, then ascending passage id.
struct RankOrder {
    const std::vector<Passage>* passages;
    const std::vector<double>* scores;
    bool operator()(std::uint32_t a, std::uint32_t b) const {
        double sa = (*scores)[a], sb = (*scores)[b];
        if (sa != sb) return sa > sb;
        return (*passages)[a].passage_id < (*passages)[b].passage_id;
    }
};

}  // namespace

void MetadataFilter::validate() const {
    if (year_min && year_max && *year_min > *year_max)
        throw std::invalid_argument("year range min " + std::to_string(*year_min) + " exceeds max " +
                                    std::to_string(*year_max));
}

bool MetadataFilter::accepts(std::optional<int> year, const std::optional<std::string>& venue,
                             const std::set<std::string>& fos) const {
    if (year_min || year_max) {
        if (!year) return false;
        if (year_min && *year < *year_min) return false;
        if (year_max && *year > *year_max) return false;
    }
    if (venues && !venues->empty()) {
        if (!venue || !contains_ci(*venues, *venue)) return false;
    }
    if (fields_of_study && !fields_of_study->empty()) {
        bool any = std::any_of(fos.begin(), fos.end(), [&](const std::string& f) { return contains_ci(*fields_of_study, f); });
        if (!any) return false;
    }
    return true;
}

void IndexConfig::validate() const {
    if (w_dense < 0.0 || w_sparse < 0.0) throw std::invalid_argument("fusion weights must be non-negative");
    if (std::abs(w_dense + w_sparse - 1.0) > 1e-9) throw std::invalid_argument("fusion weights must sum to 1");
    if (bm25_k1 < 0.0 || bm25_b < 0.0 || bm25_b > 1.0) throw std::invalid_argument("bad BM25 parameters");
}

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::dense: return "dense";
        case Provenance::sparse: return "sparse";
        case Provenance::both: return "both";
    }
    return "dense";
}

std::vector<double> minmax_normalize(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("minmax_normalize: empty score list");
    auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    double min = *lo, max = *hi;
    std::vector<double> out(scores.size(), 0.0);
    if (max == min) return out;
    double range = max - min;
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - min) / range;
    return out;
}

HybridIndex HybridIndex::build(std::vector<Passage> passages, const Corpus& corpus, EmbeddingProvider& provider,
                               const IndexConfig& config) {
    config.validate();
    HybridIndex idx;
    idx.provider_id_ = provider.id();
    idx.codes_dim_ = provider.dimension();
    idx.code_words_ = kernels::words_for(idx.codes_dim_);
    idx.passages_ = std::move(passages);

    std::map<std::string, std::uint32_t> paper_slot;
    idx.doc_len_.reserve(idx.passages_.size());
    std::uint64_t total_len = 0;
    for (std::uint32_t d = 0; d < idx.passages_.size(); ++d) {
        const Passage& p = idx.passages_[d];
        if (!idx.doc_by_id_.emplace(p.passage_id, d).second)
            throw IndexError("duplicate passage_id \"" + p.passage_id + "\"");
        auto it = paper_slot.find(p.paper_id);
        if (it == paper_slot.end()) {
            const Paper* paper = corpus.find(p.paper_id);
            if (!paper) throw IndexError("passage \"" + p.passage_id + "\" refers to unknown paper \"" + p.paper_id + "\"");
            it = paper_slot.emplace(p.paper_id, static_cast<std::uint32_t>(idx.papers_.size())).first;
            idx.paper_ids_.push_back(p.paper_id);
            idx.papers_.push_back({paper->year, paper->venue, paper->fields_of_study});
        }
        idx.doc_paper_.push_back(it->second);

        auto terms = index_terms(p.text);
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : terms) ++tf[t];
        for (auto& [term, count] : tf) idx.postings_[term].push_back({d, count});
        idx.doc_len_.push_back(static_cast<std::uint32_t>(terms.size()));
        total_len += terms.size();
    }
    idx.avg_len_ = idx.passages_.empty() ? 0.0 : static_cast<double>(total_len) / idx.passages_.size();

    if (!idx.passages_.empty()) {
        std::vector<std::string> texts;
        texts.reserve(idx.passages_.size());
        for (const auto& p : idx.passages_) texts.push_back(p.text);
        auto embeddings = embed(texts, provider);
        idx.codes_.assign(idx.passages_.size() * idx.code_words_, 0);
        for (std::size_t d = 0; d < embeddings.size(); ++d) {
            auto code = quantize_binary(embeddings[d]);
            std::copy(code.words.begin(), code.words.end(), idx.codes_.begin() + d * idx.code_words_);
        }
    }
    return idx;
}

const Passage* HybridIndex::find(const std::string& passage_id) const {
    auto it = doc_by_id_.find(passage_id);
    return it == doc_by_id_.end() ? nullptr : &passages_[it->second];
}

const Passage& HybridIndex::passage(const std::string& passage_id) const {
    const Passage* p = find(passage_id);
    if (!p) throw IndexError("unknown passage_id \"" + passage_id + "\"");
    return *p;
}

BinaryCode HybridIndex::code(std::size_t doc) const {
    BinaryCode c;
    c.dim = codes_dim_;
    c.words.assign(codes_.begin() + doc * code_words_, codes_.begin() + (doc + 1) * code_words_);
    return c;
}

std::size_t HybridIndex::doc_freq(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

double HybridIndex::idf(std::size_t df) const {
    double n = static_cast<double>(passages_.size());
    double f = static_cast<double>(df);
    return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

double HybridIndex::bm25_score(std::span<const std::string> query_terms, const std::string& passage_id,
                               const IndexConfig& config) const {
    auto it = doc_by_id_.find(passage_id);
    if (it == doc_by_id_.end()) throw IndexError("unknown passage_id \"" + passage_id + "\"");
    const std::uint32_t doc = it->second;
    const double len_norm = avg_len_ > 0.0 ? doc_len_[doc] / avg_len_ : 0.0;
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        const auto& list = pit->second;
        auto hit = std::lower_bound(list.begin(), list.end(), doc,
                                    [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (hit == list.end() || hit->doc != doc) continue;
        double tf = hit->tf;
        score += idf(list.size()) * tf * (config.bm25_k1 + 1.0) /
                 (tf + config.bm25_k1 * (1.0 - config.bm25_b + config.bm25_b * len_norm));
    }
    return score;
}

std::vector<std::uint32_t> HybridIndex::filtered_docs(const MetadataFilter& filter, std::uint8_t kind_mask) const {
    std::vector<char> paper_ok(papers_.size());
    for (std::size_t i = 0; i < papers_.size(); ++i)
        paper_ok[i] = filter.accepts(papers_[i].year, papers_[i].venue, papers_[i].fields_of_study);
    std::vector<std::uint32_t> out;
    for (std::uint32_t d = 0; d < passages_.size(); ++d)
        if (paper_ok[doc_paper_[d]] && (kinds::bit(passages_[d].kind) & kind_mask)) out.push_back(d);
    return out;
}

std::vector<ScoredPassage> HybridIndex::search_hybrid(const std::string& query_text, const Embedding& query_embedding,
                                                      const MetadataFilter& filter, std::size_t k,
                                                      const IndexConfig& config) const {
    SearchRequest req;
    req.sparse_text = query_text;
    req.dense_query = query_embedding;
    req.filter = filter;
    req.k = k;
    return search(req, config);
}

std::vector<ScoredPassage> HybridIndex::search(const SearchRequest& req, const IndexConfig& config) const {
    config.validate();
    req.filter.validate();
    if (req.k == 0 || passages_.empty()) return {};

    const auto docs = filtered_docs(req.filter, req.kinds);
    if (docs.empty()) return {};

    const std::size_t n = passages_.size();
    std::vector<double> dense(n, 0.0);
    std::vector<double> sparse(n, 0.0);
    std::vector<char> in_dense(n, 0), in_sparse(n, 0);

    if (req.dense_query) {
        const Embedding& q = *req.dense_query;
        if (q.size() != codes_dim_)
            throw DimensionMismatch("query dimension " + std::to_string(q.size()) + " != index dimension " +
                                    std::to_string(codes_dim_));
        const double norm = l2_norm(q) * std::sqrt(static_cast<double>(codes_dim_));
        const auto& kern = kernels::active();
        for (auto d : docs) {
            double dot = kern.signed_dot(q.data(), codes_.data() + d * code_words_, codes_dim_);
            dense[d] = norm > 0.0 ? dot / norm : 0.0;
        }
        std::vector<std::uint32_t> pool = docs;
        std::size_t take = config.exhaustive ? pool.size() : std::min(pool.size(), config.candidate_pool_per_arm);
        std::partial_sort(pool.begin(), pool.begin() + take, pool.end(), RankOrder{&passages_, &dense});
        for (std::size_t i = 0; i < take; ++i) in_dense[pool[i]] = 1;
    }

    if (req.use_sparse) {
        std::vector<char> allowed(n, 0);
        for (auto d : docs) allowed[d] = 1;
        std::vector<std::uint32_t> touched;
        const auto terms = index_terms(req.sparse_text);
        for (const auto& term : terms) {
            auto pit = postings_.find(term);
            if (pit == postings_.end()) continue;
            const double w = idf(pit->second.size());
            for (const auto& post : pit->second) {
                if (!allowed[post.doc]) continue;
                double tf = post.tf;
                double len_norm = avg_len_ > 0.0 ? doc_len_[post.doc] / avg_len_ : 0.0;
                if (sparse[post.doc] == 0.0) touched.push_back(post.doc);
                sparse[post.doc] += w * tf * (config.bm25_k1 + 1.0) /
                                    (tf + config.bm25_k1 * (1.0 - config.bm25_b + config.bm25_b * len_norm));
            }
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        std::erase_if(touched, [&](std::uint32_t d) { return !(sparse[d] > 0.0); });
        std::size_t take = config.exhaustive ? touched.size() : std::min(touched.size(), config.candidate_pool_per_arm);
        std::partial_sort(touched.begin(), touched.begin() + take, touched.end(), RankOrder{&passages_, &sparse});
        for (std::size_t i = 0; i < take; ++i) in_sparse[touched[i]] = 1;
    }

    std::vector<std::uint32_t> uni;
    for (auto d : docs)
        if (in_dense[d] || in_sparse[d]) uni.push_back(d);
    if (uni.empty()) return {};

    std::vector<double> raw(uni.size());
    for (std::size_t i = 0; i < uni.size(); ++i) raw[i] = in_sparse[uni[i]] ? sparse[uni[i]] : 0.0;
    const auto norm = minmax_normalize(raw);

    std::vector<double> fused(n, 0.0);
    for (std::size_t i = 0; i < uni.size(); ++i)
        fused[uni[i]] = fuse_scores(dense[uni[i]], norm[i], config);

    std::vector<std::size_t> order(uni.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(req.k, uni.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](std::size_t a, std::size_t b) {
        return RankOrder{&passages_, &fused}(uni[a], uni[b]);
    });

    std::vector<ScoredPassage> out;
    out.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        std::size_t i = order[r];
        std::uint32_t d = uni[i];
        ScoredPassage sp;
        sp.passage_id = passages_[d].passage_id;
        sp.paper_id = passages_[d].paper_id;
        sp.dense_score = dense[d];
        sp.sparse_score_raw = raw[i];
        sp.sparse_score_norm = norm[i];
        sp.fused_score = fused[d];
        sp.provenance = in_dense[d] && in_sparse[d] ? Provenance::both
                        : in_sparse[d]              ? Provenance::sparse
                                                    : Provenance::dense;
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace litqa
