#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "litqa/corpus/types.hpp"
#include "litqa/embedding/embedding.hpp"

namespace litqa {

struct MetadataFilter {
    std::optional<int> year_min;
    std::optional<int> year_max;
    std::optional<std::set<std::string>> venues;
    std::optional<std::set<std::string>> fields_of_study;

    bool empty() const { return !year_min && !year_max && !venues && !fields_of_study; }
    /// Throws std::invalid_argument when year_min > year_max.
    void validate() const;
    /// Venue and field-of-study matching ignores ASCII case. A paper with no
    /// year never satisfies an active year clause.
    bool accepts(std::optional<int> year, const std::optional<std::string>& venue,
                 const std::set<std::string>& fields_of_study) const;
};

struct IndexConfig {
    double w_dense = 0.6;
    double w_sparse = 0.4;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
    std::size_t candidate_pool_per_arm = 512;
    // Every filtered passage is a candidate of both arms.
    bool exhaustive = true;

    /// Throws std::invalid_argument unless weights are non-negative and sum to 1.
    void validate() const;
};

enum class Provenance { dense, sparse, both };
const char* to_string(Provenance p);

struct ScoredPassage {
    std::string passage_id;
    std::string paper_id;
    double dense_score = 0.0;
    double sparse_score_raw = 0.0;
    double sparse_score_norm = 0.0;
    double fused_score = 0.0;
    Provenance provenance = Provenance::dense;
};

namespace kinds {
constexpr std::uint8_t title = 1;
constexpr std::uint8_t abstract = 2;
constexpr std::uint8_t body = 4;
constexpr std::uint8_t all = title | abstract | body;
constexpr std::uint8_t bit(PassageKind k) {
    return k == PassageKind::title ? title : k == PassageKind::abstract ? abstract : body;
}
}  // namespace kinds

struct SearchRequest {
    std::string sparse_text;
    std::optional<Embedding> dense_query;  // absent disables the dense arm
    MetadataFilter filter;
    std::size_t k = 10;
    std::uint8_t kinds = kinds::all;
    bool use_sparse = true;
};

class IndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (s - min) / (max - min); all zeros when max == min. Throws
/// std::invalid_argument on an empty list.
std::vector<double> minmax_normalize(std::span<const double> scores);

inline double fuse_scores(double dense, double sparse_norm, const IndexConfig& config) {
    return config.w_dense * dense + config.w_sparse * sparse_norm;
}

/// Sparse BM25 arm plus dense binary-code arm over one passage set.
/// Immutable once built; safe for concurrent searches.
class HybridIndex {
public:
    HybridIndex() = default;

    /// Embeds and indexes `passages`. Every passage's paper must be in `corpus`
    /// and passage ids must be unique. Embedding failures propagate as
    /// EmbeddingError naming the failing batch.
    static HybridIndex build(std::vector<Passage> passages, const Corpus& corpus, EmbeddingProvider& provider,
                             const IndexConfig& config = {});

    std::size_t size() const { return passages_.size(); }
    std::size_t dense_size() const { return code_words_ == 0 ? 0 : codes_.size() / code_words_; }
    std::size_t sparse_size() const { return doc_len_.size(); }
    std::size_t dimension() const { return codes_dim_; }
    const std::string& provider_id() const { return provider_id_; }

    const std::vector<Passage>& passages() const { return passages_; }
    const Passage* find(const std::string& passage_id) const;
    const Passage& passage(const std::string& passage_id) const;
    BinaryCode code(std::size_t doc) const;

    std::size_t doc_freq(const std::string& term) const;
    std::size_t doc_length(std::size_t doc) const { return doc_len_.at(doc); }
    double avg_doc_length() const { return avg_len_; }

    /// Okapi BM25 of `query_terms` (duplicates summed) against one passage.
    /// Throws IndexError for an unknown id.
    double bm25_score(std::span<const std::string> query_terms, const std::string& passage_id,
                      const IndexConfig& config = {}) const;

    /// Union of dense and sparse candidates after filtering, sparse scores
    /// min-max normalized over the union, fused with the configured weights,
    /// top-k by fused score (ties: ascending passage_id).
    std::vector<ScoredPassage> search_hybrid(const std::string& query_text, const Embedding& query_embedding,
                                             const MetadataFilter& filter, std::size_t k,
                                             const IndexConfig& config = {}) const;

    std::vector<ScoredPassage> search(const SearchRequest& request, const IndexConfig& config = {}) const;

    void save(const std::filesystem::path& dir) const;
    static HybridIndex load(const std::filesystem::path& dir);

private:
    struct PaperMeta {
        std::optional<int> year;
        std::optional<std::string> venue;
        std::set<std::string> fields_of_study;
    };
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    double idf(std::size_t df) const;
    std::vector<std::uint32_t> filtered_docs(const MetadataFilter& filter, std::uint8_t kinds) const;

    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::uint32_t> doc_by_id_;
    std::vector<std::uint32_t> doc_paper_;  // index into papers_
    std::vector<std::string> paper_ids_;
    std::vector<PaperMeta> papers_;

    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_len_;
    double avg_len_ = 0.0;

    std::string provider_id_;
    std::size_t codes_dim_ = 0;
    std::size_t code_words_ = 0;
    std::vector<std::uint64_t> codes_;  // passages_.size() * code_words_
};

}  // namespace litqa
