// On-disk layout of a HybridIndex directory. All integers little-endian,
// strings are u32 length + bytes.
//
//   stats.bin     "LQASTAT\0" u32 version
//                 u64 n_papers  { str id, u8 has_year, i32 year, u8 has_venue, str venue,
//                                 u32 n_fos, str fos... }
//                 u64 n_passages { str passage_json, u32 paper_slot, u32 doc_len }
//                 f64 avg_len
//   postings.bin  "LQAPOST\0" u32 version
//                 u64 n_terms { str term, u32 df, (u32 doc, u32 tf) * df }   terms sorted
//   codes.bin     "LQACODE\0" u32 version  str provider_id  u64 dim  u64 words  u64 n
//                 u64 * (words * n)

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "litqa/corpus/ingest.hpp"
#include "litqa/index/hybrid_index.hpp"

namespace litqa {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr char kStatsMagic[8] = {'L', 'Q', 'A', 'S', 'T', 'A', 'T', '\0'};
constexpr char kPostingsMagic[8] = {'L', 'Q', 'A', 'P', 'O', 'S', 'T', '\0'};
constexpr char kCodesMagic[8] = {'L', 'Q', 'A', 'C', 'O', 'D', 'E', '\0'};

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
        if (!out_) throw IndexError("cannot write " + path.string());
    }
    void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    template <typename T>
    void pod(T v) {
        raw(&v, sizeof(T));
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void header(const char (&magic)[8]) {
        raw(magic, 8);
        pod(kFormatVersion);
    }
    void finish() {
        out_.flush();
        if (!out_) throw IndexError("failed writing " + path_.string());
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IndexError("cannot open " + path.string());
    }
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in_) throw IndexError("truncated index file " + path_.string());
    }
    template <typename T>
    T pod() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
    std::string str() {
        auto n = pod<std::uint32_t>();
        std::string s(n, '\0');
        if (n) raw(s.data(), n);
        return s;
    }
    void header(const char (&magic)[8]) {
        char got[8];
        raw(got, 8);
        if (std::memcmp(got, magic, 8) != 0) throw IndexError("bad magic in " + path_.string());
        auto v = pod<std::uint32_t>();
        if (v != kFormatVersion)
            throw IndexError("unsupported index format version " + std::to_string(v) + " in " + path_.string());
    }

private:
    std::ifstream in_;
    std::filesystem::path path_;
};

}  // namespace

void HybridIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        Writer w(dir / "stats.bin");
        w.header(kStatsMagic);
        w.pod(static_cast<std::uint64_t>(papers_.size()));
        for (std::size_t i = 0; i < papers_.size(); ++i) {
            const auto& m = papers_[i];
            w.str(paper_ids_[i]);
            w.pod(static_cast<std::uint8_t>(m.year.has_value()));
            w.pod(static_cast<std::int32_t>(m.year.value_or(0)));
            w.pod(static_cast<std::uint8_t>(m.venue.has_value()));
            w.str(m.venue.value_or(""));
            w.pod(static_cast<std::uint32_t>(m.fields_of_study.size()));
            for (const auto& f : m.fields_of_study) w.str(f);
        }
        w.pod(static_cast<std::uint64_t>(passages_.size()));
        for (std::size_t d = 0; d < passages_.size(); ++d) {
            w.str(passage_to_json(passages_[d]).dump());
            w.pod(doc_paper_[d]);
            w.pod(doc_len_[d]);
        }
        w.pod(avg_len_);
        w.finish();
    }
    {
        Writer w(dir / "postings.bin");
        w.header(kPostingsMagic);
        std::vector<const std::string*> terms;
        terms.reserve(postings_.size());
        for (const auto& [t, _] : postings_) terms.push_back(&t);
        std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
        w.pod(static_cast<std::uint64_t>(terms.size()));
        for (const auto* t : terms) {
            const auto& list = postings_.at(*t);
            w.str(*t);
            w.pod(static_cast<std::uint32_t>(list.size()));
            for (const auto& p : list) {
                w.pod(p.doc);
                w.pod(p.tf);
            }
        }
        w.finish();
    }
    {
        Writer w(dir / "codes.bin");
        w.header(kCodesMagic);
        w.str(provider_id_);
        w.pod(static_cast<std::uint64_t>(codes_dim_));
        w.pod(static_cast<std::uint64_t>(code_words_));
        w.pod(static_cast<std::uint64_t>(dense_size()));
        w.raw(codes_.data(), codes_.size() * sizeof(std::uint64_t));
        w.finish();
    }
}

HybridIndex HybridIndex::load(const std::filesystem::path& dir) {
    HybridIndex idx;
    {
        Reader r(dir / "stats.bin");
        r.header(kStatsMagic);
        auto n_papers = r.pod<std::uint64_t>();
        for (std::uint64_t i = 0; i < n_papers; ++i) {
            idx.paper_ids_.push_back(r.str());
            PaperMeta m;
            bool has_year = r.pod<std::uint8_t>();
            auto year = r.pod<std::int32_t>();
            if (has_year) m.year = year;
            bool has_venue = r.pod<std::uint8_t>();
            auto venue = r.str();
            if (has_venue) m.venue = venue;
            auto n_fos = r.pod<std::uint32_t>();
            for (std::uint32_t f = 0; f < n_fos; ++f) m.fields_of_study.insert(r.str());
            idx.papers_.push_back(std::move(m));
        }
        auto n = r.pod<std::uint64_t>();
        for (std::uint64_t d = 0; d < n; ++d) {
            idx.passages_.push_back(passage_from_json(nlohmann::json::parse(r.str())));
            idx.doc_paper_.push_back(r.pod<std::uint32_t>());
            idx.doc_len_.push_back(r.pod<std::uint32_t>());
            if (idx.doc_paper_.back() >= idx.papers_.size()) throw IndexError("corrupt paper slot in stats.bin");
            idx.doc_by_id_.emplace(idx.passages_.back().passage_id, static_cast<std::uint32_t>(d));
        }
        idx.avg_len_ = r.pod<double>();
    }
    {
        Reader r(dir / "postings.bin");
        r.header(kPostingsMagic);
        auto n_terms = r.pod<std::uint64_t>();
        for (std::uint64_t t = 0; t < n_terms; ++t) {
            auto term = r.str();
            auto df = r.pod<std::uint32_t>();
            std::vector<Posting> list(df);
            for (auto& p : list) {
                p.doc = r.pod<std::uint32_t>();
                p.tf = r.pod<std::uint32_t>();
                if (p.doc >= idx.passages_.size()) throw IndexError("corrupt posting in postings.bin");
            }
            idx.postings_.emplace(std::move(term), std::move(list));
        }
    }
    {
        Reader r(dir / "codes.bin");
        r.header(kCodesMagic);
        idx.provider_id_ = r.str();
        idx.codes_dim_ = r.pod<std::uint64_t>();
        idx.code_words_ = r.pod<std::uint64_t>();
        auto n = r.pod<std::uint64_t>();
        if (n != idx.passages_.size()) throw IndexError("codes.bin holds " + std::to_string(n) + " codes for " +
                                                        std::to_string(idx.passages_.size()) + " passages");
        idx.codes_.resize(n * idx.code_words_);
        r.raw(idx.codes_.data(), idx.codes_.size() * sizeof(std::uint64_t));
    }
    return idx;
}

}  // namespace litqa
