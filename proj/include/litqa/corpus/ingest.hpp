#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/corpus/types.hpp"

namespace litqa {

struct SkippedLine {
    std::size_t line = 0;
    std::string reason;
};

struct IngestResult {
    Corpus corpus;
    std::vector<SkippedLine> skipped;
};

/// Reads one JSON paper record per line. Malformed records are skipped and
/// reported with their 1-based line number; a duplicate paper_id throws
/// CorpusError naming the id. Blank lines are ignored.
IngestResult ingest_corpus(std::istream& in);

/// Parses and validates a single record. Throws CorpusError with the reason.
Paper paper_from_json(const nlohmann::json& j);
nlohmann::json paper_to_json(const Paper& p);

nlohmann::json passage_to_json(const Passage& p);
Passage passage_from_json(const nlohmann::json& j);

/// A corpus store is a directory holding papers.jsonl and passages.jsonl.
void write_store(const std::filesystem::path& dir, const Corpus& corpus,
                 const std::vector<Passage>& passages);

struct Store {
    Corpus corpus;
    std::vector<Passage> passages;
};

Store read_store(const std::filesystem::path& dir);

}  // namespace litqa
