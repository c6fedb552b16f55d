#include "litqa/service/store.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace litqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* scope_name(FeedbackRecord::Scope s) {
    switch (s) {
        case FeedbackRecord::Scope::section: return "section";
        case FeedbackRecord::Scope::table: return "table";
        case FeedbackRecord::Scope::report: break;
    }
    return "report";
}

const char* polarity_name(FeedbackRecord::Polarity p) {
    switch (p) {
        case FeedbackRecord::Polarity::up: return "up";
        case FeedbackRecord::Polarity::down: return "down";
        case FeedbackRecord::Polarity::none: break;
    }
    return "none";
}

// Report ids become directory names; only plain hex-like tokens are accepted.
bool safe_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    return true;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

}  // namespace

void FeedbackRecord::validate() const {
    if (report_id.empty()) throw ValidationError("feedback needs a report_id");
    if (polarity == Polarity::none && (!text || text->find_first_not_of(" \t\r\n") == std::string::npos))
        throw ValidationError("feedback without a thumbs up or down needs text");
    if (scope != Scope::report && !position) throw ValidationError("section and table feedback needs a position");
}

json to_json(const FeedbackRecord& f) {
    json j{{"report_id", f.report_id},
           {"scope", scope_name(f.scope)},
           {"polarity", polarity_name(f.polarity)},
           {"text", f.text ? json(*f.text) : json(nullptr)},
           {"timestamp", f.timestamp}};
    j["position"] = f.position ? json(*f.position) : json(nullptr);
    return j;
}

FeedbackRecord feedback_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("feedback must be a JSON object");
    FeedbackRecord f;
    try {
        f.report_id = j.at("report_id").get<std::string>();
        auto scope = j.value("scope", std::string("report"));
        if (scope == "report") f.scope = FeedbackRecord::Scope::report;
        else if (scope == "section") f.scope = FeedbackRecord::Scope::section;
        else if (scope == "table") f.scope = FeedbackRecord::Scope::table;
        else throw ValidationError("unknown feedback scope \"" + scope + "\"");
        auto polarity = j.value("polarity", std::string("none"));
        if (polarity == "up") f.polarity = FeedbackRecord::Polarity::up;
        else if (polarity == "down") f.polarity = FeedbackRecord::Polarity::down;
        else if (polarity == "none") f.polarity = FeedbackRecord::Polarity::none;
        else throw ValidationError("unknown feedback polarity \"" + polarity + "\"");
        if (j.contains("position") && !j["position"].is_null()) f.position = j["position"].get<std::size_t>();
        if (j.contains("text") && !j["text"].is_null()) f.text = j["text"].get<std::string>();
        f.timestamp = j.value("timestamp", std::string());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed feedback: ") + e.what());
    }
    return f;
}

// ---- memory ----

void MemoryReportStore::append_event(const ProgressEvent& e) {
    std::lock_guard lock(mu_);
    entries_[e.report_id].events.push_back(e);
}

void MemoryReportStore::put_report(const std::string& id, const json& report) {
    std::lock_guard lock(mu_);
    auto& entry = entries_[id];
    if (entry.report) throw StoreError("report " + id + " is already stored");
    entry.report = report;
}

void MemoryReportStore::append_feedback(const FeedbackRecord& f) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(f.report_id);
    if (it == entries_.end()) throw NotFound("unknown report " + f.report_id);
    it->second.feedback.push_back(f);
}

bool MemoryReportStore::exists(const std::string& id) const {
    std::lock_guard lock(mu_);
    return entries_.count(id) > 0;
}

std::optional<json> MemoryReportStore::report(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    return it == entries_.end() ? std::nullopt : it->second.report;
}

std::vector<ProgressEvent> MemoryReportStore::events(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    return it == entries_.end() ? std::vector<ProgressEvent>{} : it->second.events;
}

std::vector<FeedbackRecord> MemoryReportStore::feedback(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    return it == entries_.end() ? std::vector<FeedbackRecord>{} : it->second.feedback;
}

// ---- files ----

FileReportStore::FileReportStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path FileReportStore::dir(const std::string& id) const {
    if (!safe_id(id)) throw NotFound("invalid report id");
    return root_ / id;
}

std::shared_ptr<std::mutex> FileReportStore::lock_for(const std::string& id) const {
    std::lock_guard lock(locks_mu_);
    auto& m = locks_[id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
}

void FileReportStore::append_line(const std::string& id, const char* file, const std::string& line) {
    auto d = dir(id);
    auto m = lock_for(id);
    std::lock_guard lock(*m);
    fs::create_directories(d);
    std::ofstream out(d / file, std::ios::app | std::ios::binary);
    out << line << '\n';
    out.flush();
    if (!out) throw StoreError("cannot append to " + (d / file).string());
}

void FileReportStore::append_event(const ProgressEvent& e) { append_line(e.report_id, "events.ndjson", to_json(e).dump()); }

void FileReportStore::put_report(const std::string& id, const json& report) {
    auto d = dir(id);
    auto m = lock_for(id);
    std::lock_guard lock(*m);
    fs::create_directories(d);
    auto final_path = d / "report.json";
    if (fs::exists(final_path)) throw StoreError("report " + id + " is already stored");
    auto tmp = d / "report.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << report.dump();
        if (!out) throw StoreError("cannot write " + tmp.string());
    }
    fs::rename(tmp, final_path);
}

void FileReportStore::append_feedback(const FeedbackRecord& f) {
    if (!exists(f.report_id)) throw NotFound("unknown report " + f.report_id);
    append_line(f.report_id, "feedback.ndjson", to_json(f).dump());
}

bool FileReportStore::exists(const std::string& id) const {
    if (!safe_id(id)) return false;
    return fs::exists(root_ / id / "events.ndjson") || fs::exists(root_ / id / "report.json");
}

std::optional<json> FileReportStore::report(const std::string& id) const {
    if (!safe_id(id)) return std::nullopt;
    std::ifstream in(root_ / id / "report.json", std::ios::binary);
    if (!in) return std::nullopt;
    return json::parse(in);
}

std::vector<ProgressEvent> FileReportStore::events(const std::string& id) const {
    std::vector<ProgressEvent> out;
    if (!safe_id(id)) return out;
    auto m = lock_for(id);
    std::lock_guard lock(*m);
    for (const auto& line : read_lines(root_ / id / "events.ndjson")) out.push_back(event_from_json(json::parse(line)));
    return out;
}

std::vector<FeedbackRecord> FileReportStore::feedback(const std::string& id) const {
    std::vector<FeedbackRecord> out;
    if (!safe_id(id)) return out;
    auto m = lock_for(id);
    std::lock_guard lock(*m);
    for (const auto& line : read_lines(root_ / id / "feedback.ndjson")) out.push_back(feedback_from_json(json::parse(line)));
    return out;
}

}  // namespace litqa
