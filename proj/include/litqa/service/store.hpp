#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litqa/service/events.hpp"

namespace litqa {

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FeedbackRecord {
    enum class Scope { report, section, table };
    enum class Polarity { up, down, none };

    std::string report_id;
    Scope scope = Scope::report;
    std::optional<std::size_t> position;  // section and table scopes
    Polarity polarity = Polarity::none;
    std::optional<std::string> text;
    std::string timestamp;

    /// Throws ValidationError: polarity none needs text; section and table
    /// scopes need a position.
    void validate() const;
};

nlohmann::json to_json(const FeedbackRecord& f);
/// Throws ValidationError on unknown enum values or wrong types.
FeedbackRecord feedback_from_json(const nlohmann::json& j);

/// Append-only persistence keyed by report id. Appends to distinct reports
/// may run concurrently.
class ReportStore {
public:
    virtual ~ReportStore() = default;

    virtual void append_event(const ProgressEvent& e) = 0;
    /// Reports are written once; a second write throws StoreError.
    virtual void put_report(const std::string& report_id, const nlohmann::json& report) = 0;
    virtual void append_feedback(const FeedbackRecord& f) = 0;

    virtual bool exists(const std::string& report_id) const = 0;
    virtual std::optional<nlohmann::json> report(const std::string& report_id) const = 0;
    virtual std::vector<ProgressEvent> events(const std::string& report_id) const = 0;
    virtual std::vector<FeedbackRecord> feedback(const std::string& report_id) const = 0;
};

class MemoryReportStore final : public ReportStore {
public:
    void append_event(const ProgressEvent& e) override;
    void put_report(const std::string& report_id, const nlohmann::json& report) override;
    void append_feedback(const FeedbackRecord& f) override;
    bool exists(const std::string& report_id) const override;
    std::optional<nlohmann::json> report(const std::string& report_id) const override;
    std::vector<ProgressEvent> events(const std::string& report_id) const override;
    std::vector<FeedbackRecord> feedback(const std::string& report_id) const override;

private:
    struct Entry {
        std::vector<ProgressEvent> events;
        std::optional<nlohmann::json> report;
        std::vector<FeedbackRecord> feedback;
    };
    mutable std::mutex mu_;
    std::map<std::string, Entry> entries_;
};

/// <root>/<report_id>/{events.ndjson, report.json, feedback.ndjson}.
class FileReportStore final : public ReportStore {
public:
    explicit FileReportStore(std::filesystem::path root);

    void append_event(const ProgressEvent& e) override;
    void put_report(const std::string& report_id, const nlohmann::json& report) override;
    void append_feedback(const FeedbackRecord& f) override;
    bool exists(const std::string& report_id) const override;
    std::optional<nlohmann::json> report(const std::string& report_id) const override;
    std::vector<ProgressEvent> events(const std::string& report_id) const override;
    std::vector<FeedbackRecord> feedback(const std::string& report_id) const override;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path dir(const std::string& report_id) const;
    std::shared_ptr<std::mutex> lock_for(const std::string& report_id) const;
    void append_line(const std::string& report_id, const char* file, const std::string& line);

    std::filesystem::path root_;
    mutable std::mutex locks_mu_;
    mutable std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace litqa
