#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace litqa {

enum class EventKind {
    accepted,
    blocked,
    decomposed,
    retrieved,
    reranked,
    quotes_extracted,
    outline,
    section,
    table,
    done,
    warning,
    error
};

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);
inline bool is_terminal(EventKind k) { return k == EventKind::done || k == EventKind::error || k == EventKind::blocked; }

struct ProgressEvent {
    std::string report_id;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::accepted;
    nlohmann::json payload = nlohmann::json::object();
    std::string timestamp;  // RFC 3339, UTC, millisecond precision

    bool operator==(const ProgressEvent&) const = default;
};

nlohmann::json to_json(const ProgressEvent& e);
ProgressEvent event_from_json(const nlohmann::json& j);

/// One JSON object and a newline.
std::string to_ndjson(const ProgressEvent& e);
/// "id:", "event:" and "data:" lines and a blank line.
std::string to_sse(const ProgressEvent& e);
/// Parses an NDJSON stream, skipping blank lines.
std::vector<ProgressEvent> parse_ndjson(std::string_view text);

using Clock = std::function<std::chrono::system_clock::time_point()>;
std::string format_timestamp(std::chrono::system_clock::time_point t);

/// Random 128-bit id as 32 lowercase hex digits.
std::string random_report_id();

/// Checks the stream contract: seq runs 0, 1, 2, ... with one report id,
/// starts with accepted, ends with the only terminal event, and the stage
/// events appear in pipeline order. Returns the first violation.
std::optional<std::string> validate_event_stream(const std::vector<ProgressEvent>& events);

}  // namespace litqa
