#include "litqa/service/events.hpp"

#include <array>
#include <ctime>
#include <random>

namespace litqa {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 12> kNames = {"accepted", "blocked", "decomposed", "retrieved",
                                                "reranked", "quotes_extracted", "outline", "section",
                                                "table", "done", "warning", "error"};

}  // namespace

const char* to_string(EventKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> event_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (s == kNames[i]) return static_cast<EventKind>(i);
    return std::nullopt;
}

json to_json(const ProgressEvent& e) {
    return {{"report_id", e.report_id}, {"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload},
            {"timestamp", e.timestamp}};
}

ProgressEvent event_from_json(const json& j) {
    ProgressEvent e;
    e.report_id = j.at("report_id").get<std::string>();
    e.seq = j.at("seq").get<std::uint64_t>();
    auto kind = j.at("kind").get<std::string>();
    auto k = event_kind_from_string(kind);
    if (!k) throw std::invalid_argument("unknown event kind \"" + kind + "\"");
    e.kind = *k;
    e.payload = j.value("payload", json::object());
    e.timestamp = j.value("timestamp", std::string());
    return e;
}

std::string to_ndjson(const ProgressEvent& e) { return to_json(e).dump() + "\n"; }

std::string to_sse(const ProgressEvent& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + to_string(e.kind) + "\ndata: " + to_json(e).dump() + "\n\n";
}

std::vector<ProgressEvent> parse_ndjson(std::string_view text) {
    std::vector<ProgressEvent> out;
    std::size_t from = 0;
    while (from < text.size()) {
        auto to = text.find('\n', from);
        if (to == std::string_view::npos) to = text.size();
        auto line = text.substr(from, to - from);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) out.push_back(event_from_json(json::parse(line)));
        from = to + 1;
    }
    return out;
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
    using namespace std::chrono;
    auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
    std::time_t secs = static_cast<std::time_t>(ms / 1000);
    if (ms % 1000 < 0) --secs;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(((ms % 1000) + 1000) % 1000));
    return buf;
}

std::string random_report_id() {
    static thread_local std::mt19937_64 rng = [] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }();
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::optional<std::string> validate_event_stream(const std::vector<ProgressEvent>& events) {
    if (events.empty()) return "empty stream";
    if (events.front().kind != EventKind::accepted) return "stream does not start with accepted";
    // Stage rank; warnings may appear anywhere before the terminal event.
    auto rank = [](EventKind k) {
        switch (k) {
            case EventKind::accepted: return 0;
            case EventKind::blocked: return 1;
            case EventKind::decomposed: return 2;
            case EventKind::retrieved: return 3;
            case EventKind::reranked: return 4;
            case EventKind::quotes_extracted: return 5;
            case EventKind::outline: return 6;
            case EventKind::section:
            case EventKind::table: return 7;
            case EventKind::done: return 8;
            case EventKind::error: return 9;
            case EventKind::warning: return -1;
        }
        return -1;
    };
    int last = 0;
    std::optional<std::size_t> last_section;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.report_id != events[0].report_id) return "event " + std::to_string(i) + " has another report id";
        if (e.seq != i) return "seq gap at event " + std::to_string(i);
        const bool terminal = is_terminal(e.kind);
        if (terminal != (i + 1 == events.size()))
            return terminal ? "terminal event before the end" : "stream does not end with a terminal event";
        if (i == 0) continue;
        if (e.kind == EventKind::accepted) return "repeated accepted event";
        int r = rank(e.kind);
        if (r < 0) continue;
        if (e.kind == EventKind::blocked && last != 0) return "blocked after pipeline stages";
        if (e.kind != EventKind::error && e.kind != EventKind::section && e.kind != EventKind::table && r <= last)
            return std::string(to_string(e.kind)) + " out of order";
        if (r < last) return std::string(to_string(e.kind)) + " out of order";
        if (e.kind == EventKind::section) {
            if (last < 6) return "section before outline";
            auto pos = e.payload.value("position", std::size_t{0});
            if (last_section && pos <= *last_section) return "sections out of position order";
            last_section = pos;
        }
        if (e.kind == EventKind::table) {
            if (!last_section || e.payload.value("section_position", std::size_t{0}) != *last_section)
                return "table does not follow its section";
        }
        last = std::max(last, r);
    }
    return std::nullopt;
}

}  // namespace litqa
