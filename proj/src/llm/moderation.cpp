#include "litqa/llm/moderation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "litqa/corpus/tokenizer.hpp"

namespace litqa::llm {

namespace {

std::string fold(const std::string& s) {
    std::string out = normalize_ws(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

DenylistModerator::DenylistModerator(std::vector<std::string> phrases) {
    for (auto& p : phrases) {
        auto f = fold(p);
        if (!f.empty()) phrases_.push_back(std::move(f));
    }
}

DenylistModerator DenylistModerator::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open denylist " + path);
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        auto f = normalize_ws(line);
        if (f.empty() || f[0] == '#') continue;
        phrases.push_back(f);
    }
    return DenylistModerator(std::move(phrases));
}

ModerationResult DenylistModerator::moderate(const std::string& query) {
    auto q = fold(query);
    for (const auto& p : phrases_)
        if (q.find(p) != std::string::npos) return {false, "query contains a blocked phrase: \"" + p + "\""};
    return {};
}

HttpModerator::HttpModerator(std::string base_url, std::string api_key, double timeout_s)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {}

ModerationResult HttpModerator::moderate(const std::string& query) {
    auto base = detail::split_base_url(base_url_);
    auto client = detail::make_client(base.origin, timeout_s_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    nlohmann::json body{{"input", query}};
    auto res = client->Post(base.prefix + "/moderations", headers, body.dump(), "application/json");
    if (!res) throw ModeratorUnavailable("moderation endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ModeratorUnavailable("moderation endpoint returned HTTP " + std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("results") || j["results"].empty())
        throw ModeratorUnavailable("moderation endpoint returned an unreadable body");
    const auto& r = j["results"][0];
    if (!r.value("flagged", false)) return {};
    std::string reason = "query was flagged by moderation";
    if (r.contains("categories") && r["categories"].is_object()) {
        std::string cats;
        for (auto& [k, v] : r["categories"].items())
            if (v.is_boolean() && v.get<bool>()) cats += (cats.empty() ? "" : ", ") + k;
        if (!cats.empty()) reason += " (" + cats + ")";
    }
    return {false, reason};
}

ModerationResult moderate_query(const std::string& query, Moderator& moderator, bool fail_open) {
    try {
        return moderator.moderate(query);
    } catch (const ModeratorUnavailable& e) {
        if (fail_open) return {};
        return {false, std::string("moderation unavailable: ") + e.what()};
    }
}

}  // namespace litqa::llm
