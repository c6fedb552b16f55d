#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace litqa::llm {

struct ModerationResult {
    bool allowed = true;
    std::string reason;  // shown to the user when blocked
};

class ModeratorUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Moderator {
public:
    virtual ~Moderator() = default;
    /// Throws ModeratorUnavailable when no verdict could be obtained.
    virtual ModerationResult moderate(const std::string& query) = 0;
};

/// Blocks queries containing any listed phrase, compared case-insensitively
/// after whitespace normalization. An empty list allows everything.
class DenylistModerator final : public Moderator {
public:
    explicit DenylistModerator(std::vector<std::string> phrases = {});
    /// One phrase per line; blank lines and lines starting with '#' are skipped.
    static DenylistModerator from_file(const std::string& path);

    ModerationResult moderate(const std::string& query) override;

private:
    std::vector<std::string> phrases_;
};

/// OpenAI-style moderation endpoint: POST {base}/moderations {"input": q},
/// blocked when results[0].flagged is true.
class HttpModerator final : public Moderator {
public:
    HttpModerator(std::string base_url, std::string api_key = {}, double timeout_s = 10.0);
    ModerationResult moderate(const std::string& query) override;

private:
    std::string base_url_;
    std::string api_key_;
    double timeout_s_;
};

/// Runs the moderator; when it is unavailable the query is blocked with the
/// transport reason unless `fail_open` is set.
ModerationResult moderate_query(const std::string& query, Moderator& moderator, bool fail_open = false);

}  // namespace litqa::llm
