#pragma once

#include <memory>
#include <string>

#include <httplib.h>

namespace litqa::llm::detail {

/// "http://host:port/v1" -> origin "http://host:port", prefix "/v1".
struct BaseUrl {
    std::string origin;
    std::string prefix;
};

inline BaseUrl split_base_url(const std::string& url) {
    auto scheme = url.find("://");
    auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path), prefix};
}

inline std::unique_ptr<httplib::Client> make_client(const std::string& origin, double timeout_s) {
    auto client = std::make_unique<httplib::Client>(origin);
    auto secs = static_cast<time_t>(timeout_s);
    auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client->set_connection_timeout(secs, usecs);
    client->set_read_timeout(secs, usecs);
    client->set_write_timeout(secs, usecs);
    return client;
}

}  // namespace litqa::llm::detail
