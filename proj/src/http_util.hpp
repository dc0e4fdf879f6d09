#pragma once

// Internal: JSON-over-HTTP POST with bounded retries, shared by remote providers.

#include <chrono>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace suggestkit::detail {

struct BaseUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // "" or "/v1"
};

BaseUrl parse_base_url(std::string_view url);

struct PostOptions {
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds backoff{200};
};

// Connection failures, 429 and 5xx are retried up to max_attempts; other
// non-2xx statuses fail immediately. Failures throw Error{Transport} with the
// attempt count recorded.
nlohmann::json post_json(std::string_view base_url, std::string_view path,
                         const nlohmann::json& body, const PostOptions& options);

std::string env_or(const char* name, std::string def = {});

}  // namespace suggestkit::detail
