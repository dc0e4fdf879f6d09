#include "http_util.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "suggestkit/error.hpp"

namespace suggestkit::detail {

BaseUrl parse_base_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) {
        throw Error(ErrorCode::InvalidInput, "base URL must start with http:// or https://: '" +
                                                 std::string(url) + "'");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::InvalidInput, "unsupported URL scheme '" + std::string(scheme) + "'");
    }
    const auto host_begin = scheme_end + 3;
    auto path_begin = url.find('/', host_begin);
    if (path_begin == std::string_view::npos) path_begin = url.size();
    if (path_begin == host_begin) {
        throw Error(ErrorCode::InvalidInput, "base URL has no host: '" + std::string(url) + "'");
    }
    BaseUrl out;
    out.origin = std::string(url.substr(0, path_begin));
    out.path_prefix = std::string(url.substr(path_begin));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

nlohmann::json post_json(std::string_view base_url, std::string_view path,
                         const nlohmann::json& body, const PostOptions& options) {
    const BaseUrl base = parse_base_url(base_url);
    const std::string full_path = base.path_prefix + std::string(path);
    const std::string payload = body.dump();
    const int attempts = std::max(1, options.max_attempts);

    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Client client(base.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers headers;
        if (!options.api_key.empty()) headers.emplace("Authorization", "Bearer " + options.api_key);

        auto res = client.Post(full_path, headers, payload, "application/json");
        bool retryable = true;
        if (!res) {
            last_error = "request to " + base.origin + full_path + " failed: " +
                         httplib::to_string(res.error());
        } else if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::Malformed, "unparseable response from " + base.origin +
                                                      full_path + ": " + e.what());
            }
        } else {
            last_error = base.origin + full_path + " returned HTTP " + std::to_string(res->status);
            retryable = res->status == 429 || res->status >= 500;
        }
        if (!retryable) {
            throw Error(ErrorCode::Transport, last_error).with_attempts(attempt);
        }
        if (attempt < attempts) std::this_thread::sleep_for(options.backoff * attempt);
    }
    throw Error(ErrorCode::Transport,
                last_error + " (after " + std::to_string(attempts) + " attempts)")
        .with_attempts(attempts);
}

std::string env_or(const char* name, std::string def) {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : def;
}

}  // namespace suggestkit::detail
