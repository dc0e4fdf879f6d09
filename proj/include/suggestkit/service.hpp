#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "suggestkit/engine.hpp"

namespace httplib {
class Server;
}

namespace suggestkit {

struct ServiceConfig {
    std::string bind_host = "127.0.0.1";
    int bind_port = 8088;
    std::filesystem::path documents_path;
    std::filesystem::path examples_path;
    std::filesystem::path cache_path;
    EngineConfig engine;
    std::string embedder = "local";          // local | remote
    std::string chat_provider;               // scripted:<path> | remote
    std::vector<std::string> cors_origins = {"http://localhost:5173", "http://localhost:8080",
                                             "http://127.0.0.1:5173", "http://127.0.0.1:8080"};
    std::string ingest_token;                // empty: ingest open

    // Parses "host:port" (SUGGESTKIT_BIND format); throws on malformed input.
    void set_bind(std::string_view bind);
    std::string bind() const;

    // Structured config document mirroring the fields above.
    static ServiceConfig from_json(const nlohmann::json& j);
    static ServiceConfig load(const std::filesystem::path& path);
    // SUGGESTKIT_BIND overrides the bind address.
    void apply_env();
    void validate() const;
};

// Result of one HTTP exchange, independent of the transport.
struct HttpResponse {
    int status = 200;
    nlohmann::json body;
};

/// Request handling for the /v1 endpoints. Holds the current knowledge base
/// behind a read-mostly handle; ingest swaps in a new generation atomically.
class SuggestService {
public:
    SuggestService(EngineConfig engine, std::shared_ptr<const Embedder> embedder,
                   std::shared_ptr<const ChatProvider> chat,
                   std::filesystem::path cache_path = {});

    void set_knowledge_base(std::shared_ptr<const KnowledgeBase> kb);
    std::shared_ptr<const KnowledgeBase> knowledge_base() const;
    void set_ingest_token(std::string token) { ingest_token_ = std::move(token); }

    HttpResponse handle_suggest(std::string_view body) const;
    HttpResponse handle_chat(std::string_view body) const;
    HttpResponse handle_ingest(std::string_view body, bool replace = false,
                               std::string_view authorization = {});
    HttpResponse handle_health() const;

private:
    EngineConfig engine_;
    std::shared_ptr<const Embedder> embedder_;
    std::shared_ptr<const ChatProvider> chat_;
    std::filesystem::path cache_path_;
    std::string ingest_token_;

    mutable std::mutex kb_mutex_;
    std::shared_ptr<const KnowledgeBase> kb_;
    std::mutex ingest_mutex_;
    std::atomic<std::uint64_t> generation_{0};
};

// Error body shape shared by every endpoint: {"error":{"stage","message"}}.
nlohmann::json error_body(std::string_view stage, std::string_view message);

// Registers the endpoints (and CORS handling) on an httplib server.
void mount_routes(httplib::Server& server, SuggestService& service,
                  std::vector<std::string> cors_origins);

// Builds providers and the initial corpus from `config`, then blocks serving.
int run_server(const ServiceConfig& config);

}  // namespace suggestkit
