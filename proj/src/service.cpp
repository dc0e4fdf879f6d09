#include "suggestkit/service.hpp"

#include <charconv>
#include <iostream>
#include <unordered_set>

#include <httplib.h>

#include "http_util.hpp"
#include "jsonl.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit {

using nlohmann::json;

json error_body(std::string_view stage, std::string_view message) {
    return {{"error", {{"stage", stage}, {"message", message}}}};
}

namespace {

HttpResponse fail(int status, std::string_view stage, std::string_view message) {
    return {status, error_body(stage, message)};
}

int status_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::Transport:
        case ErrorCode::MissingScriptKey:
            return 502;
        case ErrorCode::EmptyText:
        case ErrorCode::InvalidInput:
            return 400;
        case ErrorCode::EmptyCorpus:
        case ErrorCode::EmptyPool:
            return 503;
        default:
            break;
    }
    if (e.stage() == stage::kParse) return 422;
    if (e.stage() == stage::kComplete) return 502;
    return 500;
}

HttpResponse from_error(const Error& e, std::string_view default_stage) {
    const std::string stage = e.stage().empty() ? std::string(default_stage) : e.stage();
    const int status = status_for(e);
    std::string message = e.message();
    if (status == 502 && e.stage() == stage::kComplete) message = "provider failure: " + message;
    return fail(status, stage, message);
}

std::optional<json> parse_body(std::string_view body) {
    try {
        auto j = json::parse(body);
        if (!j.is_object()) return std::nullopt;
        return j;
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
}

std::size_t count_field(const json& j, const char* field, std::size_t def) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return def;
    if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw Error(ErrorCode::InvalidInput, std::string(field) + " must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

// Applies request-level overrides (strategy, order, k_examples, k_contexts).
EngineConfig request_config(const EngineConfig& base, const json& req) {
    EngineConfig config = base;
    if (auto s = detail::optional_string(req, "strategy"); !s.empty()) {
        switch (parse_strategy(s)) {
            case StrategyKind::ZeroShot: config.strategy = Strategy::zero_shot(); break;
            case StrategyKind::StaticFewShot:
                config.strategy = Strategy::static_few_shot(base.strategy.static_example_ids);
                break;
            case StrategyKind::DynamicFewShot: config.strategy = Strategy::dynamic_few_shot(); break;
            case StrategyKind::DynamicContexts: config.strategy = Strategy::dynamic_contexts(); break;
        }
        config.strategy.k_examples = base.strategy.k_examples;
        config.strategy.k_contexts = base.strategy.k_contexts;
    }
    if (auto o = detail::optional_string(req, "order"); !o.empty()) config.order = parse_order(o);
    if (config.strategy.kind == StrategyKind::DynamicFewShot ||
        config.strategy.kind == StrategyKind::DynamicContexts) {
        config.strategy.k_examples = count_field(req, "k_examples", config.strategy.k_examples);
    }
    if (config.strategy.uses_contexts()) {
        config.strategy.k_contexts = count_field(req, "k_contexts", config.strategy.k_contexts);
    }
    config.validate();
    return config;
}

json hits_json(const std::vector<RetrievalHit>& hits, const KnowledgeBase* kb) {
    json arr = json::array();
    for (const auto& h : hits) {
        json j = {{"id", h.item_id}, {"score", h.score}};
        if (kb != nullptr) j["headline"] = kb->document(h.item_id).headline;
        arr.push_back(std::move(j));
    }
    return arr;
}

json suggestion_json(const SuggestionResult& r, const KnowledgeBase& kb) {
    return {{"questions", r.suggestions.questions()},
            {"contexts", hits_json(r.context_hits, &kb)},
            {"examples", hits_json(r.example_hits, nullptr)},
            {"prompt_hash", to_hex(r.prompt.prompt_hash)},
            {"trace_key", r.trace_key},
            {"strategy", strategy_name(r.strategy.kind)},
            {"order", order_name(r.order)},
            {"generation", r.generation}};
}

std::string required_query(const json& req) {
    auto it = req.find("query");
    if (it == req.end() || !it->is_string() || detail::trim(it->get<std::string>()).empty()) {
        throw Error(ErrorCode::EmptyText, "empty query", std::string(stage::kRequest));
    }
    return it->get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------

void ServiceConfig::set_bind(std::string_view bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == bind.size()) {
        throw Error(ErrorCode::InvalidInput, "bind address must be host:port, got '" + std::string(bind) + "'");
    }
    int port = 0;
    const auto port_text = bind.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        throw Error(ErrorCode::InvalidInput, "invalid port in bind address '" + std::string(bind) + "'");
    }
    bind_host = std::string(bind.substr(0, colon));
    bind_port = port;
}

std::string ServiceConfig::bind() const { return bind_host + ":" + std::to_string(bind_port); }

ServiceConfig ServiceConfig::from_json(const json& j) {
    ServiceConfig c;
    if (auto b = detail::optional_string(j, "bind"); !b.empty()) c.set_bind(b);
    c.documents_path = detail::optional_string(j, "documents");
    c.examples_path = detail::optional_string(j, "examples");
    c.cache_path = detail::optional_string(j, "cache");
    c.embedder = detail::optional_string(j, "embedder", c.embedder);
    c.chat_provider = detail::optional_string(j, "chat_provider");
    c.ingest_token = detail::optional_string(j, "ingest_token");
    if (j.contains("cors_origins")) c.cors_origins = j.at("cors_origins").get<std::vector<std::string>>();
    if (auto it = j.find("engine"); it != j.end()) {
        const json& e = *it;
        EngineConfig& ec = c.engine;
        ec = request_config(ec, e);
        ec.chat_model_id = detail::optional_string(e, "model", ec.chat_model_id);
        if (e.contains("temperature")) ec.temperature = e.at("temperature").get<double>();
        if (e.contains("max_tokens")) ec.max_tokens = e.at("max_tokens").get<int>();
        if (e.contains("exclude_answer_document")) ec.exclude_answer_document = e.at("exclude_answer_document").get<bool>();
        if (e.contains("context_pool")) ec.context_pool = e.at("context_pool").get<std::vector<std::string>>();
        if (e.contains("static_example_ids")) {
            ec.strategy.static_example_ids = e.at("static_example_ids").get<std::vector<std::string>>();
        }
        if (e.contains("max_context_chars")) ec.max_context_chars = e.at("max_context_chars").get<std::size_t>();
        if (auto dt = detail::optional_string(e, "document_text"); !dt.empty()) {
            if (dt == "headline") {
                ec.document_text = DocumentText::HeadlineOnly;
            } else if (dt == "headline+body") {
                ec.document_text = DocumentText::HeadlineAndBody;
            } else {
                throw Error(ErrorCode::InvalidInput, "document_text must be headline or headline+body");
            }
        }
        ec.validate();
    }
    return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(detail::read_file(path)));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Malformed, "config " + path.string() + ": " + e.what());
    }
}

void ServiceConfig::apply_env() {
    if (auto b = detail::env_or("SUGGESTKIT_BIND"); !b.empty()) set_bind(b);
}

void ServiceConfig::validate() const {
    for (const auto& p : {documents_path, examples_path}) {
        if (!p.empty() && !std::filesystem::exists(p)) {
            throw Error(ErrorCode::Io, "configured path not readable: " + p.string());
        }
    }
    if (documents_path.empty() != examples_path.empty()) {
        throw Error(ErrorCode::InvalidInput, "documents and examples paths must be given together");
    }
    if (chat_provider.empty()) throw Error(ErrorCode::InvalidInput, "no chat provider configured");
    engine.validate();
}

// ---------------------------------------------------------------------------

SuggestService::SuggestService(EngineConfig engine, std::shared_ptr<const Embedder> embedder,
                               std::shared_ptr<const ChatProvider> chat,
                               std::filesystem::path cache_path)
    : engine_(std::move(engine)),
      embedder_(std::move(embedder)),
      chat_(std::move(chat)),
      cache_path_(std::move(cache_path)) {}

void SuggestService::set_knowledge_base(std::shared_ptr<const KnowledgeBase> kb) {
    std::lock_guard lock(kb_mutex_);
    if (kb && kb->generation() > generation_.load()) generation_ = kb->generation();
    kb_ = std::move(kb);
}

std::shared_ptr<const KnowledgeBase> SuggestService::knowledge_base() const {
    std::lock_guard lock(kb_mutex_);
    return kb_;
}

HttpResponse SuggestService::handle_suggest(std::string_view body) const {
    auto req = parse_body(body);
    if (!req) return fail(400, stage::kRequest, "request body must be a JSON object");
    try {
        const std::string query = required_query(*req);
        const EngineConfig config = request_config(engine_, *req);
        auto kb = knowledge_base();
        if (!kb || kb->corpus().documents.empty()) return fail(503, stage::kRequest, "no corpus loaded");
        const auto result = suggest(config, *kb, Providers{*embedder_, *chat_}, query);
        return {200, suggestion_json(result, *kb)};
    } catch (const Error& e) {
        return from_error(e, stage::kRequest);
    }
}

HttpResponse SuggestService::handle_chat(std::string_view body) const {
    auto req = parse_body(body);
    if (!req) return fail(400, stage::kRequest, "request body must be a JSON object");
    try {
        const std::string query = required_query(*req);
        const EngineConfig config = request_config(engine_, *req);
        auto kb = knowledge_base();
        if (!kb || kb->corpus().documents.empty()) return fail(503, stage::kRequest, "no corpus loaded");
        const Answer top = answer(*kb, *embedder_, query);
        const auto result = suggest(config, *kb, Providers{*embedder_, *chat_}, query);
        json out = suggestion_json(result, *kb);
        out["answer_document_id"] = top.document->id;
        out["answer_headline"] = top.document->headline;
        out["answer_text"] = top.document->body;
        out["answer_score"] = top.score;
        out["suggestions"] = result.suggestions.questions();
        out.erase("questions");
        return {200, out};
    } catch (const Error& e) {
        return from_error(e, stage::kRequest);
    }
}

HttpResponse SuggestService::handle_ingest(std::string_view body, bool replace,
                                           std::string_view authorization) {
    if (!ingest_token_.empty() && authorization != "Bearer " + ingest_token_) {
        return fail(401, stage::kIngest, "missing or invalid bearer token");
    }
    if (detail::trim(body).empty()) return fail(400, stage::kIngest, "empty body");

    std::lock_guard ingest_lock(ingest_mutex_);
    auto current = knowledge_base();
    Corpus next = (replace || !current) ? Corpus{} : current->corpus();

    std::unordered_set<std::string> doc_ids, example_ids;
    for (const auto& d : next.documents) doc_ids.insert(d.id);
    for (const auto& e : next.examples) example_ids.insert(e.id);

    json rejected = json::array();
    std::size_t accepted = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t end = body.find('\n', pos);
        if (end == std::string_view::npos) end = body.size();
        const auto line = detail::trim(body.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error&) {
                throw Error(ErrorCode::Malformed, "malformed record");
            }
            if (!j.is_object()) throw Error(ErrorCode::Malformed, "record is not an object");
            std::string kind = detail::optional_string(j, "kind");
            if (kind.empty()) kind = j.contains("headline") ? "document" : j.contains("query") ? "example" : "";
            if (kind == "document") {
                Document d;
                d.id = detail::required_string(j, "id", "document");
                d.headline = detail::required_string(j, "headline", "document '" + d.id + "'");
                d.body = detail::required_string(j, "body", "document '" + d.id + "'");
                if (j.contains("tags") && !j.at("tags").is_null()) d.tags = j.at("tags").get<std::vector<std::string>>();
                if (!doc_ids.insert(d.id).second) {
                    throw Error(ErrorCode::DuplicateId, "duplicate document id \"" + d.id + "\"");
                }
                next.documents.push_back(std::move(d));
            } else if (kind == "example") {
                QASExample e;
                e.id = detail::required_string(j, "id", "example");
                e.query = detail::required_string(j, "query", "example '" + e.id + "'");
                e.answer = detail::required_string(j, "answer", "example '" + e.id + "'");
                e.suggestions = j.at("suggestions").get<std::vector<std::string>>();
                Corpus probe;
                probe.examples.push_back(e);
                validate(probe);
                if (!example_ids.insert(e.id).second) {
                    throw Error(ErrorCode::DuplicateId, "duplicate example id \"" + e.id + "\"");
                }
                next.examples.push_back(std::move(e));
            } else {
                throw Error(ErrorCode::Malformed, "record is neither a document nor an example");
            }
            ++accepted;
        } catch (const Error& e) {
            rejected.push_back({{"line", line_no}, {"reason", e.message()}});
        } catch (const json::exception& e) {
            rejected.push_back({{"line", line_no}, {"reason", e.what()}});
        }
    }

    if (!rejected.empty()) {
        json out = error_body(stage::kIngest, "batch rejected: " + std::to_string(rejected.size()) +
                                                  " invalid record(s)");
        out["accepted"] = 0;
        out["rejected"] = rejected;
        return {400, out};
    }
    if (accepted == 0) return fail(400, stage::kIngest, "no records in body");

    try {
        EmbeddingCache cache = EmbeddingCache::load(cache_path_);
        const std::uint64_t generation = generation_.load() + 1;
        auto kb = build_knowledge_base(std::move(next), *embedder_, &cache,
                                       EmbedCorpusOptions{engine_.document_text}, generation);
        if (!cache_path_.empty()) cache.save(cache_path_);
        set_knowledge_base(kb);
        return {200,
                {{"accepted", accepted},
                 {"rejected", json::array()},
                 {"generation", generation},
                 {"index_size",
                  {{"documents", kb->index().size(ItemKind::Document)},
                   {"examples", kb->index().size(ItemKind::ExampleQuery)}}}}};
    } catch (const Error& e) {
        return from_error(e, stage::kIngest);
    }
}

HttpResponse SuggestService::handle_health() const {
    auto kb = knowledge_base();
    const bool loaded = kb && !kb->corpus().documents.empty();
    return {200,
            {{"status", "ok"},
             {"corpus_loaded", loaded},
             {"generation", kb ? kb->generation() : 0},
             {"index_size",
              {{"documents", kb ? kb->index().size(ItemKind::Document) : 0},
               {"examples", kb ? kb->index().size(ItemKind::ExampleQuery) : 0}}},
             {"provider", {{"embed", embedder_->provider_id() + ":" + embedder_->model_id()}, {"llm", chat_->id()}}}}};
}

// ---------------------------------------------------------------------------

void mount_routes(httplib::Server& server, SuggestService& service, std::vector<std::string> cors_origins) {
    auto allowed = std::make_shared<std::unordered_set<std::string>>(cors_origins.begin(), cors_origins.end());

    auto cors = [allowed](const httplib::Request& req, httplib::Response& res) {
        const auto origin = req.get_header_value("Origin");
        if (!origin.empty() && allowed->contains(origin)) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Vary", "Origin");
        }
    };
    auto reply = [cors](const httplib::Request& req, httplib::Response& res, const HttpResponse& out) {
        cors(req, res);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };

    server.Options(R"(/v1/.*)", [cors](const httplib::Request& req, httplib::Response& res) {
        cors(req, res);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
        res.status = 204;
    });
    server.Post("/v1/suggest", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, service.handle_suggest(req.body));
    });
    server.Post("/v1/chat", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, service.handle_chat(req.body));
    });
    server.Post("/v1/ingest", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        const bool replace = req.has_param("mode") && req.get_param_value("mode") == "replace";
        reply(req, res, service.handle_ingest(req.body, replace, req.get_header_value("Authorization")));
    });
    server.Get("/v1/health", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, service.handle_health());
    });
}

int run_server(const ServiceConfig& config) {
    config.validate();
    std::shared_ptr<const Embedder> embedder = make_embedder(config.embedder);
    std::shared_ptr<const ChatProvider> chat = make_chat_provider(config.chat_provider);
    SuggestService service(config.engine, embedder, chat, config.cache_path);
    service.set_ingest_token(config.ingest_token);

    if (!config.documents_path.empty()) {
        Corpus corpus = load_corpus(config.documents_path, config.examples_path);
        EmbeddingCache cache = EmbeddingCache::load(config.cache_path);
        auto kb = build_knowledge_base(std::move(corpus), *embedder, &cache,
                                       EmbedCorpusOptions{config.engine.document_text}, 1);
        if (!config.cache_path.empty()) cache.save(config.cache_path);
        service.set_knowledge_base(std::move(kb));
    }

    httplib::Server server;
    mount_routes(server, service, config.cors_origins);
    std::cerr << "suggestkit: listening on " << config.bind() << "\n";
    if (!server.listen(config.bind_host, config.bind_port)) {
        std::cerr << "suggestkit: cannot bind " << config.bind() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace suggestkit
