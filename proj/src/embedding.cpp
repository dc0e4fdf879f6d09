#include "suggestkit/embedding.hpp"

#include <cmath>
#include <cctype>
#include <mutex>

#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "jsonl.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit {

using nlohmann::json;

double EmbeddingVector::norm() const noexcept {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

std::string_view item_kind_name(ItemKind kind) {
    switch (kind) {
        case ItemKind::Document: return "document";
        case ItemKind::ExampleQuery: return "example-query";
        case ItemKind::Query: return "query";
    }
    return "document";
}

ItemKind parse_item_kind(std::string_view name) {
    if (name == "document") return ItemKind::Document;
    if (name == "example-query") return ItemKind::ExampleQuery;
    if (name == "query") return ItemKind::Query;
    throw Error(ErrorCode::Malformed, "unknown item_kind '" + std::string(name) + "'");
}

std::uint64_t text_hash(std::string_view text) { return fnv1a64(text); }

EmbeddingVector Embedder::embed(std::string_view text) const {
    if (detail::trim(text).empty()) throw Error(ErrorCode::EmptyText, "empty text");
    std::string owned(text);
    auto out = embed_batch(std::span<const std::string>(&owned, 1));
    return std::move(out.front());
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (alnum) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : raw);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

EmbeddingVector embed_local(std::string_view text) {
    EmbeddingVector v;
    v.values.assign(kLocalDim, 0.0);
    v.provider_id = std::string(kLocalProviderId);
    v.model_id = std::string(kLocalModelId);
    for (const auto& token : tokenize(text)) {
        v.values[fnv1a64(token) % kLocalDim] += 1.0;
    }
    const double n = v.norm();
    if (n > 0.0) {
        for (double& x : v.values) x /= n;
    }
    return v;
}

std::vector<EmbeddingVector> LocalEmbedder::embed_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_local(t));
    return out;
}

// ---------------------------------------------------------------------------

RemoteEmbedderConfig RemoteEmbedderConfig::from_env() {
    RemoteEmbedderConfig c;
    c.base_url = detail::env_or("SUGGESTKIT_EMBED_BASE_URL");
    c.api_key = detail::env_or("SUGGESTKIT_EMBED_API_KEY");
    return c;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw Error(ErrorCode::InvalidInput,
                    "remote embedder needs a base URL (SUGGESTKIT_EMBED_BASE_URL)");
    }
    detail::parse_base_url(config_.base_url);
    if (config_.dim == 0) throw Error(ErrorCode::InvalidInput, "remote embedder dim must be positive");
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) return {};
    json body = {{"model", config_.model_id}, {"input", json::array()}};
    for (const auto& t : texts) body["input"].push_back(t);

    detail::PostOptions opts;
    opts.api_key = config_.api_key;
    opts.max_attempts = config_.max_attempts;
    opts.timeout = config_.timeout;
    opts.backoff = config_.retry_backoff;
    const json response = detail::post_json(config_.base_url, "/embeddings", body, opts);

    auto data = response.find("data");
    if (data == response.end() || !data->is_array()) {
        throw Error(ErrorCode::Malformed, "embeddings response has no \"data\" array");
    }
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    std::size_t position = 0;
    for (const auto& item : *data) {
        std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : position;
        ++position;
        if (idx >= texts.size() || filled[idx]) {
            throw Error(ErrorCode::Malformed, "embeddings response has bad index " + std::to_string(idx));
        }
        auto values = item.at("embedding").get<std::vector<double>>();
        if (values.size() != config_.dim) {
            throw Error(ErrorCode::DimensionMismatch,
                        "remote embedding has dim " + std::to_string(values.size()) +
                            ", configured " + std::to_string(config_.dim));
        }
        for (double x : values) {
            if (!std::isfinite(x)) throw Error(ErrorCode::Malformed, "non-finite embedding value");
        }
        out[idx] = EmbeddingVector{std::move(values), provider_id(), config_.model_id};
        filled[idx] = true;
    }
    for (std::size_t i = 0; i < filled.size(); ++i) {
        if (!filled[i]) {
            throw Error(ErrorCode::Malformed, "embeddings response missing index " + std::to_string(i));
        }
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(std::string_view spec) {
    if (spec.empty() || spec == "local") return std::make_unique<LocalEmbedder>();
    if (spec == "remote") return std::make_unique<RemoteEmbedder>(RemoteEmbedderConfig::from_env());
    throw Error(ErrorCode::InvalidInput, "unknown embedder '" + std::string(spec) + "' (local|remote)");
}

// ---------------------------------------------------------------------------
// Cache

EmbeddingCache::EmbeddingCache(EmbeddingCache&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    records_ = std::move(other.records_);
}

EmbeddingCache& EmbeddingCache::operator=(EmbeddingCache&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        records_ = std::move(other.records_);
    }
    return *this;
}

EmbeddingCache EmbeddingCache::parse(std::string_view text) {
    EmbeddingCache cache;
    detail::for_each_record(text, "cache", [&](const json& j, std::size_t line) {
        const std::string at = "cache line " + std::to_string(line);
        EmbeddingRecord r;
        r.item_id = detail::required_string(j, "item_id", at);
        r.item_kind = parse_item_kind(j.at("item_kind").get<std::string>());
        r.vector.model_id = j.at("model_id").get<std::string>();
        r.vector.provider_id = detail::optional_string(j, "provider_id");
        r.text_hash = from_hex(j.at("text_hash").get<std::string>());
        r.vector.values = j.at("values").get<std::vector<double>>();
        const auto dim = j.at("dim").get<std::size_t>();
        if (dim != r.vector.values.size()) {
            throw Error(ErrorCode::DimensionMismatch, at + ": dim " + std::to_string(dim) +
                                                          " but " +
                                                          std::to_string(r.vector.values.size()) +
                                                          " values");
        }
        Key key{r.item_id, r.item_kind};
        if (cache.records_.contains(key)) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate cache record for '" + r.item_id + "'");
        }
        cache.records_.emplace(std::move(key), std::move(r));
    });
    return cache;
}

EmbeddingCache EmbeddingCache::load(const std::filesystem::path& path) {
    if (path.empty() || !std::filesystem::exists(path)) return {};
    return parse(detail::read_file(path));
}

std::string EmbeddingCache::serialize() const {
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& [key, r] : records_) {
        json j = {{"item_id", r.item_id},
                  {"item_kind", item_kind_name(r.item_kind)},
                  {"model_id", r.vector.model_id},
                  {"provider_id", r.vector.provider_id},
                  {"text_hash", to_hex(r.text_hash)},
                  {"dim", r.vector.dim()},
                  {"values", r.vector.values}};
        out += detail::dump_line(j);
    }
    return out;
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
    detail::write_file(path, serialize());
}

std::optional<EmbeddingRecord> EmbeddingCache::find(const std::string& item_id, ItemKind kind,
                                                    std::string_view model_id,
                                                    std::uint64_t hash) const {
    std::shared_lock lock(mutex_);
    auto it = records_.find(Key{item_id, kind});
    if (it == records_.end()) return std::nullopt;
    if (it->second.text_hash != hash || it->second.vector.model_id != model_id) return std::nullopt;
    return it->second;
}

void EmbeddingCache::put(EmbeddingRecord record) {
    std::unique_lock lock(mutex_);
    Key key{record.item_id, record.item_kind};
    records_.insert_or_assign(std::move(key), std::move(record));
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

std::vector<EmbeddingRecord> EmbeddingCache::records() const {
    std::shared_lock lock(mutex_);
    std::vector<EmbeddingRecord> out;
    out.reserve(records_.size());
    for (const auto& [key, r] : records_) out.push_back(r);
    return out;
}

// ---------------------------------------------------------------------------

std::string document_embedding_text(const Document& doc, DocumentText mode) {
    if (mode == DocumentText::HeadlineOnly) return doc.headline;
    return doc.headline + "\n" + doc.body;
}

EmbedCorpusResult embed_corpus(const Embedder& embedder, const Corpus& corpus,
                               EmbeddingCache& cache, const EmbedCorpusOptions& options) {
    struct Pending {
        std::size_t slot;
        std::string item_id;
        ItemKind kind;
        std::string text;
    };

    EmbedCorpusResult result;
    const std::size_t total = corpus.documents.size() + corpus.examples.size();
    result.records.resize(total);
    std::vector<Pending> pending;
    const std::string model = embedder.model_id();

    auto visit = [&](std::size_t slot, const std::string& id, ItemKind kind, std::string text) {
        const std::uint64_t h = text_hash(text);
        if (auto hit = cache.find(id, kind, model, h)) {
            result.records[slot] = std::move(*hit);
            return;
        }
        if (detail::trim(text).empty()) {
            throw Error(ErrorCode::EmptyText, std::string(item_kind_name(kind)) + " '" + id + "': empty text");
        }
        pending.push_back({slot, id, kind, std::move(text)});
    };

    std::size_t slot = 0;
    for (const auto& d : corpus.documents) {
        visit(slot++, d.id, ItemKind::Document, document_embedding_text(d, options.document_text));
    }
    for (const auto& e : corpus.examples) visit(slot++, e.id, ItemKind::ExampleQuery, e.query);

    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    for (std::size_t begin = 0; begin < pending.size(); begin += batch) {
        const std::size_t end = std::min(pending.size(), begin + batch);
        std::vector<std::string> texts;
        for (std::size_t i = begin; i < end; ++i) texts.push_back(pending[i].text);
        std::vector<EmbeddingVector> vectors;
        try {
            vectors = embedder.embed_batch(texts);
        } catch (const Error& e) {
            std::string ids = pending[begin].item_id;
            if (end - begin > 1) ids += " .. " + pending[end - 1].item_id;
            Error tagged(e.code(), "embedding " + ids + ": " + e.message(), e.stage());
            tagged.with_attempts(e.attempts());
            throw tagged;
        }
        if (vectors.size() != texts.size()) {
            throw Error(ErrorCode::Malformed, "provider returned " + std::to_string(vectors.size()) +
                                                  " vectors for " + std::to_string(texts.size()) +
                                                  " texts");
        }
        for (std::size_t i = begin; i < end; ++i) {
            EmbeddingRecord r{pending[i].item_id, pending[i].kind, std::move(vectors[i - begin]),
                              text_hash(pending[i].text)};
            cache.put(r);
            result.records[pending[i].slot] = std::move(r);
        }
        result.provider_calls += end - begin;
    }
    return result;
}

EmbedCorpusResult embed_corpus(const Embedder& embedder, const Corpus& corpus,
                               const std::filesystem::path& cache_path,
                               const EmbedCorpusOptions& options) {
    EmbeddingCache cache = EmbeddingCache::load(cache_path);
    auto result = embed_corpus(embedder, corpus, cache, options);
    if (!cache_path.empty() && result.provider_calls > 0) cache.save(cache_path);
    return result;
}

}  // namespace suggestkit
