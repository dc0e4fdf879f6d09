#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "suggestkit/corpus.hpp"

namespace suggestkit {

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;
    std::string model_id;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const noexcept;

    bool operator==(const EmbeddingVector&) const = default;
};

enum class ItemKind { Document, ExampleQuery, Query };

std::string_view item_kind_name(ItemKind kind);
ItemKind parse_item_kind(std::string_view name);

struct EmbeddingRecord {
    std::string item_id;
    ItemKind item_kind = ItemKind::Document;
    EmbeddingVector vector;
    std::uint64_t text_hash = 0;

    bool operator==(const EmbeddingRecord&) const = default;
};

std::uint64_t text_hash(std::string_view text);

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::string provider_id() const = 0;
    virtual std::string model_id() const = 0;
    virtual std::size_t dim() const = 0;

    // Implementations must be safe to call concurrently.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;

    // Rejects empty-after-trim text with ErrorCode::EmptyText.
    EmbeddingVector embed(std::string_view text) const;
};

// ---------------------------------------------------------------------------
// Local hashed bag-of-words embedder

inline constexpr std::size_t kLocalDim = 256;
inline constexpr std::string_view kLocalProviderId = "local";
inline constexpr std::string_view kLocalModelId = "fnv1a-bow-256";

// Lowercased ASCII alphanumeric runs; every other byte separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// The deterministic recipe: each token adds 1.0 at bucket fnv1a64(token) % 256,
/// then the vector is L2-normalized. Zero tokens give the all-zeros vector.
EmbeddingVector embed_local(std::string_view text);

class LocalEmbedder final : public Embedder {
public:
    std::string provider_id() const override { return std::string(kLocalProviderId); }
    std::string model_id() const override { return std::string(kLocalModelId); }
    std::size_t dim() const override { return kLocalDim; }
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
};

// ---------------------------------------------------------------------------
// Remote embeddings-over-HTTP provider

struct RemoteEmbedderConfig {
    std::string base_url;   // e.g. http://localhost:8080/v1
    std::string api_key;
    std::string model_id = "text-embedding-ada-002";
    std::size_t dim = 1536;
    int max_attempts = 3;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds retry_backoff{200};

    // Fills base_url / api_key from SUGGESTKIT_EMBED_BASE_URL / SUGGESTKIT_EMBED_API_KEY.
    static RemoteEmbedderConfig from_env();
};

class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::string provider_id() const override { return "remote"; }
    std::string model_id() const override { return config_.model_id; }
    std::size_t dim() const override { return config_.dim; }
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

    const RemoteEmbedderConfig& config() const noexcept { return config_; }

private:
    RemoteEmbedderConfig config_;
};

// Parses "local" or "remote" (remote reads the environment).
std::unique_ptr<Embedder> make_embedder(std::string_view spec);

// ---------------------------------------------------------------------------
// Cache

// Single-writer, multi-reader store of embedding records keyed by (item_id, kind).
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    EmbeddingCache(EmbeddingCache&& other) noexcept;
    EmbeddingCache& operator=(EmbeddingCache&& other) noexcept;

    // Missing file yields an empty cache.
    static EmbeddingCache load(const std::filesystem::path& path);
    static EmbeddingCache parse(std::string_view text);

    // Written to a sibling temp file and renamed into place.
    void save(const std::filesystem::path& path) const;
    std::string serialize() const;

    std::optional<EmbeddingRecord> find(const std::string& item_id, ItemKind kind,
                                        std::string_view model_id, std::uint64_t hash) const;
    void put(EmbeddingRecord record);
    std::size_t size() const;
    std::vector<EmbeddingRecord> records() const;

private:
    using Key = std::pair<std::string, ItemKind>;
    mutable std::shared_mutex mutex_;
    std::map<Key, EmbeddingRecord> records_;
};

enum class DocumentText { HeadlineAndBody, HeadlineOnly };

struct EmbedCorpusOptions {
    DocumentText document_text = DocumentText::HeadlineAndBody;
    std::size_t batch_size = 64;
};

// Text embedded for a document: headline + "\n" + body, or the headline alone.
std::string document_embedding_text(const Document& doc, DocumentText mode);

struct EmbedCorpusResult {
    std::vector<EmbeddingRecord> records;  // documents first, then examples, in corpus order
    std::size_t provider_calls = 0;        // texts sent to the provider
};

/// Embeds every document and every example query, reusing `cache` where the
/// text hash and model id match. New vectors are added to `cache`.
EmbedCorpusResult embed_corpus(const Embedder& embedder, const Corpus& corpus,
                               EmbeddingCache& cache, const EmbedCorpusOptions& options = {});

// Same, loading and saving the cache at `cache_path` (empty path: no persistence).
EmbedCorpusResult embed_corpus(const Embedder& embedder, const Corpus& corpus,
                               const std::filesystem::path& cache_path,
                               const EmbedCorpusOptions& options = {});

}  // namespace suggestkit
