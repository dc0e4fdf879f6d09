#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "suggestkit/embedding.hpp"

namespace suggestkit {

// dot(a,b) / (|a||b|); 0.0 when either norm is zero. Throws on dim mismatch.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct RetrievalHit {
    std::string item_id;
    double score = 0.0;

    bool operator==(const RetrievalHit&) const = default;
};

// Exact cosine search. Immutable once built; concurrent queries are safe.
class VectorIndex {
public:
    struct Entry {
        std::string item_id;
        EmbeddingVector vector;
    };

    VectorIndex() = default;
    explicit VectorIndex(std::span<const EmbeddingRecord> records);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size(ItemKind kind) const;
    bool empty() const noexcept { return entries_.empty(); }

    // Entries of one kind, sorted by item_id.
    std::span<const Entry> entries(ItemKind kind) const;
    const EmbeddingVector* find(ItemKind kind, const std::string& item_id) const;

    /// min(k, pool) hits ordered by score descending, ties by item_id ascending.
    /// An optional allow-list restricts the pool to the given ids.
    std::vector<RetrievalHit> top_k(const EmbeddingVector& query, ItemKind kind, std::size_t k,
                                    const std::vector<std::string>* allow = nullptr) const;

private:
    std::size_t dim_ = 0;
    std::map<ItemKind, std::vector<Entry>> entries_;
};

}  // namespace suggestkit
