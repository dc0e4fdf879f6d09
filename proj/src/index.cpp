#include "suggestkit/index.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "suggestkit/error.hpp"

namespace suggestkit {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with dims " +
                                                      std::to_string(a.size()) + " and " +
                                                      std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine(std::span<const double>(a.values), std::span<const double>(b.values));
}

VectorIndex::VectorIndex(std::span<const EmbeddingRecord> records) {
    for (const auto& r : records) {
        if (r.vector.dim() == 0) {
            throw Error(ErrorCode::DimensionMismatch, "record '" + r.item_id + "' has an empty vector");
        }
        if (dim_ == 0) dim_ = r.vector.dim();
        if (r.vector.dim() != dim_) {
            throw Error(ErrorCode::DimensionMismatch,
                        "record '" + r.item_id + "' has dim " + std::to_string(r.vector.dim()) +
                            ", index dim is " + std::to_string(dim_));
        }
        entries_[r.item_kind].push_back({r.item_id, r.vector});
    }
    for (auto& [kind, list] : entries_) {
        std::sort(list.begin(), list.end(),
                  [](const Entry& a, const Entry& b) { return a.item_id < b.item_id; });
        auto dup = std::adjacent_find(list.begin(), list.end(), [](const Entry& a, const Entry& b) {
            return a.item_id == b.item_id;
        });
        if (dup != list.end()) {
            throw Error(ErrorCode::DuplicateId, "duplicate " + std::string(item_kind_name(kind)) +
                                                    " id '" + dup->item_id + "' in index");
        }
    }
}

std::size_t VectorIndex::size(ItemKind kind) const {
    auto it = entries_.find(kind);
    return it == entries_.end() ? 0 : it->second.size();
}

std::span<const VectorIndex::Entry> VectorIndex::entries(ItemKind kind) const {
    auto it = entries_.find(kind);
    if (it == entries_.end()) return {};
    return it->second;
}

const EmbeddingVector* VectorIndex::find(ItemKind kind, const std::string& item_id) const {
    auto list = entries(kind);
    auto it = std::lower_bound(list.begin(), list.end(), item_id,
                               [](const Entry& e, const std::string& id) { return e.item_id < id; });
    if (it == list.end() || it->item_id != item_id) return nullptr;
    return &it->vector;
}

std::vector<RetrievalHit> VectorIndex::top_k(const EmbeddingVector& query, ItemKind kind,
                                             std::size_t k,
                                             const std::vector<std::string>* allow) const {
    if (k == 0) throw Error(ErrorCode::InvalidInput, "top_k requires k >= 1");
    auto list = entries(kind);
    if (list.empty()) {
        throw Error(ErrorCode::EmptyPool, "no " + std::string(item_kind_name(kind)) + " entries in index");
    }
    if (query.dim() != dim_) {
        throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                      " vs index dim " + std::to_string(dim_));
    }
    std::unordered_set<std::string> allowed;
    if (allow != nullptr && !allow->empty()) allowed.insert(allow->begin(), allow->end());

    std::vector<RetrievalHit> hits;
    hits.reserve(list.size());
    for (const auto& e : list) {
        if (!allowed.empty() && !allowed.contains(e.item_id)) continue;
        hits.push_back({e.item_id, cosine(query, e.vector)});
    }
    if (hits.empty()) {
        throw Error(ErrorCode::EmptyPool, "context pool matches no indexed " +
                                              std::string(item_kind_name(kind)));
    }
    const auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item_id < b.item_id;
    };
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
    hits.resize(n);
    return hits;
}

}  // namespace suggestkit
