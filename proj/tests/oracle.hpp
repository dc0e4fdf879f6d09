#pragma once

// Reference implementations kept independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return std::max(-1.0, std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb))));
}

// Full sort of every candidate, then truncation.
inline std::vector<std::pair<std::string, double>> brute_force_top_k(
    const std::vector<double>& query, const std::vector<std::pair<std::string, std::vector<double>>>& pool,
    std::size_t k) {
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [id, v] : pool) scored.emplace_back(id, cosine(query, v));
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

// Half-up rounding by exact comparison: floor(100c/t) + (2*(100c mod t) >= t).
inline int percent(std::size_t count, std::size_t total) {
    const std::size_t num = 100 * count;
    return static_cast<int>(num / total + (2 * (num % total) >= total ? 1 : 0));
}

}  // namespace oracle
