#pragma once

// Generator of model-output variants for the suggestion parser. Each case
// carries the structured question sequence it was rendered from, so the
// expected outcome is known without parsing the text.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "suggestkit/error.hpp"

namespace fuzz {

struct Case {
    std::string text;
    // Expected: exactly these questions, or the error code.
    std::vector<std::string> questions;
    std::optional<suggestkit::ErrorCode> error;
};

inline std::string fold(const std::string& s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (c == ' ' || c == '\t') {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    }
    return out;
}

inline Case make_case(std::mt19937_64& rng) {
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    static const std::vector<std::string> stems = {
        "How long should a %d months old baby nap",
        "What is a good bedtime for a %d weeks old baby",
        "How many night feedings does a %d months old need",
        "When does the sleep regression end for a %d weeks old",
        "Should I swaddle my %d weeks old baby",
        "How do I stretch wake windows at %d months old",
        "Is it normal for a %d months old to wake at 5 am",
    };
    static const std::vector<std::string> markers = {"1. ", "1) ", "Q1: ", "- ", "* ", "\xe2\x80\xa2 ", "", "  1.  "};
    static const std::vector<std::string> preambles = {"Here are three questions:", "Sure! Suggested questions:",
                                                       "Suggested Questions:", ""};
    static const std::vector<std::string> trailers = {"These can be answered from the context.",
                                                      "Let me know if you need more.", ""};

    // Question sequence: 0..6 items, some near-duplicates.
    const std::size_t n = pick(7);
    std::vector<std::string> seq;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seq.empty() && pick(8) == 0) {
            std::string dup = seq[pick(seq.size())];
            if (pick(2)) dup[0] = static_cast<char>(dup[0] ^ 0x20);  // case flip
            seq.push_back(dup);
            continue;
        }
        char buf[128];
        std::snprintf(buf, sizeof buf, stems[pick(stems.size())].c_str(), static_cast<int>(2 + pick(20)));
        seq.push_back(std::string(buf) + "?");
    }

    const std::string eol = pick(4) == 0 ? "\r\n" : "\n";
    const std::string marker = markers[pick(markers.size())];
    Case c;
    if (auto p = preambles[pick(preambles.size())]; !p.empty()) c.text += p + eol;
    if (pick(3) == 0) c.text += eol;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        std::string m = marker;
        for (auto& ch : m) {
            if (ch == '1') ch = static_cast<char>('1' + (i % 9));
        }
        c.text += m + seq[i] + eol;
        if (pick(5) == 0) c.text += eol;
        if (pick(9) == 0) c.text += "(answerable from context 2)" + eol;
    }
    if (auto t = trailers[pick(trailers.size())]; !t.empty()) c.text += t;

    std::vector<std::string> seen;
    for (const auto& q : seq) {
        if (c.questions.size() == 3) break;
        const std::string f = fold(q);
        for (const auto& s : seen) {
            if (s == f) {
                c.error = suggestkit::ErrorCode::DuplicateQuestion;
                return c;
            }
        }
        seen.push_back(f);
        c.questions.push_back(q);
    }
    if (c.questions.size() < 3) c.error = suggestkit::ErrorCode::TooFewQuestions;
    return c;
}

}  // namespace fuzz
