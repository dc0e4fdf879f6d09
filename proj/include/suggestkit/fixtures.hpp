#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "suggestkit/engine.hpp"
#include "suggestkit/evalkit.hpp"

namespace suggestkit::fixtures {

// Bookkeeping fixtures for the evaluation protocols. Labels and judge scripts
// are arranged so that the tallies equal `ReferenceCounts`; generated
// questions come from templated scripted responses, not a model.

inline const std::array<std::string, 3> kSystems = {"chatgpt", "claude-2", "gpt-4"};

struct ReferenceCounts {
    std::size_t queries = 48;
    // Correct counts per strategy row (zero, few, dynamic-few, dynamic-contexts)
    // and system column (chatgpt, claude-2, gpt-4).
    std::array<std::array<std::size_t, 3>, 4> comparative = {{
        {35, 30, 43},
        {42, 35, 40},
        {42, 35, 43},
        {44, 44, 46},
    }};
    // Pairwise preference of gpt-4 (left) vs claude-2 (right).
    std::size_t human_left = 21, human_right = 16, human_tie = 11;
    std::size_t gpt4_judge_left = 21, gpt4_judge_right = 27;
    std::size_t claude_judge_left = 24, claude_judge_right = 24;
};

struct EvalFixtures {
    std::vector<eval::EvalQuery> queries;
    std::map<std::string, std::map<std::string, std::string>> system_scripts;  // system -> key -> response
    eval::LabelSet labels;
    std::vector<eval::EvalItem> preference_items;  // gpt-4 vs claude-2 outputs
    std::map<std::string, std::map<std::string, std::string>> judge_scripts;  // judge -> key -> verdict
    std::string human_verdicts;  // line-delimited records
    std::uint64_t seed = 0;
};

/// The first `counts.queries` document headlines (in a seeded order) become
/// queries. Responses are keyed by retrieval trace so both prompt orders and
/// every strategy resolve to a deterministic canned answer.
EvalFixtures make_eval_fixtures(const KnowledgeBase& kb, const Embedder& embedder,
                                const EngineConfig& base, std::uint64_t seed,
                                const ReferenceCounts& counts = {});

// Writes queries.jsonl, labels.jsonl, items.jsonl, human-verdicts.jsonl,
// script-<system>.jsonl and judge-<system>.jsonl under `dir`.
void write_eval_fixtures(const EvalFixtures& fx, const std::filesystem::path& dir);

}  // namespace suggestkit::fixtures
