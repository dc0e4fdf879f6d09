#include "suggestkit/fixtures.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "jsonl.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit::fixtures {

using nlohmann::json;

namespace {

// Seeded permutation of [0, n) independent of library distributions.
std::vector<std::size_t> permutation(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 engine(seed);
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[engine() % i]);
    return p;
}

// First `count` entries of a seeded permutation marked true.
std::vector<bool> seeded_subset(std::uint64_t seed, std::size_t n, std::size_t count) {
    std::vector<bool> out(n, false);
    const auto p = permutation(seed, n);
    for (std::size_t i = 0; i < count; ++i) out[p[i]] = true;
    return out;
}

std::string phrase_for(const std::string& system, const std::string& headline) {
    std::string h = headline;
    if (!h.empty() && h[0] >= 'A' && h[0] <= 'Z') h[0] = static_cast<char>(h[0] - 'A' + 'a');
    if (system == "chatgpt") return "Can you tell me more about " + h + "?";
    if (system == "claude-2") return "What does the guide say about " + h + "?";
    return "How should I approach " + h + "?";
}

const std::array<Strategy, 4>& strategies() {
    static const std::array<Strategy, 4> kStrategies = {
        Strategy::zero_shot(), Strategy::static_few_shot(), Strategy::dynamic_few_shot(),
        Strategy::dynamic_contexts()};
    return kStrategies;
}

}  // namespace

EvalFixtures make_eval_fixtures(const KnowledgeBase& kb, const Embedder& embedder,
                                const EngineConfig& base, std::uint64_t seed,
                                const ReferenceCounts& counts) {
    const auto& corpus = kb.corpus();
    const std::size_t n = counts.queries;
    for (const auto& row : counts.comparative) {
        for (std::size_t c : row) {
            if (c > n) throw Error(ErrorCode::InvalidInput, "reference count exceeds query total");
        }
    }
    if (counts.human_left + counts.human_right + counts.human_tie != n ||
        counts.gpt4_judge_left + counts.gpt4_judge_right > n ||
        counts.claude_judge_left + counts.claude_judge_right > n) {
        throw Error(ErrorCode::InvalidInput, "preference counts do not fit the query total");
    }

    // Prefer documents that are not annotated exemplars.
    std::unordered_set<std::string> exemplar_queries;
    for (const auto& e : corpus.examples) exemplar_queries.insert(e.query);
    std::vector<std::size_t> candidates, fallback;
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        (exemplar_queries.contains(corpus.documents[i].headline) ? fallback : candidates).push_back(i);
    }
    candidates.insert(candidates.end(), fallback.begin(), fallback.end());
    if (candidates.size() < n) {
        throw Error(ErrorCode::InvalidInput, "corpus has " + std::to_string(candidates.size()) +
                                                 " documents, fixtures need " + std::to_string(n));
    }
    const std::size_t n_fresh = candidates.size() - fallback.size();
    const auto order = permutation(seed, std::max(n, n_fresh));

    EvalFixtures fx;
    fx.seed = seed;
    for (std::size_t i = 0, taken = 0; taken < n; ++i) {
        const std::size_t idx = i < order.size() ? candidates[order[i]] : candidates[i];
        char id[16];
        std::snprintf(id, sizeof id, "eq%02zu", taken + 1);
        fx.queries.push_back({id, corpus.documents[idx].headline});
        ++taken;
    }

    // Scripted responses per system, keyed by retrieval trace.
    std::map<std::string, std::vector<SuggestionSet>> dynamic_outputs;
    for (const auto& q : fx.queries) {
        EngineConfig dc = base;
        dc.strategy = Strategy::dynamic_contexts();
        const auto grounding = prepare_prompt(dc, kb, embedder, q.query);
        std::vector<std::string> headlines;
        for (const auto& hit : grounding.context_hits) {
            if (headlines.size() == kSuggestionCount) break;
            headlines.push_back(kb.document(hit.item_id).headline);
        }
        while (headlines.size() < kSuggestionCount) headlines.push_back(q.query + " (" + std::to_string(headlines.size()) + ")");

        for (const auto& system : kSystems) {
            std::vector<std::string> questions;
            for (const auto& h : headlines) questions.push_back(phrase_for(system, h));
            std::string response = "Here are three questions:\n";
            for (std::size_t k = 0; k < questions.size(); ++k) {
                response += std::to_string(k + 1) + ". " + questions[k] + "\n";
            }
            for (const auto& strategy : strategies()) {
                EngineConfig config = base;
                config.strategy = strategy;
                const auto prepared = prepare_prompt(config, kb, embedder, q.query);
                fx.system_scripts[system][prepared.trace_key] = response;
            }
            if (system != "chatgpt") dynamic_outputs[system].push_back(SuggestionSet::make(questions));
        }
    }

    std::vector<eval::LabelRecord> labels;
    for (std::size_t row = 0; row < strategies().size(); ++row) {
        for (std::size_t col = 0; col < kSystems.size(); ++col) {
            const auto correct = seeded_subset(seed * 31 + row * 7 + col + 1, n, counts.comparative[row][col]);
            for (std::size_t i = 0; i < n; ++i) {
                labels.push_back({fx.queries[i].query_id, kSystems[col], correct[i], strategies()[row].kind,
                                  std::nullopt});
            }
        }
    }
    fx.labels = eval::LabelSet(std::move(labels));

    for (std::size_t i = 0; i < n; ++i) {
        eval::EvalItem item;
        item.query_id = fx.queries[i].query_id;
        item.query = fx.queries[i].query;
        item.outputs.emplace("gpt-4", dynamic_outputs["gpt-4"][i]);
        item.outputs.emplace("claude-2", dynamic_outputs["claude-2"][i]);
        fx.preference_items.push_back(std::move(item));
    }

    // Judge scripts answer for both A/B assignments, so the resolved outcome
    // of every item is fixed regardless of the blinding seed.
    auto judge_script = [&](std::uint64_t judge_seed, std::size_t left_wins, std::size_t right_wins) {
        std::map<std::string, std::string> script;
        const auto p = permutation(judge_seed, n);
        for (std::size_t rank = 0; rank < n; ++rank) {
            const auto& item = fx.preference_items[p[rank]];
            const auto& left = item.outputs.at("gpt-4");
            const auto& right = item.outputs.at("claude-2");
            const auto outcome = rank < left_wins                 ? eval::Resolution::Left
                                 : rank < left_wins + right_wins ? eval::Resolution::Right
                                                                 : eval::Resolution::Tie;
            const auto left_as_a = judge_prompt(item.query, left, right);
            const auto right_as_a = judge_prompt(item.query, right, left);
            std::string when_left_a = "TIE", when_right_a = "TIE";
            if (outcome == eval::Resolution::Left) {
                when_left_a = "A";
                when_right_a = "B";
            } else if (outcome == eval::Resolution::Right) {
                when_left_a = "B";
                when_right_a = "A";
            }
            script[to_hex(fnv1a64(left_as_a))] = when_left_a;
            script[to_hex(fnv1a64(right_as_a))] = when_right_a;
        }
        return script;
    };
    fx.judge_scripts["gpt-4"] = judge_script(seed + 101, counts.gpt4_judge_left, counts.gpt4_judge_right);
    fx.judge_scripts["claude-2"] = judge_script(seed + 202, counts.claude_judge_left, counts.claude_judge_right);

    const auto p = permutation(seed + 303, n);
    std::vector<std::string> verdict(n);
    for (std::size_t rank = 0; rank < n; ++rank) {
        verdict[p[rank]] = rank < counts.human_left                       ? "left"
                           : rank < counts.human_left + counts.human_right ? "right"
                                                                           : "tie";
    }
    fx.human_verdicts = detail::dump_line(json{{"total", n}});
    for (std::size_t i = 0; i < n; ++i) {
        fx.human_verdicts += detail::dump_line(json{{"query_id", fx.queries[i].query_id},
                                                    {"left_system", "gpt-4"},
                                                    {"right_system", "claude-2"},
                                                    {"verdict", verdict[i]}});
    }
    return fx;
}

void write_eval_fixtures(const EvalFixtures& fx, const std::filesystem::path& dir) {
    detail::write_file(dir / "queries.jsonl", eval::serialize_queries(fx.queries));
    detail::write_file(dir / "labels.jsonl", fx.labels.serialize());
    detail::write_file(dir / "items.jsonl", eval::serialize_items(fx.preference_items));
    detail::write_file(dir / "human-verdicts.jsonl", fx.human_verdicts);
    for (const auto& [system, script] : fx.system_scripts) {
        detail::write_file(dir / ("script-" + system + ".jsonl"), serialize_script(script));
    }
    for (const auto& [judge, script] : fx.judge_scripts) {
        detail::write_file(dir / ("judge-" + judge + ".jsonl"), serialize_script(script));
    }
}

}  // namespace suggestkit::fixtures
