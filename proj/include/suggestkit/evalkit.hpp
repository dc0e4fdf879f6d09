#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "suggestkit/engine.hpp"
#include "suggestkit/llm.hpp"
#include "suggestkit/promptkit.hpp"

namespace suggestkit::eval {

// Exact count/total with the half-up rounded integer percentage alongside.
struct Share {
    std::size_t count = 0;
    std::size_t total = 0;

    double percent() const noexcept;
    int rounded_percent() const noexcept;
    nlohmann::json to_json() const;
};

int round_half_up_percent(std::size_t count, std::size_t total);

struct EvalQuery {
    std::string query_id;
    std::string query;
};

// {"query_id","query"} records.
std::vector<EvalQuery> parse_queries(std::string_view text);
std::vector<EvalQuery> load_queries(const std::filesystem::path& path);
std::string serialize_queries(const std::vector<EvalQuery>& queries);

// ---------------------------------------------------------------------------
// Correctness labels

struct LabelRecord {
    std::string query_id;
    std::string system;
    bool correct = false;
    std::optional<StrategyKind> strategy;
    std::optional<PromptOrder> order;
};

class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<LabelRecord> records);

    // {"query_id","system","label":"correct"|"incorrect","strategy"?,"order"?}
    static LabelSet parse(std::string_view text);
    static LabelSet load(const std::filesystem::path& path);
    std::string serialize() const;

    // Most specific match: (strategy, order), then (strategy), then neither.
    // With `require_order`, only a record naming `order` matches.
    std::optional<bool> lookup(const std::string& query_id, const std::string& system,
                               StrategyKind strategy, PromptOrder order,
                               bool require_order = false) const;

    const std::vector<LabelRecord>& records() const noexcept { return records_; }

private:
    std::vector<LabelRecord> records_;
    std::map<std::string, std::vector<std::size_t>> by_item_;
};

struct SystemUnderTest {
    std::string name;
    const ChatProvider* provider = nullptr;
    std::string model_id;
};

struct Skip {
    std::string query_id;
    std::string system;
    std::string reason;
};

struct RunOptions {
    std::size_t jobs = 4;
};

// ---------------------------------------------------------------------------
// Comparative analysis: correct counts per (strategy, system)

struct ComparativeReport {
    std::vector<StrategyKind> strategies;
    std::vector<std::string> systems;
    std::size_t total = 0;  // queries
    // correct[strategy index][system index]
    std::vector<std::vector<std::size_t>> correct;
    std::vector<std::vector<std::size_t>> evaluated;
    std::vector<Skip> skipped;

    std::size_t count(StrategyKind strategy, const std::string& system) const;
    nlohmann::json to_json() const;
    std::string to_table() const;
};

ComparativeReport run_comparative(const KnowledgeBase& kb, const Embedder& embedder,
                                  const EngineConfig& base, const std::vector<EvalQuery>& queries,
                                  const std::vector<Strategy>& strategies,
                                  const std::vector<SystemUnderTest>& systems,
                                  const LabelSet& labels, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Blind pairwise preference

enum class Resolution { Left, Right, Tie };
std::string_view resolution_name(Resolution r);
Resolution parse_resolution(std::string_view name);

// Maps a blind verdict back to the systems through the A/B assignment.
Resolution resolve(bool left_shown_as_a, Verdict verdict);

struct EvalItem {
    std::string query_id;
    std::string query;
    std::map<std::string, SuggestionSet> outputs;  // by system name
};

// {"query_id","query","systems":{"<name>":["q1?","q2?","q3?"],...}}
std::vector<EvalItem> parse_items(std::string_view text);
std::vector<EvalItem> load_items(const std::filesystem::path& path);
std::string serialize_items(const std::vector<EvalItem>& items);

struct PreferenceRecord {
    std::string query_id;
    std::string left_system;
    std::string right_system;
    bool left_shown_as_a = true;
    Verdict verdict = Verdict::Tie;
    Resolution resolved = Resolution::Tie;
};

struct PreferenceReport {
    std::string judge;
    std::string left_system;
    std::string right_system;
    std::optional<std::uint64_t> seed;
    std::size_t total = 0;  // items considered, including skips
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t tie = 0;
    std::vector<PreferenceRecord> records;
    std::vector<Skip> skipped;

    std::size_t judged() const noexcept { return left + right + tie; }
    Share left_share() const { return {left, judged()}; }
    Share right_share() const { return {right, judged()}; }
    Share tie_share() const { return {tie, judged()}; }
    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// Each item is shown to the judge with a seeded coin deciding which system is "A".
/// Items whose judge output has no verdict token are listed in `skipped`.
PreferenceReport run_preference(const std::vector<EvalItem>& items, const std::string& left_system,
                                const std::string& right_system, const ChatProvider& judge,
                                const std::string& judge_name, std::uint64_t seed,
                                const RunOptions& options = {});

// Seeded A/B assignment for `n` items: true where the left system is shown as "A".
std::vector<bool> blind_assignments(std::uint64_t seed, std::size_t n);

// Human verdicts: {"query_id","verdict":"left"|"right"|"tie","left_system"?,"right_system"?}.
// `expected_total`, when given, must equal the record count.
PreferenceReport import_human_preferences(std::string_view text, std::string left_system,
                                          std::string right_system,
                                          std::optional<std::size_t> expected_total = {});
PreferenceReport run_human_preference_import(const std::filesystem::path& path,
                                             std::string left_system, std::string right_system,
                                             std::optional<std::size_t> expected_total = {});

// Side-by-side table of several preference reports (one column per judge).
std::string preference_table(const std::vector<PreferenceReport>& reports);

// ---------------------------------------------------------------------------
// Prompt-order ablation

struct AblationQueryTrace {
    std::string query_id;
    std::uint64_t query_first_hash = 0;
    std::uint64_t contexts_first_hash = 0;
};

struct AblationReport {
    std::vector<std::string> systems;
    std::size_t total = 0;
    std::vector<std::size_t> query_first;     // per system
    std::vector<std::size_t> contexts_first;  // per system
    std::vector<AblationQueryTrace> traces;
    std::vector<Skip> skipped;

    bool retrieval_sets_equal() const;
    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// Runs DynamicContexts under both orders for every query and system. Throws
/// Error{RetrievalMismatch} if the two orders ever retrieve different sets.
AblationReport run_ablation(const KnowledgeBase& kb, const Embedder& embedder,
                            const EngineConfig& base, const std::vector<EvalQuery>& queries,
                            const std::vector<SystemUnderTest>& systems, const LabelSet& labels,
                            const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Age consistency

enum class AgeUnit { Week, Month, Year };

inline constexpr int kWeeksPerMonth = 4;
inline constexpr int kWeeksPerYear = 48;

struct AgeMention {
    long long value = 0;
    AgeUnit unit = AgeUnit::Week;
    long long weeks = 0;
    std::string text;
};

long long to_weeks(long long value, AgeUnit unit);
std::vector<AgeMention> extract_ages(std::string_view text);

enum class AgeStatus { Consistent, Mismatch, NoAge };
std::string_view age_status_name(AgeStatus s);

struct AgeCheck {
    AgeStatus status = AgeStatus::NoAge;
    std::vector<AgeMention> query_ages;
    std::vector<AgeMention> question_ages;
    std::vector<AgeMention> mismatches;  // question ages absent from the query

    // e.g. "13 months (52w) vs query 13 week (13w)"
    std::string details() const;
    nlohmann::json to_json() const;
};

AgeCheck check_age_consistency(std::string_view query, std::string_view question);

struct AgeReport {
    std::vector<std::string> systems;
    std::map<std::string, std::size_t> questions;
    std::map<std::string, std::size_t> consistent;
    std::map<std::string, std::size_t> mismatched;
    std::map<std::string, std::size_t> no_age;
    struct Flag {
        std::string query_id;
        std::string system;
        std::string question;
        std::string details;
    };
    std::vector<Flag> flags;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

AgeReport run_age_check(const std::vector<EvalItem>& items);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions propagate (first one wins).
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace suggestkit::eval
