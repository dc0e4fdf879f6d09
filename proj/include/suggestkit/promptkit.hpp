#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "suggestkit/corpus.hpp"

namespace suggestkit {

enum class StrategyKind { ZeroShot, StaticFewShot, DynamicFewShot, DynamicContexts };
enum class PromptOrder { QueryFirst, ContextsFirst };

inline constexpr std::size_t kDefaultExamples = 3;
inline constexpr std::size_t kDefaultContexts = 4;
inline constexpr std::size_t kStaticExamples = 3;

struct Strategy {
    StrategyKind kind = StrategyKind::DynamicContexts;
    std::vector<std::string> static_example_ids;  // StaticFewShot only; empty = first 3 ids
    std::size_t k_examples = kDefaultExamples;     // DynamicFewShot / DynamicContexts
    std::size_t k_contexts = kDefaultContexts;     // DynamicContexts

    static Strategy zero_shot();
    static Strategy static_few_shot(std::vector<std::string> example_ids = {});
    static Strategy dynamic_few_shot(std::size_t k_examples = kDefaultExamples);
    static Strategy dynamic_contexts(std::size_t k_examples = kDefaultExamples,
                                     std::size_t k_contexts = kDefaultContexts);

    bool uses_examples() const noexcept { return kind != StrategyKind::ZeroShot; }
    bool uses_contexts() const noexcept { return kind == StrategyKind::DynamicContexts; }

    bool operator==(const Strategy&) const = default;
};

// CLI / wire names: zero, few, dynamic-few, dynamic-contexts.
std::string_view strategy_name(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);
// Row labels used in report tables.
std::string_view strategy_label(StrategyKind kind);

// query-first, contexts-first.
std::string_view order_name(PromptOrder order);
PromptOrder parse_order(std::string_view name);

// Lexicographically first three example ids.
std::vector<std::string> default_static_example_ids(const Corpus& corpus);

struct PromptPlan {
    Strategy strategy;
    PromptOrder order = PromptOrder::QueryFirst;
    std::string query;
    std::vector<QASExample> examples;
    std::vector<Document> contexts;  // retrieval-rank order
    std::string system_instruction;
    std::optional<std::size_t> max_context_chars;  // unlimited when unset
};

struct PlanTrace {
    std::vector<std::string> example_ids;
    std::vector<std::string> context_ids;

    bool operator==(const PlanTrace&) const = default;
};

struct AssembledPrompt {
    std::string text;
    std::uint64_t prompt_hash = 0;
    PlanTrace plan_trace;
};

std::string_view default_system_instruction();
// The instruction with its closing "Here are some examples:" removed.
std::string instruction_without_examples_trailer(std::string_view instruction);

std::string render_example(const QASExample& qas);

// Throws Error{InvalidInput} when the plan violates its strategy contract.
void validate_plan(const PromptPlan& plan);
AssembledPrompt assemble(const PromptPlan& plan);

}  // namespace suggestkit
