#include "suggestkit/promptkit.hpp"

#include <algorithm>

#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit {

namespace {

constexpr std::string_view kSystemInstruction =
    "You are an intelligent conversational agent for a smart sleep coach of baby. "
    "You are given a prompt with a query with different contexts. "
    "Each query is one question. "
    "Convert the query into question format. "
    "You have to suggest 3 different questions that can be very easily answered by only the "
    "context provided. "
    "If the questions cannot be strictly answered by only the context provided then it should "
    "not suggest. "
    "Remember in a month there are 4 weeks. "
    "The age of the baby should be the same as in the query and not be changed. "
    "Only generate the questions. "
    "Here are some examples:";

constexpr std::string_view kExamplesTrailer = "Here are some examples:";

}  // namespace

Strategy Strategy::zero_shot() {
    Strategy s;
    s.kind = StrategyKind::ZeroShot;
    s.k_examples = 0;
    s.k_contexts = 0;
    return s;
}

Strategy Strategy::static_few_shot(std::vector<std::string> example_ids) {
    Strategy s;
    s.kind = StrategyKind::StaticFewShot;
    s.static_example_ids = std::move(example_ids);
    s.k_examples = kStaticExamples;
    s.k_contexts = 0;
    return s;
}

Strategy Strategy::dynamic_few_shot(std::size_t k_examples) {
    Strategy s;
    s.kind = StrategyKind::DynamicFewShot;
    s.k_examples = k_examples;
    s.k_contexts = 0;
    return s;
}

Strategy Strategy::dynamic_contexts(std::size_t k_examples, std::size_t k_contexts) {
    Strategy s;
    s.kind = StrategyKind::DynamicContexts;
    s.k_examples = k_examples;
    s.k_contexts = k_contexts;
    return s;
}

std::string_view strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::ZeroShot: return "zero";
        case StrategyKind::StaticFewShot: return "few";
        case StrategyKind::DynamicFewShot: return "dynamic-few";
        case StrategyKind::DynamicContexts: return "dynamic-contexts";
    }
    return "dynamic-contexts";
}

StrategyKind parse_strategy(std::string_view name) {
    if (name == "zero") return StrategyKind::ZeroShot;
    if (name == "few") return StrategyKind::StaticFewShot;
    if (name == "dynamic-few") return StrategyKind::DynamicFewShot;
    if (name == "dynamic-contexts") return StrategyKind::DynamicContexts;
    throw Error(ErrorCode::InvalidInput, "unknown strategy '" + std::string(name) +
                                             "' (zero|few|dynamic-few|dynamic-contexts)");
}

std::string_view strategy_label(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::ZeroShot: return "Zero-Shot";
        case StrategyKind::StaticFewShot: return "Few-Shot";
        case StrategyKind::DynamicFewShot: return "Dynamic Few-Shot";
        case StrategyKind::DynamicContexts: return "Dynamic Contexts";
    }
    return "";
}

std::string_view order_name(PromptOrder order) {
    return order == PromptOrder::QueryFirst ? "query-first" : "contexts-first";
}

PromptOrder parse_order(std::string_view name) {
    if (name == "query-first") return PromptOrder::QueryFirst;
    if (name == "contexts-first") return PromptOrder::ContextsFirst;
    throw Error(ErrorCode::InvalidInput,
                "unknown order '" + std::string(name) + "' (query-first|contexts-first)");
}

std::vector<std::string> default_static_example_ids(const Corpus& corpus) {
    std::vector<std::string> ids;
    for (const auto& e : corpus.examples) ids.push_back(e.id);
    std::sort(ids.begin(), ids.end());
    if (ids.size() > kStaticExamples) ids.resize(kStaticExamples);
    return ids;
}

std::string_view default_system_instruction() { return kSystemInstruction; }

std::string instruction_without_examples_trailer(std::string_view instruction) {
    std::string out(instruction);
    if (out.size() >= kExamplesTrailer.size() &&
        out.compare(out.size() - kExamplesTrailer.size(), kExamplesTrailer.size(), kExamplesTrailer) == 0) {
        out.erase(out.size() - kExamplesTrailer.size());
        while (!out.empty() && (out.back() == ' ' || out.back() == '\n')) out.pop_back();
    }
    return out;
}

std::string render_example(const QASExample& qas) {
    std::string out = "Query: " + qas.query + "\nAnswer: " + qas.answer + "\nSuggested Questions:";
    for (const auto& s : qas.suggestions) out += "\n- " + s;
    return out;
}

void validate_plan(const PromptPlan& plan) {
    const auto& s = plan.strategy;
    const std::string name(strategy_name(s.kind));
    if (plan.query.empty()) throw Error(ErrorCode::InvalidInput, "prompt plan has an empty query");
    switch (s.kind) {
        case StrategyKind::ZeroShot:
            if (!plan.examples.empty())
                throw Error(ErrorCode::InvalidInput, "zero-shot plan must not carry examples");
            break;
        case StrategyKind::StaticFewShot:
            if (plan.examples.size() != kStaticExamples)
                throw Error(ErrorCode::InvalidInput, "few-shot plan needs exactly 3 examples, got " +
                                                         std::to_string(plan.examples.size()));
            break;
        case StrategyKind::DynamicFewShot:
        case StrategyKind::DynamicContexts:
            if (plan.examples.size() > s.k_examples)
                throw Error(ErrorCode::InvalidInput, name + " plan carries more than k_examples examples");
            break;
    }
    if (s.kind == StrategyKind::DynamicContexts) {
        if (plan.contexts.empty())
            throw Error(ErrorCode::InvalidInput, "dynamic-contexts plan has zero contexts");
        if (plan.contexts.size() > s.k_contexts)
            throw Error(ErrorCode::InvalidInput, "dynamic-contexts plan carries more than k_contexts contexts");
    } else if (!plan.contexts.empty()) {
        throw Error(ErrorCode::InvalidInput, name + " plan must not carry contexts");
    }
}

AssembledPrompt assemble(const PromptPlan& plan) {
    validate_plan(plan);

    std::vector<std::string> sections;
    sections.push_back(plan.examples.empty()
                           ? instruction_without_examples_trailer(plan.system_instruction)
                           : plan.system_instruction);

    AssembledPrompt out;
    if (!plan.examples.empty()) {
        std::string block;
        for (const auto& e : plan.examples) {
            if (!block.empty()) block += "\n\n";
            block += render_example(e);
            out.plan_trace.example_ids.push_back(e.id);
        }
        sections.push_back(std::move(block));
    }

    std::string query_block = "Query: " + plan.query;
    std::string contexts_block;
    for (std::size_t i = 0; i < plan.contexts.size(); ++i) {
        const auto& doc = plan.contexts[i];
        std::string body = doc.body;
        if (plan.max_context_chars && body.size() > *plan.max_context_chars) {
            body.resize(*plan.max_context_chars);
        }
        if (!contexts_block.empty()) contexts_block += "\n\n";
        contexts_block += "Context " + std::to_string(i + 1) + ": " + body;
        out.plan_trace.context_ids.push_back(doc.id);
    }

    if (contexts_block.empty()) {
        sections.push_back(std::move(query_block));
    } else if (plan.order == PromptOrder::QueryFirst) {
        sections.push_back(std::move(query_block));
        sections.push_back(std::move(contexts_block));
    } else {
        sections.push_back(std::move(contexts_block));
        sections.push_back(std::move(query_block));
    }

    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i > 0) out.text += "\n\n";
        out.text += sections[i];
    }
    out.text += "\n";
    out.prompt_hash = fnv1a64(out.text);
    return out;
}

}  // namespace suggestkit
