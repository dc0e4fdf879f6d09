#include "suggestkit/engine.hpp"

#include <algorithm>

#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit {

void EngineConfig::validate() const {
    if (strategy.kind == StrategyKind::DynamicContexts && strategy.k_contexts < 1) {
        throw Error(ErrorCode::InvalidInput, "k_contexts must be >= 1");
    }
    if (strategy.kind == StrategyKind::StaticFewShot && !strategy.static_example_ids.empty() &&
        strategy.static_example_ids.size() != kStaticExamples) {
        throw Error(ErrorCode::InvalidInput, "few-shot strategy needs exactly 3 example ids");
    }
}

KnowledgeBase::KnowledgeBase(Corpus corpus, VectorIndex index, std::uint64_t generation)
    : corpus_(std::move(corpus)), index_(std::move(index)), generation_(generation) {
    for (std::size_t i = 0; i < corpus_.documents.size(); ++i) doc_pos_.emplace(corpus_.documents[i].id, i);
    for (std::size_t i = 0; i < corpus_.examples.size(); ++i) example_pos_.emplace(corpus_.examples[i].id, i);
}

const Document& KnowledgeBase::document(const std::string& id) const {
    auto it = doc_pos_.find(id);
    if (it == doc_pos_.end()) throw Error(ErrorCode::InvalidInput, "unknown document id '" + id + "'");
    return corpus_.documents[it->second];
}

const QASExample& KnowledgeBase::example(const std::string& id) const {
    auto it = example_pos_.find(id);
    if (it == example_pos_.end()) throw Error(ErrorCode::InvalidInput, "unknown example id '" + id + "'");
    return corpus_.examples[it->second];
}

std::shared_ptr<const KnowledgeBase> build_knowledge_base(Corpus corpus, const Embedder& embedder,
                                                          EmbeddingCache* cache,
                                                          const EmbedCorpusOptions& options,
                                                          std::uint64_t generation) {
    validate(corpus);
    EmbeddingCache scratch;
    auto embedded = embed_corpus(embedder, corpus, cache != nullptr ? *cache : scratch, options);
    VectorIndex index(embedded.records);
    return std::make_shared<const KnowledgeBase>(std::move(corpus), std::move(index), generation);
}

namespace {

template <typename Fn>
auto run_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw e.tagged(stage);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::Malformed, e.what(), std::string(stage));
    }
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        out += id;
        out.push_back('\x1e');
    }
    return out;
}

}  // namespace

std::string retrieval_trace_key(const Strategy& strategy, std::string_view query,
                                const PlanTrace& trace) {
    std::string material(strategy_name(strategy.kind));
    material.push_back('\x1f');
    material += query;
    material.push_back('\x1f');
    material += join_ids(trace.example_ids);
    material.push_back('\x1f');
    material += join_ids(trace.context_ids);
    return "trace-" + to_hex(fnv1a64(material));
}

std::uint64_t retrieval_set_hash(const PlanTrace& trace) {
    auto examples = trace.example_ids;
    auto contexts = trace.context_ids;
    std::sort(examples.begin(), examples.end());
    std::sort(contexts.begin(), contexts.end());
    return fnv1a64(join_ids(examples) + "\x1f" + join_ids(contexts));
}

PreparedPrompt prepare_prompt(const EngineConfig& config, const KnowledgeBase& kb,
                              const Embedder& embedder, std::string_view query) {
    config.validate();
    const Strategy& strategy = config.strategy;
    const VectorIndex& index = kb.index();

    const EmbeddingVector query_vec = run_stage(stage::kEmbed, [&] { return embedder.embed(query); });

    PreparedPrompt out;
    PromptPlan plan;
    plan.strategy = strategy;
    plan.order = config.order;
    plan.query = std::string(query);
    plan.system_instruction = config.system_instruction;
    plan.max_context_chars = config.max_context_chars;

    run_stage(stage::kRetrieve, [&] {
        switch (strategy.kind) {
            case StrategyKind::ZeroShot:
                break;
            case StrategyKind::StaticFewShot: {
                auto ids = strategy.static_example_ids.empty() ? default_static_example_ids(kb.corpus())
                                                               : strategy.static_example_ids;
                if (ids.size() != kStaticExamples) {
                    throw Error(ErrorCode::EmptyPool, "few-shot strategy needs 3 examples, corpus has " +
                                                          std::to_string(ids.size()));
                }
                for (const auto& id : ids) {
                    plan.examples.push_back(kb.example(id));
                    const EmbeddingVector* v = index.find(ItemKind::ExampleQuery, id);
                    out.example_hits.push_back({id, v != nullptr ? cosine(query_vec, *v) : 0.0});
                }
                break;
            }
            case StrategyKind::DynamicFewShot:
            case StrategyKind::DynamicContexts:
                if (strategy.k_examples > 0 && index.size(ItemKind::ExampleQuery) > 0) {
                    out.example_hits = index.top_k(query_vec, ItemKind::ExampleQuery, strategy.k_examples);
                    for (const auto& hit : out.example_hits) plan.examples.push_back(kb.example(hit.item_id));
                }
                break;
        }
        if (strategy.uses_contexts()) {
            const auto* pool = config.context_pool.empty() ? nullptr : &config.context_pool;
            std::string excluded;
            std::size_t k = strategy.k_contexts;
            if (config.exclude_answer_document) {
                excluded = index.top_k(query_vec, ItemKind::Document, 1, pool).front().item_id;
                ++k;
            }
            for (auto& hit : index.top_k(query_vec, ItemKind::Document, k, pool)) {
                if (hit.item_id == excluded) continue;
                if (out.context_hits.size() == strategy.k_contexts) break;
                out.context_hits.push_back(std::move(hit));
            }
            if (out.context_hits.empty()) throw Error(ErrorCode::EmptyPool, "no contexts retrieved");
            for (const auto& hit : out.context_hits) plan.contexts.push_back(kb.document(hit.item_id));
        }
        return 0;
    });

    out.prompt = run_stage(stage::kAssemble, [&] { return assemble(plan); });
    out.trace_key = retrieval_trace_key(strategy, query, out.prompt.plan_trace);
    return out;
}

SuggestionResult suggest(const EngineConfig& config, const KnowledgeBase& kb,
                         const Providers& providers, std::string_view query) {
    if (query.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::EmptyText, "empty query", std::string(stage::kRequest));
    }
    PreparedPrompt prepared = prepare_prompt(config, kb, providers.embedder, query);

    ChatRequest request;
    request.model_id = config.chat_model_id;
    request.prompt = prepared.prompt.text;
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    request.script_keys = {to_hex(prepared.prompt.prompt_hash), prepared.trace_key, std::string(query)};

    const std::string raw = run_stage(stage::kComplete, [&] { return providers.chat.complete(request); });
    SuggestionSet suggestions = run_stage(stage::kParse, [&] {
        return parse_suggestions(raw, prepared.prompt.prompt_hash);
    });

    return SuggestionResult{std::string(query),
                            std::move(suggestions),
                            std::move(prepared.example_hits),
                            std::move(prepared.context_hits),
                            std::move(prepared.prompt),
                            config.strategy,
                            config.order,
                            std::move(prepared.trace_key),
                            kb.generation()};
}

AssembledPrompt replay_prompt(const EngineConfig& config, const KnowledgeBase& kb,
                              const SuggestionResult& result) {
    PromptPlan plan;
    plan.strategy = result.strategy;
    plan.order = result.order;
    plan.system_instruction = config.system_instruction;
    plan.max_context_chars = config.max_context_chars;
    plan.query = result.query;
    for (const auto& id : result.prompt.plan_trace.example_ids) plan.examples.push_back(kb.example(id));
    for (const auto& id : result.prompt.plan_trace.context_ids) plan.contexts.push_back(kb.document(id));
    return assemble(plan);
}

Answer answer(const KnowledgeBase& kb, const Embedder& embedder, std::string_view query) {
    if (kb.index().size(ItemKind::Document) == 0) {
        throw Error(ErrorCode::EmptyCorpus, "empty corpus: no documents to answer from");
    }
    const EmbeddingVector v = run_stage(stage::kEmbed, [&] { return embedder.embed(query); });
    auto hits = kb.index().top_k(v, ItemKind::Document, 1);
    return Answer{&kb.document(hits.front().item_id), hits.front().score};
}

}  // namespace suggestkit
