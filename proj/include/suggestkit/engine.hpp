#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "suggestkit/corpus.hpp"
#include "suggestkit/embedding.hpp"
#include "suggestkit/index.hpp"
#include "suggestkit/llm.hpp"
#include "suggestkit/promptkit.hpp"

namespace suggestkit {

struct EngineConfig {
    Strategy strategy = Strategy::dynamic_contexts();
    PromptOrder order = PromptOrder::QueryFirst;
    std::string system_instruction = std::string(default_system_instruction());
    std::string chat_model_id;
    double temperature = 0.0;
    int max_tokens = 256;
    std::optional<std::size_t> max_context_chars;
    // Restricts context retrieval to these document ids (empty = every document).
    std::vector<std::string> context_pool;
    // Drop the top-1 answer document from the suggestion contexts.
    bool exclude_answer_document = false;
    DocumentText document_text = DocumentText::HeadlineAndBody;

    // Throws Error{InvalidInput} when k_contexts < 1 for DynamicContexts.
    void validate() const;
};

// Corpus plus its index, immutable once built. `generation` identifies the build.
class KnowledgeBase {
public:
    KnowledgeBase(Corpus corpus, VectorIndex index, std::uint64_t generation = 0);

    const Corpus& corpus() const noexcept { return corpus_; }
    const VectorIndex& index() const noexcept { return index_; }
    std::uint64_t generation() const noexcept { return generation_; }

    const Document& document(const std::string& id) const;
    const QASExample& example(const std::string& id) const;
    bool has_document(const std::string& id) const { return doc_pos_.contains(id); }
    bool has_example(const std::string& id) const { return example_pos_.contains(id); }

private:
    Corpus corpus_;
    VectorIndex index_;
    std::uint64_t generation_;
    std::unordered_map<std::string, std::size_t> doc_pos_;
    std::unordered_map<std::string, std::size_t> example_pos_;
};

// Embeds the corpus (through `cache` when given) and builds the index.
std::shared_ptr<const KnowledgeBase> build_knowledge_base(Corpus corpus, const Embedder& embedder,
                                                          EmbeddingCache* cache = nullptr,
                                                          const EmbedCorpusOptions& options = {},
                                                          std::uint64_t generation = 0);

struct Providers {
    const Embedder& embedder;
    const ChatProvider& chat;
};

struct SuggestionResult {
    std::string query;
    SuggestionSet suggestions;
    std::vector<RetrievalHit> example_hits;
    std::vector<RetrievalHit> context_hits;
    AssembledPrompt prompt;
    Strategy strategy;
    PromptOrder order = PromptOrder::QueryFirst;
    std::string trace_key;
    std::uint64_t generation = 0;
};

// Selection stage only: what suggest() would retrieve and render, before completion.
struct PreparedPrompt {
    std::vector<RetrievalHit> example_hits;
    std::vector<RetrievalHit> context_hits;
    AssembledPrompt prompt;
    std::string trace_key;
};

PreparedPrompt prepare_prompt(const EngineConfig& config, const KnowledgeBase& kb,
                              const Embedder& embedder, std::string_view query);

/// query -> embed -> top_k(examples) -> top_k(documents) -> assemble -> complete -> parse.
/// Errors from each stage are rethrown tagged with the stage name.
SuggestionResult suggest(const EngineConfig& config, const KnowledgeBase& kb,
                         const Providers& providers, std::string_view query);

// Order-independent digest of what was retrieved for a query under a strategy.
std::string retrieval_trace_key(const Strategy& strategy, std::string_view query,
                                const PlanTrace& trace);
// Digest of the retrieved id sets only, used to compare ablation orders.
std::uint64_t retrieval_set_hash(const PlanTrace& trace);

// Rebuilds the prompt from a result's trace; must reproduce result.prompt.
AssembledPrompt replay_prompt(const EngineConfig& config, const KnowledgeBase& kb,
                              const SuggestionResult& result);

struct Answer {
    const Document* document = nullptr;
    double score = 0.0;
};

// Top-1 document by cosine similarity to the query.
Answer answer(const KnowledgeBase& kb, const Embedder& embedder, std::string_view query);

}  // namespace suggestkit
