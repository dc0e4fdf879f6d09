#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace suggestkit {

// A blog-style post: the headline acts as a query, the body as its answer.
struct Document {
    std::string id;
    std::string headline;
    std::string body;
    std::vector<std::string> tags;

    bool operator==(const Document&) const = default;
};

// Annotated few-shot exemplar: query, answer and 1..3 suggestion questions.
struct QASExample {
    std::string id;
    std::string query;
    std::string answer;
    std::vector<std::string> suggestions;

    bool operator==(const QASExample&) const = default;
};

struct Corpus {
    std::vector<Document> documents;
    std::vector<QASExample> examples;

    bool operator==(const Corpus&) const = default;
};

struct CorpusStats {
    std::size_t documents = 0;
    std::size_t examples = 0;
    std::size_t suggestions = 0;
    double mean_body_length = 0.0;  // bytes
    double mean_headline_length = 0.0;
};

inline constexpr std::size_t kMaxSuggestionsPerExample = 3;

// Throws Error{DuplicateId | InvalidInput} on the first violated invariant.
void validate(const Corpus& corpus);

// Line-delimited record parsing. `source` names the input in error messages.
std::vector<Document> parse_documents(std::string_view text, std::string_view source = "documents");
std::vector<QASExample> parse_examples(std::string_view text, std::string_view source = "examples");

Corpus load_corpus(const std::filesystem::path& documents_path,
                   const std::filesystem::path& examples_path);

std::string serialize_documents(const std::vector<Document>& documents);
std::string serialize_examples(const std::vector<QASExample>& examples);

// Writes documents.jsonl and examples.jsonl under `dir`.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
void write_corpus(const Corpus& corpus,
                  const std::filesystem::path& documents_path,
                  const std::filesystem::path& examples_path);

/// Deterministic stand-in corpus of sleep-coaching posts. Headlines carry age
/// phrases ("N weeks old", "N months old") and are unique within a corpus.
/// Examples are drawn from distinct documents and reuse their headline/body.
Corpus synth_corpus(std::uint64_t seed, std::size_t n_docs, std::size_t n_examples);

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace suggestkit
