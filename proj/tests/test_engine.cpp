#include <doctest/doctest.h>

#include "oracle.hpp"
#include "suggestkit/engine.hpp"
#include "suggestkit/hashing.hpp"
#include "test_util.hpp"

using namespace suggestkit;
using testutil::capture_error;

namespace {

constexpr const char* kReply = "Suggested questions:\n1. How long should naps be?\n2. When is bedtime?\n3. How many feeds?";

struct Fixture {
    LocalEmbedder embedder;
    std::shared_ptr<const KnowledgeBase> kb = build_knowledge_base(synth_corpus(7, 60, 12), embedder);
};

SuggestionResult run(const Fixture& f, const EngineConfig& config, const ChatProvider& chat,
                     const std::string& query) {
    return suggest(config, *f.kb, Providers{f.embedder, chat}, query);
}

}  // namespace

TEST_CASE("dynamic contexts pipeline") {
    Fixture f;
    const std::string query = f.kb->corpus().documents[5].headline;
    ScriptedProvider chat(Script{{query, kReply}});
    EngineConfig config;
    const auto r = run(f, config, chat, query);

    CHECK(r.suggestions.questions().size() == 3);
    CHECK(r.example_hits.size() == 3);
    CHECK(r.context_hits.size() == 4);
    CHECK(r.prompt.plan_trace.context_ids.size() == 4);
    CHECK(r.prompt.prompt_hash == fnv1a64(r.prompt.text));
    CHECK(r.suggestions.prompt_hash() == r.prompt.prompt_hash);
    CHECK(r.query == query);
    CHECK(replay_prompt(config, *f.kb, r).text == r.prompt.text);

    // Retrieval agrees with a brute-force ranking over the indexed vectors.
    std::vector<std::pair<std::string, std::vector<double>>> pool;
    for (const auto& d : f.kb->corpus().documents) {
        pool.emplace_back(d.id, embed_local(d.headline + "\n" + d.body).values);
    }
    const auto want = oracle::brute_force_top_k(embed_local(query).values, pool, 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.context_hits[i].item_id == want[i].first);
}

TEST_CASE("zero-shot retrieves nothing") {
    Fixture f;
    ScriptedProvider chat(Script{{"q about naps", kReply}});
    EngineConfig config;
    config.strategy = Strategy::zero_shot();
    const auto r = run(f, config, chat, "q about naps");
    CHECK(r.example_hits.empty());
    CHECK(r.context_hits.empty());
    CHECK(r.prompt.text.find("Answer:") == std::string::npos);
}

TEST_CASE("static few-shot uses the first three example ids for every query") {
    Fixture f;
    ScriptedProvider chat({}, false, kReply);
    EngineConfig config;
    config.strategy = Strategy::static_few_shot({});
    const auto ids = default_static_example_ids(f.kb->corpus());
    for (const char* q : {"naps", "bedtime routine", "night feeding at 3 months old"}) {
        const auto r = run(f, config, chat, q);
        CHECK(r.prompt.plan_trace.example_ids == ids);
        CHECK(r.context_hits.empty());
    }
    config.strategy = Strategy::static_few_shot({"ex-missing", "a", "b"});
    CHECK(capture_error([&] { run(f, config, chat, "naps"); }).stage() == "retrieve");
    config.strategy.static_example_ids = {"a"};
    CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("k overrides") {
    Fixture f;
    ScriptedProvider chat({}, false, kReply);
    EngineConfig config;
    config.strategy = Strategy::dynamic_contexts(2, 3);
    const auto r = run(f, config, chat, "wake windows");
    CHECK(r.example_hits.size() == 2);
    CHECK(r.context_hits.size() == 3);
    CHECK(r.prompt.text.find("Context 3:") != std::string::npos);
    CHECK(r.prompt.text.find("Context 4:") == std::string::npos);

    config.strategy.k_contexts = 0;
    CHECK_THROWS_AS(run(f, config, chat, "wake windows"), Error);
}

TEST_CASE("errors are tagged with their stage") {
    Fixture f;
    EngineConfig config;
    ScriptedProvider empty(Script{});
    auto e = capture_error([&] { run(f, config, empty, "   "); });
    CHECK(e.code() == ErrorCode::EmptyText);

    e = capture_error([&] { run(f, config, empty, "naps"); });
    CHECK(e.code() == ErrorCode::MissingScriptKey);
    CHECK(e.stage() == "complete");
    CHECK(std::string(e.what()).rfind("complete: ", 0) == 0);

    ScriptedProvider bad({}, false, "I cannot help with that.");
    e = capture_error([&] { run(f, config, bad, "naps"); });
    CHECK(e.code() == ErrorCode::TooFewQuestions);
    CHECK(e.stage() == "parse");

    ScriptedProvider dup({}, false, "A?\nA?\nB?");
    CHECK(capture_error([&] { run(f, config, dup, "naps"); }).code() == ErrorCode::DuplicateQuestion);
}

TEST_CASE("scripted keys: prompt hash, trace key, then query") {
    Fixture f;
    EngineConfig config;
    ScriptedProvider probe({}, false, kReply);
    const auto first = run(f, config, probe, "naps");

    ScriptedProvider by_trace(Script{{first.trace_key, "T1?\nT2?\nT3?"}, {"naps", "Q1?\nQ2?\nQ3?"}});
    CHECK(run(f, config, by_trace, "naps").suggestions.questions()[0] == "T1?");
    ScriptedProvider by_hash(Script{{to_hex(first.prompt.prompt_hash), "H1?\nH2?\nH3?"}, {first.trace_key, "T1?\nT2?\nT3?"}});
    CHECK(run(f, config, by_hash, "naps").suggestions.questions()[0] == "H1?");
}

TEST_CASE("trace key ignores prompt order") {
    Fixture f;
    ScriptedProvider chat({}, false, kReply);
    EngineConfig qf, cf;
    cf.order = PromptOrder::ContextsFirst;
    const auto a = run(f, qf, chat, "short naps at 5 months old");
    const auto b = run(f, cf, chat, "short naps at 5 months old");
    CHECK(a.prompt.text != b.prompt.text);
    CHECK(a.trace_key == b.trace_key);
    CHECK(retrieval_set_hash(a.prompt.plan_trace) == retrieval_set_hash(b.prompt.plan_trace));

    EngineConfig few;
    few.strategy = Strategy::dynamic_few_shot();
    CHECK(run(f, few, chat, "short naps at 5 months old").trace_key != a.trace_key);
}

TEST_CASE("answer returns the top document") {
    Fixture f;
    std::vector<std::pair<std::string, std::vector<double>>> pool;
    for (const auto& d : f.kb->corpus().documents) {
        pool.emplace_back(d.id, embed_local(d.headline + "\n" + d.body).values);
    }
    for (std::size_t i = 0; i < 10; ++i) {
        const auto& doc = f.kb->corpus().documents[i * 5];
        const auto a = answer(*f.kb, f.embedder, doc.headline);
        const auto want = oracle::brute_force_top_k(embed_local(doc.headline).values, pool, 1);
        CHECK(a.document->id == want[0].first);
        CHECK(a.score == want[0].second);
    }
}

TEST_CASE("answer on an empty index") {
    LocalEmbedder e;
    KnowledgeBase kb(Corpus{}, VectorIndex{});
    CHECK(capture_error([&] { answer(kb, e, "naps"); }).code() == ErrorCode::EmptyCorpus);
}

TEST_CASE("context pool and answer-document exclusion") {
    Fixture f;
    ScriptedProvider chat({}, false, kReply);
    const auto& target = f.kb->corpus().documents[3];
    EngineConfig config;
    const auto plain = run(f, config, chat, target.headline);
    config.exclude_answer_document = true;
    const auto excluded = run(f, config, chat, target.headline);
    const std::string top = answer(*f.kb, f.embedder, target.headline).document->id;
    CHECK(plain.context_hits[0].item_id == top);
    CHECK(excluded.context_hits.size() == 4);
    for (const auto& h : excluded.context_hits) CHECK(h.item_id != top);
    CHECK(excluded.context_hits[0].item_id == plain.context_hits[1].item_id);

    EngineConfig pooled;
    pooled.context_pool = {"d0001", "d0002"};
    const auto p = run(f, pooled, chat, target.headline);
    CHECK(p.context_hits.size() == 2);
    for (const auto& h : p.context_hits) CHECK((h.item_id == "d0001" || h.item_id == "d0002"));
}

TEST_CASE("dynamic strategies tolerate a corpus without examples") {
    LocalEmbedder embedder;
    Corpus c = synth_corpus(1, 8, 0);
    auto kb = build_knowledge_base(c, embedder);
    ScriptedProvider chat({}, false, kReply);
    const auto r = suggest(EngineConfig{}, *kb, Providers{embedder, chat}, "naps");
    CHECK(r.example_hits.empty());
    CHECK(r.context_hits.size() == 4);
    CHECK(r.prompt.text.find("Here are some examples:") == std::string::npos);
}
