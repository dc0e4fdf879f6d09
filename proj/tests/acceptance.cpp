// Acceptance checks: one PASS/FAIL line per criterion, with pinned limits.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eval_fixture.hpp"
#include "fuzz.hpp"
#include "golden.hpp"
#include "jsonl.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "suggestkit/evalkit.hpp"
#include "suggestkit/hashing.hpp"
#include "test_util.hpp"

using namespace suggestkit;

namespace {

// Limits and tolerances.
constexpr double kGoldenLimitMs = 1000;
constexpr double kRetrievalLimitMs = 5000;
constexpr double kTable1LimitMs = 1000;
constexpr double kTable3LimitMs = 1000;
constexpr double kTable2LimitMs = 5000;
constexpr double kAgeLimitMs = 1000;
constexpr double kEndToEndLimitMs = 2000;
constexpr double kFuzzLimitMs = 2000;
constexpr int kPercentTolerance = 2;
constexpr std::size_t kRetrievalQueries = 100;
constexpr std::size_t kAgeCases = 1000;
constexpr std::size_t kFuzzCases = 500;

struct Outcome {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

int failures = 0;

void criterion(const std::string& name, double limit_ms, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (ms > limit_ms) o.expect(false, "over time limit");
    if (!o.ok) ++failures;
    char timing[96];
    std::snprintf(timing, sizeof timing, "(%.1f ms, limit %.0f ms)", ms, limit_ms);
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << name << "  " << timing;
    if (!o.detail.empty()) std::cout << "  " << o.detail;
    std::cout << std::endl;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

void prompt_golden(Outcome& o) {
    const auto p = assemble(testutil::golden_plan(PromptOrder::QueryFirst));
    const auto golden = detail::read_file(testutil::fixture("prompt_dynamic_contexts_query_first.txt"));
    o.expect(p.text == golden, "assembled prompt differs from golden file");
    o.expect(p.text.find("Remember in a month there are 4 weeks.") != std::string::npos, "missing 4-weeks sentence");
    o.expect(p.text.find("Only generate the questions.") != std::string::npos, "missing closing sentence");
    o.expect(count_of(p.text, "Suggested Questions:\n") == 3, "expected 3 example blocks");
    o.expect(count_of(p.text, "\nContext ") == 4, "expected 4 context lines");
    o.expect(p.prompt_hash == fnv1a64(golden), "prompt hash");
}

void retrieval_oracle(Outcome& o) {
    const Corpus corpus = synth_corpus(7, 228, 35);
    LocalEmbedder embedder;
    EmbeddingCache cache;
    const auto embedded = embed_corpus(embedder, corpus, cache);
    const VectorIndex index(embedded.records);

    std::vector<std::pair<std::string, std::vector<double>>> pool;
    std::vector<std::string> vocab;
    std::set<std::string> seen;
    for (const auto& d : corpus.documents) {
        pool.emplace_back(d.id, embed_local(d.headline + "\n" + d.body).values);
        for (auto& t : tokenize(d.headline + " " + d.body)) {
            if (seen.insert(t).second) vocab.push_back(t);
        }
    }
    o.expect(index.size(ItemKind::Document) == 228, "index size");

    std::mt19937_64 rng(2024);
    for (std::size_t q = 0; q < kRetrievalQueries; ++q) {
        std::string query;
        const std::size_t words = 2 + rng() % 8;
        for (std::size_t w = 0; w < words; ++w) query += vocab[rng() % vocab.size()] + " ";
        const auto got = index.top_k(embedder.embed(query), ItemKind::Document, 4);
        const auto want = oracle::brute_force_top_k(embed_local(query).values, pool, 4);
        bool same = got.size() == want.size();
        for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i].item_id == want[i].first;
        o.expect(same, "mismatch on query " + std::to_string(q) + ": " + query);
    }
}

void table1(Outcome& o, const testutil::EvalWorld& w) {
    const auto report = eval::run_comparative(*w.kb, w.embedder, w.base, w.fx.queries, w.strategies(),
                                              w.systems(), w.fx.labels);
    const std::size_t expected[4][3] = {{35, 30, 43}, {42, 35, 40}, {42, 35, 43}, {44, 44, 46}};
    o.expect(report.total == 48, "48 queries");
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t k = 0; k < 3; ++k) {
            o.expect(report.correct[s][k] == expected[s][k],
                     "cell " + std::to_string(s) + "," + std::to_string(k) + " = " +
                         std::to_string(report.correct[s][k]));
        }
    }
}

void table3(Outcome& o, const testutil::EvalWorld& w) {
    const auto human = eval::import_human_preferences(w.fx.human_verdicts, "gpt-4", "claude-2", 48);
    o.expect(human.left == 21 && human.right == 16 && human.tie == 11, "human counts");
    const auto g = eval::run_preference(w.fx.preference_items, "gpt-4", "claude-2", *w.judges.at("gpt-4"), "gpt-4", 42);
    o.expect(g.left == 21 && g.right == 27 && g.tie == 0, "gpt-4 judge counts");
    const auto c = eval::run_preference(w.fx.preference_items, "gpt-4", "claude-2", *w.judges.at("claude-2"),
                                        "claude-2", 42);
    o.expect(c.left == 24 && c.right == 24 && c.tie == 0, "claude-2 judge counts");

    auto near = [](int got, int want) { return std::abs(got - want) <= kPercentTolerance; };
    o.expect(near(human.left_share().rounded_percent(), 43), "human gpt-4 share vs 43%");
    o.expect(near(human.right_share().rounded_percent(), 33), "human claude-2 share vs 33%");
    o.expect(near(human.tie_share().rounded_percent(), 24), "human tie share vs 24%");
    o.expect(near(g.right_share().rounded_percent(), 57), "gpt-4 judge claude-2 share vs 57%");
    o.expect(human.judged() == 48 && g.judged() == 48 && c.judged() == 48, "count conservation");
}

void table2(Outcome& o, const testutil::EvalWorld& w) {
    const auto r = eval::run_ablation(*w.kb, w.embedder, w.base, w.fx.queries, w.systems(), w.fx.labels);
    o.expect(r.traces.size() == 48, "48 traces");
    o.expect(r.retrieval_sets_equal(), "retrieval-set hashes differ");
    for (std::size_t i = 0; i < r.systems.size(); ++i) {
        o.expect(r.query_first[i] == r.contexts_first[i], "counts differ for " + r.systems[i]);
        if (r.systems[i] == "gpt-4") o.expect(r.query_first[i] == 46, "gpt-4 46/46");
        if (r.systems[i] == "claude-2") o.expect(r.query_first[i] == 44, "claude-2 44/44");
    }
}

void age_suite(Outcome& o) {
    using eval::AgeStatus;
    o.expect(eval::check_age_consistency("My 13 weeks old baby wakes every hour",
                                         "How can I help my 13 months old baby sleep?")
                     .status == AgeStatus::Mismatch,
             "13 weeks vs 13 months not flagged");
    o.expect(eval::check_age_consistency("Naps for a 4 months old", "How long should a 16 weeks old nap?").status ==
                 AgeStatus::Consistent,
             "4 months vs 16 weeks rejected");

    const char* units[] = {"week", "month", "year"};
    const int weeks_per[] = {1, 4, 48};
    std::mt19937_64 rng(99);
    for (std::size_t i = 0; i < kAgeCases; ++i) {
        const int n = 1 + static_cast<int>(rng() % 24);
        const int u = static_cast<int>(rng() % 3);
        const long long weeks = static_cast<long long>(n) * weeks_per[u];
        const std::string plural = n == 1 ? "" : "s";
        const std::string query = "Bedtime for my " + std::to_string(n) + " " + units[u] + plural + " old?";
        // Same age written in another unit when it divides evenly.
        int v = static_cast<int>(rng() % 3);
        while (weeks % weeks_per[v] != 0) v = (v + 2) % 3;
        const long long m = weeks / weeks_per[v];
        const std::string same = "Naps for a " + std::to_string(m) + " " + units[v] + (m == 1 ? "" : "s") + " old?";
        const auto c = eval::check_age_consistency(query, same);
        o.expect(c.status == AgeStatus::Consistent, "case " + std::to_string(i) + ": " + query + " / " + same);
        const std::string off = "Naps for a " + std::to_string(weeks + 1) + " weeks old?";
        o.expect(eval::check_age_consistency(query, off).status == AgeStatus::Mismatch,
                 "case " + std::to_string(i) + ": " + off + " not flagged");
    }
}

struct EndToEndSetup {
    testutil::TempDir dir;
    std::string query;
    EndToEndSetup() {
        const Corpus c = synth_corpus(7, 228, 35);
        write_corpus(c, dir.path());
        query = c.documents[17].headline;
        std::map<std::string, std::string> script = {
            {query, "Here are three questions:\n1. How long should each nap last?\n2. When should bedtime be?\n"
                    "3. How many night feeds are normal?"}};
        detail::write_file(dir / "script.jsonl", serialize_script(script));
    }
};

void end_to_end(Outcome& o, const EndToEndSetup& s) {
    using testutil::quote;
    const std::string cmd = quote(SUGGESTKIT_CLI_PATH) + " suggest --corpus " + quote(s.dir.path().string()) +
                            " --strategy dynamic-contexts --verbose --query " + quote(s.query) +
                            " --provider scripted:" + quote((s.dir / "script.jsonl").string());
    const auto a = testutil::run_command(cmd);
    const auto b = testutil::run_command(cmd);
    o.expect(a.exit_code == 0 && b.exit_code == 0, "suggest exited non-zero");
    o.expect(a.out == b.out, "outputs differ");
    o.expect(a.out.rfind("1. How long should each nap last?\n2. When should bedtime be?\n"
                         "3. How many night feeds are normal?\n", 0) == 0,
             "three parsed questions not printed first");
}

void parser_fuzz(Outcome& o) {
    std::mt19937_64 rng(500);
    std::size_t ok = 0, typed = 0;
    for (std::size_t i = 0; i < kFuzzCases; ++i) {
        const auto c = fuzz::make_case(rng);
        try {
            const auto s = parse_suggestions(c.text);
            o.expect(s.questions().size() == 3, "case " + std::to_string(i) + " returned " +
                                                    std::to_string(s.questions().size()));
            o.expect(!c.error && s.questions() == c.questions, "case " + std::to_string(i) + " wrong questions");
            ++ok;
        } catch (const Error& e) {
            const bool known = e.code() == ErrorCode::TooFewQuestions || e.code() == ErrorCode::DuplicateQuestion;
            o.expect(known, "case " + std::to_string(i) + " untyped error");
            o.expect(c.error && *c.error == e.code(), "case " + std::to_string(i) + " unexpected " +
                                                          std::string(error_code_name(e.code())));
            ++typed;
        }
    }
    o.expect(ok > 0 && typed > 0, "fuzz corpus lacks one outcome class");
    o.detail = o.ok ? std::to_string(ok) + " parsed, " + std::to_string(typed) + " typed errors" : o.detail;
}

}  // namespace

int main() {
    criterion("prompt golden (dynamic contexts, 3 examples, 4 contexts, query-first)", kGoldenLimitMs, prompt_golden);
    criterion("retrieval oracle (228 docs, k=4, 100 queries)", kRetrievalLimitMs, retrieval_oracle);

    const testutil::EvalWorld world;
    criterion("table 1 bookkeeping", kTable1LimitMs, [&](Outcome& o) { table1(o, world); });
    criterion("table 3 bookkeeping (+/-2 points)", kTable3LimitMs, [&](Outcome& o) { table3(o, world); });
    criterion("table 2 ablation (48 queries)", kTable2LimitMs, [&](Outcome& o) { table2(o, world); });
    criterion("age consistency suite (1000 property cases)", kAgeLimitMs, age_suite);

    const EndToEndSetup e2e;
    criterion("end-to-end CLI determinism", kEndToEndLimitMs, [&](Outcome& o) { end_to_end(o, e2e); });
    criterion("suggestion parser fuzz (500 responses)", kFuzzLimitMs, parser_fuzz);

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
