// suggestkit command-line entry point.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "suggestkit/corpus.hpp"
#include "suggestkit/embedding.hpp"
#include "suggestkit/engine.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/evalkit.hpp"
#include "suggestkit/fixtures.hpp"
#include "suggestkit/hashing.hpp"
#include "suggestkit/llm.hpp"
#include "suggestkit/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace suggestkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

struct CorpusFlags {
    std::string corpus_dir;
    std::string documents;
    std::string examples;
    std::string cache;
    std::string embedder = "local";

    void add(CLI::App* app) {
        app->add_option("--corpus", corpus_dir, "Directory holding documents.jsonl and examples.jsonl");
        app->add_option("--documents", documents, "Documents file (overrides --corpus)");
        app->add_option("--examples", examples, "Examples file (overrides --corpus)");
        app->add_option("--cache", cache, "Embedding cache file");
        app->add_option("--embedder", embedder, "local | remote")->check(CLI::IsMember({"local", "remote"}));
    }

    fs::path documents_path() const {
        if (!documents.empty()) return documents;
        return fs::path(corpus_dir.empty() ? "." : corpus_dir) / "documents.jsonl";
    }
    fs::path examples_path() const {
        if (!examples.empty()) return examples;
        return fs::path(corpus_dir.empty() ? "." : corpus_dir) / "examples.jsonl";
    }
    Corpus load() const { return load_corpus(documents_path(), examples_path()); }
};

struct EngineFlags {
    std::string strategy = "dynamic-contexts";
    std::string order = "query-first";
    std::size_t k_examples = kDefaultExamples;
    std::size_t k_contexts = kDefaultContexts;
    std::string model;
    bool exclude_answer = false;
    bool headline_only = false;

    void add(CLI::App* app, bool with_strategy) {
        if (with_strategy) {
            app->add_option("--strategy", strategy, "zero | few | dynamic-few | dynamic-contexts")
                ->check(CLI::IsMember({"zero", "few", "dynamic-few", "dynamic-contexts"}));
            app->add_option("--order", order, "query-first | contexts-first")
                ->check(CLI::IsMember({"query-first", "contexts-first"}));
        }
        app->add_option("--k-examples", k_examples, "Retrieved examples for dynamic strategies");
        app->add_option("--k-contexts", k_contexts, "Retrieved contexts for dynamic-contexts");
        app->add_option("--model", model, "Chat model id passed to the provider");
        app->add_flag("--exclude-answer-document", exclude_answer,
                      "Drop the top-1 answer document from the contexts");
        app->add_flag("--headline-only", headline_only, "Embed documents by headline only");
    }

    Strategy make_strategy(StrategyKind kind) const {
        switch (kind) {
            case StrategyKind::ZeroShot: return Strategy::zero_shot();
            case StrategyKind::StaticFewShot: return Strategy::static_few_shot({});
            case StrategyKind::DynamicFewShot: return Strategy::dynamic_few_shot(k_examples);
            case StrategyKind::DynamicContexts: return Strategy::dynamic_contexts(k_examples, k_contexts);
        }
        return Strategy::zero_shot();
    }

    EngineConfig config() const {
        EngineConfig c;
        c.strategy = make_strategy(parse_strategy(strategy));
        c.order = parse_order(order);
        c.chat_model_id = model;
        c.exclude_answer_document = exclude_answer;
        c.document_text = headline_only ? DocumentText::HeadlineOnly : DocumentText::HeadlineAndBody;
        c.validate();
        return c;
    }
};

std::shared_ptr<const KnowledgeBase> knowledge_base(const CorpusFlags& cf, const Embedder& embedder,
                                                    const EngineConfig& config) {
    EmbeddingCache cache = EmbeddingCache::load(cf.cache);
    auto kb = build_knowledge_base(cf.load(), embedder, &cache, EmbedCorpusOptions{config.document_text}, 1);
    if (!cf.cache.empty()) cache.save(cf.cache);
    return kb;
}

void write_report(const std::string& out, const json& report) {
    if (out.empty()) return;
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + out);
    f << report.dump(2) << "\n";
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

// name=provider-spec pairs; a bare name resolves to <fixtures>/script-<name>.jsonl.
struct LoadedSystems {
    std::vector<std::unique_ptr<ChatProvider>> providers;
    std::vector<eval::SystemUnderTest> systems;
};

LoadedSystems load_systems(const std::vector<std::string>& specs, const std::string& fixtures_dir,
                           const std::string& model) {
    std::vector<std::string> list = specs;
    if (list.empty()) list.assign(fixtures::kSystems.begin(), fixtures::kSystems.end());
    LoadedSystems out;
    for (const auto& spec : list) {
        std::string name = spec;
        std::string provider;
        if (auto eq = spec.find('='); eq != std::string::npos) {
            name = spec.substr(0, eq);
            provider = spec.substr(eq + 1);
        } else {
            if (fixtures_dir.empty()) {
                throw Error(ErrorCode::InvalidInput, "system '" + spec + "' needs name=provider or --fixtures");
            }
            const auto path = fs::path(fixtures_dir) / ("script-" + name + ".jsonl");
            if (!fs::exists(path)) throw Error(ErrorCode::Io, "missing fixture " + path.string());
            provider = "scripted:" + path.string();
        }
        out.providers.push_back(make_chat_provider(provider));
        out.systems.push_back({name, out.providers.back().get(), model.empty() ? name : model});
    }
    return out;
}

std::string fixture_path(const std::string& explicit_path, const std::string& fixtures_dir, const char* name) {
    if (!explicit_path.empty()) return explicit_path;
    if (fixtures_dir.empty()) {
        throw Error(ErrorCode::InvalidInput, std::string("missing fixtures: pass --") + name + " or --fixtures");
    }
    const auto path = fs::path(fixtures_dir) / (std::string(name) + ".jsonl");
    if (!fs::exists(path)) throw Error(ErrorCode::Io, "missing fixture " + path.string());
    return path.string();
}

void print_skips(const std::vector<eval::Skip>& skips) {
    for (const auto& s : skips) {
        std::cerr << "skipped " << s.query_id << " [" << s.system << "]: " << s.reason << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Suggested-question generation over a document corpus"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic corpus");
    std::uint64_t synth_seed = 7;
    std::size_t synth_docs = 228, synth_examples = 35;
    std::string synth_out;
    bool synth_eval = false;
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--docs", synth_docs, "Number of documents");
    synth->add_option("--examples", synth_examples, "Number of QAS examples");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_flag("--eval-fixtures", synth_eval, "Also write evaluation fixtures under <out>/eval");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print its statistics");
    CorpusFlags ingest_cf;
    ingest_cf.add(ingest);

    // embed
    auto* embed = app.add_subcommand("embed", "Embed a corpus into the cache");
    CorpusFlags embed_cf;
    bool embed_headline_only = false;
    embed_cf.add(embed);
    embed->add_flag("--headline-only", embed_headline_only, "Embed documents by headline only");

    // suggest
    auto* sug = app.add_subcommand("suggest", "Generate 3 suggested questions for a query");
    CorpusFlags sug_cf;
    EngineFlags sug_ef;
    std::string sug_query, sug_provider;
    bool sug_verbose = false;
    sug_cf.add(sug);
    sug_ef.add(sug, true);
    sug->add_option("--query", sug_query, "User query")->required();
    sug->add_option("--provider", sug_provider, "scripted:<path> | remote")->required();
    sug->add_flag("--verbose,-v", sug_verbose, "Print the retrieval trace and prompt");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string serve_config, serve_bind;
    CorpusFlags serve_cf;
    std::string serve_provider;
    serve->add_option("--config", serve_config, "Service config file");
    serve->add_option("--bind", serve_bind, "host:port");
    serve_cf.add(serve);
    serve->add_option("--provider", serve_provider, "scripted:<path> | remote");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluation protocols");
    ev->require_subcommand(1);

    auto* cmp = ev->add_subcommand("compare", "Correct counts per strategy and system");
    CorpusFlags cmp_cf;
    EngineFlags cmp_ef;
    std::string cmp_fixtures, cmp_queries, cmp_labels, cmp_out;
    std::vector<std::string> cmp_systems, cmp_strategies;
    std::size_t cmp_jobs = 4;
    cmp_cf.add(cmp);
    cmp_ef.add(cmp, false);
    cmp->add_option("--fixtures", cmp_fixtures, "Directory written by synth --eval-fixtures");
    cmp->add_option("--queries", cmp_queries, "Queries file");
    cmp->add_option("--labels", cmp_labels, "Labels file");
    cmp->add_option("--system", cmp_systems, "name or name=scripted:<path>|remote (repeatable)");
    cmp->add_option("--strategies", cmp_strategies, "Strategies to run (default: all four)")
        ->check(CLI::IsMember({"zero", "few", "dynamic-few", "dynamic-contexts"}));
    cmp->add_option("--jobs", cmp_jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmp->add_option("--out", cmp_out, "Structured report path");

    auto* pref = ev->add_subcommand("preference", "Blind pairwise preference");
    std::string pref_fixtures, pref_items, pref_judge, pref_judge_name, pref_human, pref_out;
    std::string pref_left = "gpt-4", pref_right = "claude-2";
    std::uint64_t pref_seed = 42;
    std::optional<std::size_t> pref_total;
    std::size_t pref_jobs = 4;
    pref->add_option("--fixtures", pref_fixtures, "Directory written by synth --eval-fixtures");
    pref->add_option("--items", pref_items, "Items file with both systems' outputs");
    pref->add_option("--judge", pref_judge, "scripted:<path> | remote");
    pref->add_option("--judge-name", pref_judge_name, "Judge label in the report");
    pref->add_option("--human", pref_human, "Import human verdicts instead of running a judge");
    pref->add_option("--total", pref_total, "Expected number of human verdicts");
    pref->add_option("--left", pref_left, "Left system");
    pref->add_option("--right", pref_right, "Right system");
    pref->add_option("--seed", pref_seed, "Seed for the A/B assignment");
    pref->add_option("--jobs", pref_jobs, "Worker threads")->check(CLI::PositiveNumber);
    pref->add_option("--out", pref_out, "Structured report path");

    auto* abl = ev->add_subcommand("ablation", "Prompt-order ablation under dynamic-contexts");
    CorpusFlags abl_cf;
    EngineFlags abl_ef;
    std::string abl_fixtures, abl_queries, abl_labels, abl_out;
    std::vector<std::string> abl_systems;
    std::size_t abl_jobs = 4;
    abl_cf.add(abl);
    abl_ef.add(abl, false);
    abl->add_option("--fixtures", abl_fixtures, "Directory written by synth --eval-fixtures");
    abl->add_option("--queries", abl_queries, "Queries file");
    abl->add_option("--labels", abl_labels, "Labels file");
    abl->add_option("--system", abl_systems, "name or name=scripted:<path>|remote (repeatable)");
    abl->add_option("--jobs", abl_jobs, "Worker threads")->check(CLI::PositiveNumber);
    abl->add_option("--out", abl_out, "Structured report path");

    auto* age = ev->add_subcommand("age-check", "Flag suggested questions whose baby age differs from the query");
    std::string age_query, age_items, age_out;
    std::vector<std::string> age_questions;
    age->add_option("--query", age_query, "Query text");
    age->add_option("--question", age_questions, "Suggested question (repeatable)");
    age->add_option("--items", age_items, "Items file to check instead");
    age->add_option("--out", age_out, "Structured report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitError;
    }

    try {
        if (*synth) {
            Corpus corpus = synth_corpus(synth_seed, synth_docs, synth_examples);
            write_corpus(corpus, synth_out);
            json out = {{"documents", (fs::path(synth_out) / "documents.jsonl").string()},
                        {"examples", (fs::path(synth_out) / "examples.jsonl").string()}};
            if (synth_eval) {
                LocalEmbedder embedder;
                EngineConfig base;
                auto kb = build_knowledge_base(corpus, embedder);
                auto fx = fixtures::make_eval_fixtures(*kb, embedder, base, synth_seed);
                const auto dir = fs::path(synth_out) / "eval";
                fixtures::write_eval_fixtures(fx, dir);
                out["eval_fixtures"] = dir.string();
            }
            std::cout << out.dump() << "\n";
            return kExitOk;
        }

        if (*ingest) {
            const Corpus corpus = ingest_cf.load();
            const CorpusStats s = corpus_stats(corpus);
            json out = {{"documents", s.documents},
                        {"examples", s.examples},
                        {"suggestions", s.suggestions},
                        {"mean_body_length", s.mean_body_length},
                        {"mean_headline_length", s.mean_headline_length}};
            std::cout << out.dump() << "\n";
            return kExitOk;
        }

        if (*embed) {
            if (embed_cf.cache.empty()) throw Error(ErrorCode::InvalidInput, "embed needs --cache");
            auto embedder = make_embedder(embed_cf.embedder);
            const Corpus corpus = embed_cf.load();
            EmbedCorpusOptions opts;
            opts.document_text = embed_headline_only ? DocumentText::HeadlineOnly : DocumentText::HeadlineAndBody;
            auto res = embed_corpus(*embedder, corpus, embed_cf.cache, opts);
            json out = {{"records", res.records.size()},
                        {"provider_calls", res.provider_calls},
                        {"model_id", embedder->model_id()},
                        {"cache", embed_cf.cache}};
            std::cout << out.dump() << "\n";
            return kExitOk;
        }

        if (*sug) {
            const EngineConfig config = sug_ef.config();
            auto embedder = make_embedder(sug_cf.embedder);
            auto chat = make_chat_provider(sug_provider);
            auto kb = knowledge_base(sug_cf, *embedder, config);
            const auto r = suggest(config, *kb, Providers{*embedder, *chat}, sug_query);
            for (std::size_t i = 0; i < r.suggestions.questions().size(); ++i) {
                std::cout << (i + 1) << ". " << r.suggestions.questions()[i] << "\n";
            }
            if (sug_verbose) {
                auto ids = [](const std::vector<RetrievalHit>& hits) {
                    std::vector<std::string> v;
                    for (const auto& h : hits) v.push_back(h.item_id);
                    return v;
                };
                std::cout << "\n[trace]\n"
                          << "strategy: " << strategy_name(r.strategy.kind) << "\n"
                          << "order: " << order_name(r.order) << "\n"
                          << "example_ids: [" << join(ids(r.example_hits), ", ") << "]\n"
                          << "context_ids: [" << join(ids(r.context_hits), ", ") << "]\n"
                          << "prompt_hash: " << to_hex(r.prompt.prompt_hash) << "\n"
                          << "trace_key: " << r.trace_key << "\n"
                          << "\n[prompt]\n"
                          << r.prompt.text;
            }
            return kExitOk;
        }

        if (*serve) {
            ServiceConfig config = serve_config.empty() ? ServiceConfig{} : ServiceConfig::load(serve_config);
            config.apply_env();
            if (!serve_bind.empty()) config.set_bind(serve_bind);
            if (!serve_cf.corpus_dir.empty() || !serve_cf.documents.empty()) {
                config.documents_path = serve_cf.documents_path();
                config.examples_path = serve_cf.examples_path();
            }
            if (!serve_cf.cache.empty()) config.cache_path = serve_cf.cache;
            if (serve->count("--embedder") > 0) config.embedder = serve_cf.embedder;
            if (!serve_provider.empty()) config.chat_provider = serve_provider;
            return run_server(config);
        }

        if (*cmp) {
            EngineConfig base = cmp_ef.config();
            auto embedder = make_embedder(cmp_cf.embedder);
            auto kb = knowledge_base(cmp_cf, *embedder, base);
            const auto queries = eval::load_queries(fixture_path(cmp_queries, cmp_fixtures, "queries"));
            const auto labels = eval::LabelSet::load(fixture_path(cmp_labels, cmp_fixtures, "labels"));
            auto loaded = load_systems(cmp_systems, cmp_fixtures, cmp_ef.model);
            std::vector<Strategy> strategies;
            if (cmp_strategies.empty()) {
                cmp_strategies = {"zero", "few", "dynamic-few", "dynamic-contexts"};
            }
            for (const auto& s : cmp_strategies) strategies.push_back(cmp_ef.make_strategy(parse_strategy(s)));
            const auto report = eval::run_comparative(*kb, *embedder, base, queries, strategies, loaded.systems,
                                                      labels, {cmp_jobs});
            std::cout << report.to_table();
            print_skips(report.skipped);
            write_report(cmp_out, report.to_json());
            return kExitOk;
        }

        if (*pref) {
            eval::PreferenceReport report;
            if (!pref_human.empty()) {
                report = eval::run_human_preference_import(pref_human, pref_left, pref_right, pref_total);
            } else {
                if (pref_judge.empty()) throw Error(ErrorCode::InvalidInput, "preference needs --judge or --human");
                const auto items = eval::load_items(fixture_path(pref_items, pref_fixtures, "items"));
                auto judge = make_chat_provider(pref_judge);
                const std::string name = pref_judge_name.empty() ? judge->id() : pref_judge_name;
                report = eval::run_preference(items, pref_left, pref_right, *judge, name, pref_seed, {pref_jobs});
            }
            std::cout << report.to_table();
            print_skips(report.skipped);
            write_report(pref_out, report.to_json());
            return kExitOk;
        }

        if (*abl) {
            EngineConfig base = abl_ef.config();
            base.strategy = abl_ef.make_strategy(StrategyKind::DynamicContexts);
            auto embedder = make_embedder(abl_cf.embedder);
            auto kb = knowledge_base(abl_cf, *embedder, base);
            const auto queries = eval::load_queries(fixture_path(abl_queries, abl_fixtures, "queries"));
            const auto labels = eval::LabelSet::load(fixture_path(abl_labels, abl_fixtures, "labels"));
            auto loaded = load_systems(abl_systems, abl_fixtures, abl_ef.model);
            try {
                const auto report =
                    eval::run_ablation(*kb, *embedder, base, queries, loaded.systems, labels, {abl_jobs});
                std::cout << report.to_table();
                print_skips(report.skipped);
                write_report(abl_out, report.to_json());
            } catch (const Error& e) {
                if (e.code() != ErrorCode::RetrievalMismatch) throw;
                std::cerr << "check failed: " << e.what() << "\n";
                return kExitCheckFailed;
            }
            return kExitOk;
        }

        if (*age) {
            if (!age_items.empty()) {
                const auto report = eval::run_age_check(eval::load_items(age_items));
                std::cout << report.to_table();
                for (const auto& f : report.flags) {
                    std::cout << "mismatch " << f.query_id << " [" << f.system << "]: " << f.question << " ("
                              << f.details << ")\n";
                }
                write_report(age_out, report.to_json());
                return report.flags.empty() ? kExitOk : kExitCheckFailed;
            }
            if (age_query.empty() || age_questions.empty()) {
                throw Error(ErrorCode::InvalidInput, "age-check needs --items or --query with --question");
            }
            bool mismatch = false;
            json checks = json::array();
            for (const auto& q : age_questions) {
                const auto c = eval::check_age_consistency(age_query, q);
                std::cout << eval::age_status_name(c.status) << ": " << q;
                if (c.status == eval::AgeStatus::Mismatch) std::cout << " (" << c.details() << ")";
                std::cout << "\n";
                mismatch = mismatch || c.status == eval::AgeStatus::Mismatch;
                json j = c.to_json();
                j["question"] = q;
                checks.push_back(std::move(j));
            }
            write_report(age_out, {{"query", age_query}, {"checks", checks}});
            return mismatch ? kExitCheckFailed : kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}
