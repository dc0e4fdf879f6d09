#include <doctest/doctest.h>

#include <nlohmann/json.hpp>

#include "jsonl.hpp"
#include "process.hpp"
#include "suggestkit/llm.hpp"
#include "test_util.hpp"

using testutil::quote;
using testutil::run_command;

namespace {

const std::string kCli = SUGGESTKIT_CLI_PATH;

std::string cli(const std::string& args) { return quote(kCli) + " " + args; }

struct CorpusDir {
    testutil::TempDir dir;
    CorpusDir() {
        const auto r = run_command(cli("synth --seed 7 --docs 60 --examples 10 --out " + quote(dir.path().string())));
        REQUIRE(r.exit_code == 0);
        std::map<std::string, std::string> script = {
            {"How many naps at 4 months old?", "1. How long is each nap?\n2. When is the first nap?\n3. How long are wake windows?"}};
        suggestkit::detail::write_file(dir / "script.jsonl", suggestkit::serialize_script(script));
    }
    std::string path() const { return quote(dir.path().string()); }
    std::string script() const { return quote((dir / "script.jsonl").string()); }
};

}  // namespace

TEST_CASE("synth writes two files and is reproducible") {
    testutil::TempDir a, b;
    const auto ra = run_command(cli("synth --seed 7 --docs 228 --examples 35 --out " + quote(a.path().string())));
    const auto rb = run_command(cli("synth --seed 7 --docs 228 --examples 35 --out " + quote(b.path().string())));
    CHECK(ra.exit_code == 0);
    CHECK(rb.exit_code == 0);
    for (const char* f : {"documents.jsonl", "examples.jsonl"}) {
        CHECK(suggestkit::detail::read_file(a / f) == suggestkit::detail::read_file(b / f));
    }
    CHECK(run_command(cli("synth --seed 7 --docs 10 --examples 50 --out " + quote((a / "x").string()))).exit_code == 1);
}

TEST_CASE("ingest prints stats") {
    CorpusDir c;
    const auto r = run_command(cli("ingest --corpus " + c.path()));
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["documents"] == 60);
    CHECK(j["examples"] == 10);
    CHECK(j["suggestions"] == 30);
}

TEST_CASE("suggest prints three questions and a trace") {
    CorpusDir c;
    const std::string base = "suggest --corpus " + c.path() + " --query 'How many naps at 4 months old?' --provider scripted:" + c.script();
    const auto r = run_command(cli(base));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "1. How long is each nap?\n2. When is the first nap?\n3. How long are wake windows?\n");

    const auto three = run_command(cli(base + " --k-contexts 3 --verbose"));
    REQUIRE(three.exit_code == 0);
    CHECK(three.out.find("\nContext 3: ") != std::string::npos);
    CHECK(three.out.find("\nContext 4: ") == std::string::npos);

    const auto zero = run_command(cli(base + " --strategy zero --verbose"));
    REQUIRE(zero.exit_code == 0);
    CHECK(zero.out.find("example_ids: []") != std::string::npos);
    CHECK(zero.out.find("strategy: zero") != std::string::npos);
}

TEST_CASE("suggest failures exit 1") {
    CorpusDir c;
    const auto missing = run_command(cli("suggest --corpus " + c.path() + " --query 'unscripted' --provider scripted:" + c.script()));
    CHECK(missing.exit_code == 1);
    CHECK(missing.out.empty());
    const auto stage = run_command(cli("suggest --corpus " + c.path() + " --query 'unscripted' --provider scripted:" + c.script()) + " 2>&1 >/dev/null");
    CHECK(stage.out.find("complete: ") != std::string::npos);
    CHECK(run_command(cli("suggest --query q --provider scripted:x --bogus")).exit_code == 1);
    CHECK(run_command(cli("suggest --corpus /nonexistent --query q --provider scripted:" + c.script())).exit_code == 1);
}

TEST_CASE("help is available on every subcommand") {
    for (const char* sub : {"", "synth", "ingest", "embed", "suggest", "serve", "eval", "eval compare",
                            "eval preference", "eval ablation", "eval age-check"}) {
        const auto r = run_command(cli(std::string(sub) + " --help"));
        CHECK_MESSAGE(r.exit_code == 0, sub);
        CHECK(r.out.find("Usage") != std::string::npos);
    }
}

TEST_CASE("age-check exit codes") {
    CHECK(run_command(cli("eval age-check --query 'My 13 weeks old wakes at night' "
                          "--question 'What helps a 13 months old sleep?'")).exit_code == 2);
    CHECK(run_command(cli("eval age-check --query 'My 4 months old wakes at night' "
                          "--question 'Is 16 weeks too early for sleep training?'")).exit_code == 0);
}

TEST_CASE("eval reports from synthesized fixtures") {
    testutil::TempDir dir;
    const std::string d = quote(dir.path().string());
    REQUIRE(run_command(cli("synth --seed 7 --docs 228 --examples 35 --eval-fixtures --out " + d)).exit_code == 0);
    const std::string fx = quote((dir / "eval").string());

    const auto cmp = run_command(cli("eval compare --corpus " + d + " --fixtures " + fx + " --jobs 2 --out " +
                                     quote((dir / "cmp.json").string())));
    REQUIRE(cmp.exit_code == 0);
    CHECK(cmp.out.find("Dynamic Contexts") != std::string::npos);
    const auto cj = nlohmann::json::parse(suggestkit::detail::read_file(dir / "cmp.json"));
    CHECK(cj["total"] == 48);

    const auto pref = run_command(cli("eval preference --fixtures " + fx + " --seed 42 --judge scripted:" +
                                      quote((dir / "eval" / "judge-gpt-4.jsonl").string()) + " --out " +
                                      quote((dir / "pref.json").string())));
    REQUIRE(pref.exit_code == 0);
    const auto pj = nlohmann::json::parse(suggestkit::detail::read_file(dir / "pref.json"));
    const auto& counts = pj["counts"];
    CHECK(counts["gpt-4"].get<int>() + counts["claude-2"].get<int>() + counts["tie"].get<int>() == 48);

    const auto abl = run_command(cli("eval ablation --corpus " + d + " --fixtures " + fx));
    CHECK(abl.exit_code == 0);
    CHECK(abl.out.find("identical retrieval sets 48/48") != std::string::npos);

    CHECK(run_command(cli("eval compare --corpus " + d + " --fixtures " + quote((dir / "nope").string()))).exit_code == 1);
}
