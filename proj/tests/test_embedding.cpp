#include <doctest/doctest.h>

#include <atomic>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fake_server.hpp"
#include "suggestkit/embedding.hpp"
#include "suggestkit/hashing.hpp"
#include "test_util.hpp"

using namespace suggestkit;
using testutil::capture_error;

namespace {

// Expected vector from frozen (bucket, value) pairs.
void check_vector(const EmbeddingVector& v, const std::vector<std::pair<std::size_t, double>>& nonzero) {
    REQUIRE(v.dim() == kLocalDim);
    std::vector<double> expected(kLocalDim, 0.0);
    for (auto [i, value] : nonzero) expected[i] = value;
    for (std::size_t i = 0; i < kLocalDim; ++i) {
        CHECK_MESSAGE(v.values[i] == doctest::Approx(expected[i]).epsilon(1e-15), "bucket " << i);
    }
}

class CountingEmbedder final : public Embedder {
public:
    std::string provider_id() const override { return "counting"; }
    std::string model_id() const override { return model; }
    std::size_t dim() const override { return kLocalDim; }
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
        calls += texts.size();
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) {
            auto v = embed_local(t);
            v.provider_id = provider_id();
            v.model_id = model;
            out.push_back(std::move(v));
        }
        return out;
    }
    std::string model = "m1";
    mutable std::atomic<std::size_t> calls{0};
};

Corpus tiny_corpus() {
    Corpus c;
    c.documents = {testutil::doc("d1", "Nap schedule", "Three naps."), testutil::doc("d2", "Bedtime", "Early.")};
    c.examples = {testutil::example("e1", "Baby sleep", "Sleep tips.", {"When to nap?"})};
    return c;
}

}  // namespace

TEST_CASE("tokenize lowercases ASCII alphanumeric runs") {
    CHECK(tokenize("Sleep regression at 4 months!") ==
          std::vector<std::string>{"sleep", "regression", "at", "4", "months"});
    CHECK(tokenize("  --  ").empty());
    CHECK(tokenize("caf\xc3\xa9 naps") == std::vector<std::string>{"caf", "naps"});
}

TEST_CASE("embed_local matches frozen bucket vectors") {
    // Buckets are fnv1a64(token) % 256, computed independently.
    check_vector(embed_local("nap schedule"), {{108, 0.7071067811865475}, {192, 0.7071067811865475}});
    check_vector(embed_local("baby sleep"), {{201, 0.7071067811865475}, {72, 0.7071067811865475}});
    const double f = 0.4472135954999579;
    check_vector(embed_local("sleep regression at 4 months"), {{72, f}, {48, f}, {104, f}, {227, f}, {162, f}});
    CHECK(fnv1a64("nap") == 0x212bbe19256705c0ULL);
    CHECK(fnv1a64("schedule") == 0xefc7af8dac33976cULL);
}

TEST_CASE("embed_local edge cases") {
    const auto zero = embed_local("!!!");
    CHECK(zero.dim() == kLocalDim);
    CHECK(zero.norm() == 0.0);
    CHECK(embed_local("Nap Schedule") == embed_local("nap schedule"));
    CHECK(embed_local("nap nap").values[192] == doctest::Approx(1.0));
    CHECK(embed_local("x").model_id == kLocalModelId);

    LocalEmbedder e;
    CHECK(capture_error([&] { e.embed("   "); }).code() == ErrorCode::EmptyText);
    CHECK(e.embed("naps").norm() == doctest::Approx(1.0));
}

TEST_CASE("cache round trip keeps 64-bit hashes") {
    EmbeddingCache cache;
    EmbeddingRecord r{"d1", ItemKind::Document, embed_local("nap schedule"), 0xfedcba9876543210ULL};
    cache.put(r);
    cache.put({"e1", ItemKind::ExampleQuery, embed_local("baby sleep"), 1});
    const auto parsed = EmbeddingCache::parse(cache.serialize());
    CHECK(parsed.size() == 2);
    auto found = parsed.find("d1", ItemKind::Document, kLocalModelId, 0xfedcba9876543210ULL);
    REQUIRE(found.has_value());
    CHECK(*found == r);
    CHECK_FALSE(parsed.find("d1", ItemKind::Document, kLocalModelId, 1).has_value());
    CHECK_FALSE(parsed.find("d1", ItemKind::Document, "other-model", 0xfedcba9876543210ULL).has_value());
    CHECK_FALSE(parsed.find("d1", ItemKind::ExampleQuery, kLocalModelId, 0xfedcba9876543210ULL).has_value());
}

TEST_CASE("embed_corpus reuses the cache and re-embeds on change") {
    testutil::TempDir dir;
    const auto cache_path = dir / "cache.jsonl";
    CountingEmbedder embedder;
    Corpus corpus = tiny_corpus();

    auto first = embed_corpus(embedder, corpus, cache_path);
    CHECK(first.provider_calls == 3);
    CHECK(first.records.size() == 3);
    CHECK(first.records[0].item_id == "d1");
    CHECK(first.records[2].item_kind == ItemKind::ExampleQuery);
    CHECK(first.records[0].vector.values == embed_local("Nap schedule\nThree naps.").values);

    auto second = embed_corpus(embedder, corpus, cache_path);
    CHECK(second.provider_calls == 0);
    CHECK(second.records == first.records);

    corpus.documents[1].body = "Later.";
    auto third = embed_corpus(embedder, corpus, cache_path);
    CHECK(third.provider_calls == 1);

    embedder.model = "m2";
    CHECK(embed_corpus(embedder, corpus, cache_path).provider_calls == 3);
}

TEST_CASE("headline-only document text") {
    const auto d = testutil::doc("d1", "Nap schedule", "Body");
    CHECK(document_embedding_text(d, DocumentText::HeadlineOnly) == "Nap schedule");
    CHECK(document_embedding_text(d, DocumentText::HeadlineAndBody) == "Nap schedule\nBody");
}

TEST_CASE("embed_corpus names the failing item") {
    Corpus c = tiny_corpus();
    c.documents[0].headline = " ";
    c.documents[0].body = "\t";
    LocalEmbedder e;
    EmbeddingCache cache;
    const auto err = capture_error([&] { embed_corpus(e, c, cache); });
    CHECK(err.code() == ErrorCode::EmptyText);
    CHECK(err.message().find("d1") != std::string::npos);
}

TEST_CASE("remote embedder speaks the embeddings protocol") {
    testutil::FakeServer fake;
    std::string auth;
    fake.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        const auto& input = body.at("input");
        // Reverse order on the wire; the client must reorder by index.
        for (std::size_t i = input.size(); i-- > 0;) {
            data.push_back({{"index", i}, {"embedding", {double(i), 1.0, 0.0}}});
        }
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    fake.start();

    RemoteEmbedderConfig cfg;
    cfg.base_url = fake.url("/v1");
    cfg.api_key = "k";
    cfg.dim = 3;
    RemoteEmbedder embedder(cfg);
    const std::vector<std::string> texts = {"a", "b"};
    const auto out = embedder.embed_batch(texts);
    REQUIRE(out.size() == 2);
    CHECK(out[0].values == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(out[1].values == std::vector<double>{1.0, 1.0, 0.0});
    CHECK(out[0].provider_id == "remote");
    CHECK(auth == "Bearer k");

    cfg.dim = 4;
    RemoteEmbedder wrong_dim(cfg);
    CHECK(capture_error([&] { wrong_dim.embed_batch(texts); }).code() == ErrorCode::DimensionMismatch);
}

TEST_CASE("remote embedder retries server errors then surfaces Transport") {
    testutil::FakeServer fake;
    std::atomic<int> hits{0};
    fake.server().Post("/embeddings", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    fake.start();

    RemoteEmbedderConfig cfg;
    cfg.base_url = fake.url();
    cfg.max_attempts = 3;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    RemoteEmbedder embedder(cfg);
    const std::vector<std::string> texts = {"a"};
    const auto e = capture_error([&] { embedder.embed_batch(texts); });
    CHECK(e.code() == ErrorCode::Transport);
    CHECK(e.attempts() == 3);
    CHECK(hits == 3);

    RemoteEmbedderConfig closed;
    closed.base_url = "http://127.0.0.1:" + std::to_string(testutil::closed_port());
    closed.max_attempts = 2;
    closed.retry_backoff = std::chrono::milliseconds(1);
    closed.timeout = std::chrono::milliseconds(500);
    const auto unreachable = capture_error([&] { RemoteEmbedder(closed).embed_batch(texts); });
    CHECK(unreachable.code() == ErrorCode::Transport);
    CHECK(unreachable.attempts() == 2);
}
