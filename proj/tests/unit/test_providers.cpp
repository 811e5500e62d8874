#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <thread>

#include <json.hpp>

#include "inval/errors.hpp"
#include "inval/providers/cache.hpp"
#include "inval/providers/chat.hpp"
#include "inval/providers/embedding.hpp"
#include "inval/providers/visual.hpp"
#include "inval/subtitles.hpp"
#include "inval/util.hpp"
#include "support/support.hpp"

using namespace inval;

namespace {

/// Local OpenAI-compatible endpoint whose first `failures` requests answer `fail_status`.
class FakeUpstream {
public:
    FakeUpstream(int failures, int fail_status) : failures_(failures), fail_status_(fail_status) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            last_auth_ = req.get_header_value("Authorization");
            if (requests_ <= failures_) {
                res.status = fail_status_;
                res.set_content("{}", "application/json");
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            if (req.path.ends_with("/chat/completions")) {
                std::string user = body["messages"].back()["content"];
                nlohmann::json out;
                out["choices"][0]["message"] = {{"role", "assistant"}, {"content", "echo: " + user}};
                res.set_content(out.dump(), "application/json");
            } else {
                nlohmann::json out;
                out["data"][0]["embedding"] = std::vector<double>{3, 4, 0, 0, 0, 0, 0, 0};
                res.set_content(out.dump(), "application/json");
            }
        };
        server_.Post("/v1/chat/completions", handler);
        server_.Post("/v1/embeddings", handler);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeUpstream() {
        server_.stop();
        thread_.join();
    }

    ProviderConfig config() const {
        ProviderConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        cfg.model_name = "fake-model";
        cfg.backoff_s = 0.0;
        cfg.timeout_s = 5;
        cfg.api_key_env = "INVAL_TEST_KEY";
        return cfg;
    }
    int requests() const { return requests_.load(); }
    std::string last_auth() const { return last_auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int failures_, fail_status_;
    std::atomic<int> requests_{0};
    std::string last_auth_;
};

}  // namespace

TEST_CASE("scripted chat replays its queue and records requests") {
    ScriptedChat chat({"Do you mean X?"});
    ChatRequest req{"sys", "user", 0.0, 16};
    CHECK(chat.chat(req) == "Do you mean X?");
    CHECK(chat.requests().size() == 1);
    CHECK(chat.requests()[0] == req);
    CHECK_THROWS_AS(chat.chat(req), ProviderError);
}

TEST_CASE("cached chat: warm request makes no upstream call") {
    auto inner = std::make_shared<ScriptedChat>(std::vector<std::string>{"first", "second"});
    auto chat = CachedChat(inner, std::make_shared<ResponseCache>());
    ChatRequest req{"s", "u"};
    CHECK(chat.chat(req) == "first");
    CHECK(chat.chat(req) == "first");
    CHECK(inner->calls() == 1);
    CHECK(chat.upstream_calls() == 1);
    CHECK(chat.cache_hits() == 1);

    // Any field of the request changes the key.
    ChatRequest warmer = req;
    warmer.temperature = 0.7;
    CHECK(CachedChat::cache_key("m", req) != CachedChat::cache_key("m", warmer));
    CHECK(CachedChat::cache_key("m", req) != CachedChat::cache_key("other", req));
    CHECK(chat.chat(warmer) == "second");
}

TEST_CASE("response cache persists across instances") {
    test::TempDir dir;
    {
        ResponseCache cache(dir.path());
        cache.put(sha256_hex("k"), "value with\nnewline");
    }
    ResponseCache again(dir.path());
    CHECK(again.get(sha256_hex("k")) == std::optional<std::string>("value with\nnewline"));
    CHECK_FALSE(again.get(sha256_hex("missing")));
}

TEST_CASE("concurrent identical requests reach the provider once") {
    auto inner = std::make_shared<RuleBasedChat>();
    CachedChat chat(inner, std::make_shared<ResponseCache>());
    ChatRequest req{"You are an AI assistant", "anything"};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { chat.chat(req); });
    for (auto& t : threads) t.join();
    CHECK(inner->calls() == 1);
}

TEST_CASE("http chat retries 5xx and reports the retry count") {
    FakeUpstream up(2, 500);
    ::setenv("INVAL_TEST_KEY", "secret", 1);
    OpenAIChatClient client(up.config());
    CHECK(client.chat({"sys", "hello"}) == "echo: hello");
    CHECK(client.last_retry_count() == 2);
    CHECK(up.requests() == 3);
    CHECK(up.last_auth() == "Bearer secret");
    ::unsetenv("INVAL_TEST_KEY");
}

TEST_CASE("http chat gives up after max_retries") {
    FakeUpstream up(100, 503);
    auto cfg = up.config();
    cfg.max_retries = 2;
    OpenAIChatClient client(cfg);
    try {
        client.chat({"", "hello"});
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.kind() == ProviderError::Kind::transport);
    }
    CHECK(up.requests() == 3);
}

TEST_CASE("http chat maps 401 to an auth error without retrying") {
    FakeUpstream up(100, 401);
    OpenAIChatClient client(up.config());
    try {
        client.chat({"", "hello"});
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.kind() == ProviderError::Kind::auth);
    }
    CHECK(up.requests() == 1);
}

TEST_CASE("http chat against a closed port is a transport error") {
    ProviderConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.max_retries = 0;
    cfg.timeout_s = 1;
    OpenAIChatClient client(cfg);
    CHECK_THROWS_AS(client.chat({"", "x"}), ProviderError);
}

TEST_CASE("http embedder normalizes and checks the dimension") {
    FakeUpstream up(0, 500);
    OpenAIEmbedder emb(up.config(), 8);
    auto v = emb.embed_text("hello");
    CHECK(v.unit_norm);
    CHECK(v.values[0] == doctest::Approx(0.6));
    CHECK(v.values[1] == doctest::Approx(0.8));

    OpenAIEmbedder wrong(up.config(), 16);
    CHECK_THROWS_AS(wrong.embed_text("hello"), ProviderError);
}

TEST_CASE("provider config validation") {
    ProviderConfig cfg;
    CHECK(validate_provider_config(cfg).empty());
    CHECK(cfg.api_key_env == "ASK2LOC_CHAT_KEY");
    cfg.max_retries = 6;
    CHECK_FALSE(validate_provider_config(cfg).empty());
    cfg.max_retries = 5;
    cfg.timeout_s = 0;
    CHECK_FALSE(validate_provider_config(cfg).empty());
    CHECK_THROWS_AS(OpenAIChatClient{cfg}, PreconditionError);
}

TEST_CASE("mock embedder examples") {
    auto e = mock_embedder_build(0, 64);
    auto ab = e->embed_text("a b");
    CHECK(ab == e->embed_text("a b"));
    CHECK(cosine(ab.values, e->embed_text("a b").values) == doctest::Approx(1.0));

    auto base = e->embed_text("a b c d");
    CHECK(cosine(base.values, e->embed_text("a b c x").values) >
          cosine(base.values, e->embed_text("w x y z").values));

    auto s1 = mock_embedder_build(1, 8), s2 = mock_embedder_build(2, 8);
    CHECK(s1->embed_text("same text") != s2->embed_text("same text"));

    CHECK_THROWS_AS(e->embed_text(""), PreconditionError);
    CHECK_THROWS_AS(e->embed_text("   "), PreconditionError);
    CHECK_THROWS_AS(mock_embedder_build(0, 4), PreconditionError);
}

TEST_CASE("property: mock embeddings are unit norm and unrelated strings are not collinear") {
    auto e = mock_embedder_build(3, 32);
    std::mt19937_64 rng(11);
    auto random_text = [&] {
        std::string s;
        for (int i = 0; i < 5; ++i) s += "t" + std::to_string(rng() % 100000) + " ";
        return s;
    };
    for (int i = 0; i < 100; ++i) {
        auto a = e->embed_text(random_text()), b = e->embed_text(random_text());
        CHECK(std::abs(l2_norm(a.values) - 1.0) <= 1e-6);
        double c = cosine(a.values, b.values);
        CHECK(c > -1.0);
        CHECK(c < 1.0);
    }
}

TEST_CASE("property: more shared tokens means higher mean cosine") {
    auto e = mock_embedder_build(9, 64);
    std::mt19937_64 rng(4);
    auto tok = [&] { return "w" + std::to_string(rng() % 1000000); };
    std::vector<double> mean(5, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> base;
        for (int i = 0; i < 4; ++i) base.push_back(tok());
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const auto& w : v) s += w + " ";
            return s;
        };
        auto eb = e->embed_text(join(base));
        for (int shared = 0; shared <= 4; ++shared) {
            auto other = base;
            for (int i = shared; i < 4; ++i) other[i] = tok();
            mean[shared] += cosine(eb.values, e->embed_text(join(other)).values) / 200.0;
        }
    }
    for (int k = 0; k < 4; ++k) CHECK(mean[k] < mean[k + 1]);
}

TEST_CASE("long inputs are truncated at a UTF-8 boundary") {
    std::string text(kEmbedCharBudget - 1, 'a');
    text += "é";  // two bytes straddling the budget
    auto cut = truncate_utf8(text, kEmbedCharBudget);
    CHECK(cut.size() == kEmbedCharBudget - 1);
    CHECK(is_valid_utf8(cut));
    auto e = mock_embedder_build(0, 16);
    CHECK_NOTHROW(e->embed_text(std::string(3 * kEmbedCharBudget, 'z')));
}

TEST_CASE("visual features: mock determinism, store bounds and codec") {
    MockVisual mock(5, 16);
    CHECK(mock.visual_feature("v", 3) == mock.visual_feature("v", 3));
    CHECK(mock.visual_feature("v", 3) != mock.visual_feature("v", 4));
    CHECK(mock.visual_feature("v", 3).values.size() == 16);

    FeatureStore store{4, {}};
    for (int i = 0; i < 12 * 4; ++i) store.values.push_back(static_cast<float>(i) * 0.25f - 3.0f);
    FeatureStoreProvider provider("/nonexistent", 4);
    provider.add("v", store);
    CHECK(provider.visual_feature("v", 11).values.size() == 4);
    CHECK_THROWS_AS(provider.visual_feature("v", 12), LookupError);
    CHECK_THROWS_AS(provider.visual_feature("missing", 0), LookupError);

    FeatureStore small{3, {1.5f, -0.0f, 3.25f, 1e-30f, 7.0f, -8.5f, 0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f}};
    auto bytes = encode_feature_store(small);
    CHECK(bytes.substr(0, 8) == "IVALVF01");
    CHECK(bytes.size() == 8 + 4 + 4 + 12 * 4);
    auto back = decode_feature_store(bytes);
    REQUIRE(back.values.size() == small.values.size());
    CHECK(std::memcmp(back.values.data(), small.values.data(), small.values.size() * sizeof(float)) == 0);
    CHECK(back.count() == 4);

    test::TempDir dir;
    write_feature_store(dir / "vid.ivf", small);
    FeatureStoreProvider from_disk(dir.path(), 3);
    CHECK(from_disk.visual_feature("vid", 1).values.size() == 3);
    CHECK_THROWS(decode_feature_store(bytes.substr(0, bytes.size() - 1)));
}
