#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ovseg/error.hpp"
#include "ovseg/gateway.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace ovseg;
using namespace ovseg::gateway;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

ChatRequest ask(const std::string& text, const std::string& task = "t/v1") {
    return {task, {{Role::User, text, {}}}};
}

double norm(const embedding::Embedding& e) {
    double s = 0.0;
    for (float x : e) s += double(x) * x;
    return std::sqrt(s);
}

// Local chat-completions stand-in on an ephemeral port.
class FakeService {
public:
    FakeService() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++chat_hits;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (fail_first > 0) {
                --fail_first;
                res.status = fail_status;
                return;
            }
            const auto body = json::parse(req.body);
            const std::string text = body["messages"].back()["content"].is_string()
                                         ? body["messages"].back()["content"].get<std::string>()
                                         : "image";
            res.set_content(json{{"choices", {{{"message", {{"content", "echo:" + text}}}}}}}.dump(),
                            "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request&, httplib::Response& res) {
            ++embed_hits;
            res.set_content(json{{"data", {{{"embedding", embed_reply}}}}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }

    GatewayConfig config() const {
        GatewayConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
        c.timeout_s = 5.0;
        c.max_retries = 2;
        c.dim = 2;
        c.token_env = "OVSEG_TEST_TOKEN";
        return c;
    }

    std::atomic<int> chat_hits{0}, embed_hits{0};
    int fail_first = 0;
    int fail_status = 503;
    std::vector<float> embed_reply = {3, 4};
    std::string last_auth, last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(Hashing, KnownDigestsAndBase64) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(base64_encode(""), "");
    EXPECT_EQ(base64_encode("f"), "Zg==");
    EXPECT_EQ(base64_encode("fo"), "Zm8=");
    EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}

TEST(Canonical, DistinguishesEveryField) {
    const ChatRequest base{"verify/v1", {{Role::User, "hi", {{"a.png", masks::PixelRect{1, 2, 3, 4}}}}}};
    auto other_task = base;
    other_task.task = "verify/v2";
    auto other_role = base;
    other_role.messages[0].role = Role::System;
    auto other_region = base;
    other_region.messages[0].images[0].region = masks::PixelRect{1, 2, 3, 5};
    auto no_region = base;
    no_region.messages[0].images[0].region.reset();
    const auto k = canonical_request(base);
    EXPECT_EQ(k, canonical_request(base));
    for (const auto* r : {&other_task, &other_role, &other_region, &no_region}) EXPECT_NE(k, canonical_request(*r));
}

TEST(Mock, EmbeddingsAreDeterministicUnitVectors) {
    MockGateway a(64, 7), b(64, 7), c(64, 8);
    const auto ea = a.embed_text("a photo of chair.");
    EXPECT_EQ(ea, b.embed_text("a photo of chair."));
    EXPECT_NE(ea, c.embed_text("a photo of chair."));
    EXPECT_NE(ea, a.embed_text("a photo of table."));
    EXPECT_NEAR(norm(ea), 1.0, 1e-6);
    EXPECT_EQ(MockGateway::hashed_embedding(64, 7, "a photo of chair."), ea);
    const auto odd = MockGateway::hashed_embedding(7, 1, "x");
    EXPECT_EQ(odd.size(), 7u);
    EXPECT_NEAR(norm(odd), 1.0, 1e-6);
}

TEST(Mock, RulesHandlersAndUnscripted) {
    MockGateway gw(4, 0);
    gw.add_rule("^Is there a (chair|sofa)", "yes");
    gw.add_handler([](const ChatRequest& r) -> std::optional<std::string> {
        if (r.task == "final/v1") return "0";
        return std::nullopt;
    });
    EXPECT_EQ(gw.chat(ask("Is there a sofa here?")), "yes");
    EXPECT_EQ(gw.chat(ask("anything", "final/v1")), "0");
    EXPECT_EQ(code_of([&] { gw.chat(ask("Is there a lamp?")); }), ErrorCode::GatewayError);
    EXPECT_EQ(code_of([&] { gw.chat({"t", {}}); }), ErrorCode::InvalidArgument);
}

TEST(Gateway, CachesChatAndEmbeddings) {
    MockGateway gw(8, 0);
    int calls = 0;
    gw.add_handler([&](const ChatRequest&) -> std::optional<std::string> { return std::to_string(++calls); });
    EXPECT_EQ(gw.chat(ask("q")), "1");
    EXPECT_EQ(gw.chat(ask("q")), "1");
    EXPECT_EQ(gw.chat(ask("q", "other/v1")), "2");
    gw.embed_text("p");
    gw.embed_text("p");
    EXPECT_EQ(calls, 2);
    EXPECT_EQ(gw.transport_calls(), 3u);
    EXPECT_EQ(gw.exchanges().size(), 2u);
}

TEST(Gateway, DimMismatch) {
    MockGateway gw(8, 0);
    auto log = std::make_shared<ReplayLog>();
    log->append(RecordKind::Embed, canonical_embed_request("p"), "[1.0, 0.0]");
    ReplayGateway replay(8, log);
    EXPECT_EQ(code_of([&] { replay.embed_text("p"); }), ErrorCode::DimMismatch);
}

TEST(Replay, RecordThenReplayIsExact) {
    fixtures::TempDir dir("replay");
    const auto path = dir / "log.ovrl";
    MockGateway live(16, 3);
    live.add_rule(".", "reply with\nnewline \xE2\x9C\x93");
    auto log = std::make_shared<ReplayLog>();
    log->attach(path);
    live.record_to(log);
    const auto r1 = live.chat(ask("first"));
    const auto e1 = live.embed_text("a photo of lamp.");
    live.chat(ask("first"));  // cached, not re-recorded
    EXPECT_EQ(log->size(), 2u);

    const auto loaded = ReplayLog::load(path);
    EXPECT_EQ(loaded->size(), 2u);
    ReplayGateway replay(16, loaded);
    EXPECT_EQ(replay.chat(ask("first")), r1);
    EXPECT_EQ(replay.embed_text("a photo of lamp."), e1);
    EXPECT_EQ(code_of([&] { replay.chat(ask("second")); }), ErrorCode::GatewayError);
    EXPECT_EQ(code_of([&] { replay.embed_text("unknown"); }), ErrorCode::GatewayError);

    // save() of the loaded log reproduces the file.
    loaded->save(dir / "copy.ovrl");
    EXPECT_EQ(fixtures::slurp(dir / "copy.ovrl"), fixtures::slurp(path));
}

TEST(Replay, FirstRecordWinsOnDuplicates) {
    ReplayLog log;
    log.append(RecordKind::Chat, "k", "a");
    log.append(RecordKind::Chat, "k", "b");
    log.append(RecordKind::Embed, "k", "c");
    EXPECT_EQ(log.find(RecordKind::Chat, "k"), "a");
    EXPECT_EQ(log.find(RecordKind::Embed, "k"), "c");
    EXPECT_FALSE(log.find(RecordKind::Chat, "z"));
}

TEST(Replay, CorruptFiles) {
    fixtures::TempDir dir("replay_bad");
    {
        std::ofstream(dir / "magic.ovrl", std::ios::binary) << "NOPE\x01\x00\x00\x00";
    }
    EXPECT_EQ(code_of([&] { ReplayLog::load(dir / "magic.ovrl"); }), ErrorCode::Format);
    ReplayLog log;
    log.append(RecordKind::Chat, "request", "response");
    log.save(dir / "ok.ovrl");
    auto bytes = fixtures::slurp(dir / "ok.ovrl");
    bytes.resize(bytes.size() - 3);
    std::ofstream(dir / "short.ovrl", std::ios::binary) << bytes;
    EXPECT_EQ(code_of([&] { ReplayLog::load(dir / "short.ovrl"); }), ErrorCode::Format);
    EXPECT_EQ(code_of([&] { ReplayLog::load(dir / "missing.ovrl"); }), ErrorCode::Io);
}

TEST(Http, ChatAndEmbedRoundTrip) {
    FakeService svc;
    ::setenv("OVSEG_TEST_TOKEN", "sekret", 1);
    HttpGateway gw(svc.config());
    EXPECT_EQ(gw.chat(ask("hello")), "echo:hello");
    EXPECT_EQ(svc.last_auth, "Bearer sekret");
    const auto body = json::parse(svc.last_body);
    EXPECT_EQ(body["model"], "gpt-5-mini");
    EXPECT_EQ(body["temperature"], 0);
    const auto e = gw.embed_text("x");
    ASSERT_EQ(e.size(), 2u);
    EXPECT_NEAR(e[0], 0.6f, 1e-7);
    EXPECT_NEAR(e[1], 0.8f, 1e-7);
    gw.chat(ask("hello"));
    EXPECT_EQ(svc.chat_hits, 1);
    ::unsetenv("OVSEG_TEST_TOKEN");
}

TEST(Http, RetriesServerErrorsButNotClientErrors) {
    FakeService svc;
    svc.fail_first = 2;
    HttpGateway gw(svc.config());
    EXPECT_EQ(gw.chat(ask("again")), "echo:again");
    EXPECT_EQ(svc.chat_hits, 3);

    FakeService bad;
    bad.fail_first = 5;
    bad.fail_status = 400;
    HttpGateway gw2(bad.config());
    EXPECT_EQ(code_of([&] { gw2.chat(ask("x")); }), ErrorCode::TransportError);
    EXPECT_EQ(bad.chat_hits, 1);
}

TEST(Http, WrongDimensionAndImages) {
    FakeService svc;
    svc.embed_reply = {1, 2, 3};
    HttpGateway gw(svc.config());
    EXPECT_EQ(code_of([&] { gw.embed_text("x"); }), ErrorCode::DimMismatch);

    fixtures::TempDir dir("http_img");
    std::ofstream(dir / "a.jpg", std::ios::binary) << "foobar";
    const ChatRequest req{"verify/v1", {{Role::User, "look", {{(dir / "a.jpg").string(), std::nullopt}}}}};
    const auto body = json::parse(gw.chat_body(req));
    const auto& content = body["messages"][0]["content"];
    ASSERT_EQ(content.size(), 2u);
    EXPECT_EQ(content[1]["image_url"]["url"], "data:image/jpeg;base64,Zm9vYmFy");
    const ChatRequest missing{"verify/v1", {{Role::User, "look", {{(dir / "none.png").string(), std::nullopt}}}}};
    EXPECT_EQ(code_of([&] { gw.chat_body(missing); }), ErrorCode::Io);
}

TEST(Http, UnreachableEndpointIsTransportError) {
    GatewayConfig c;
    c.endpoint = "http://127.0.0.1:1/v1";
    c.timeout_s = 1.0;
    c.max_retries = 1;
    HttpGateway gw(c);
    EXPECT_EQ(code_of([&] { gw.chat(ask("x")); }), ErrorCode::TransportError);
    c.endpoint = "no-scheme";
    EXPECT_EQ(code_of([&] { HttpGateway bad(c); }), ErrorCode::InvalidArgument);
    c.endpoint = "http://127.0.0.1:1";
    c.timeout_s = 0.0;
    EXPECT_EQ(code_of([&] { HttpGateway bad(c); }), ErrorCode::InvalidArgument);
}
