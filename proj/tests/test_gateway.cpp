#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include "coldqs/errors.hpp"
#include "coldqs/gateway.hpp"
#include "coldqs/prompt.hpp"

using namespace coldqs;
using namespace coldqs::gateway;

namespace {

// Replays a fixed list of outcomes, one per attempt, per request.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::vector<Attempt> script) : script_(std::move(script)) {}
    Attempt send(const EndpointConfig&, const ChatRequest&, int attempt) const override {
        calls_.fetch_add(1);
        return script_.at(static_cast<std::size_t>(attempt - 1));
    }
    int calls() const { return calls_.load(); }

private:
    std::vector<Attempt> script_;
    mutable std::atomic<int> calls_{0};
};

// Fails requests whose user text contains "FAIL"; tracks peak concurrency.
class ProbeBackend final : public Backend {
public:
    Attempt send(const EndpointConfig&, const ChatRequest& r, int) const override {
        const int now = ++in_flight_;
        int peak = peak_.load();
        while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --in_flight_;
        if (r.prompt.user_text.find("FAIL") != std::string::npos)
            return {Attempt::Status::fatal, {}, 400, "HTTP 400"};
        return Attempt::success("echo:" + r.prompt.user_text);
    }
    int peak() const { return peak_.load(); }

private:
    mutable std::atomic<int> in_flight_{0};
    mutable std::atomic<int> peak_{0};
};

Attempt fail(int status) {
    return {status == 429 || status >= 500 ? Attempt::Status::retryable : Attempt::Status::fatal, {}, status,
            "HTTP " + std::to_string(status)};
}

EndpointConfig endpoint(int max_retries = 3) {
    EndpointConfig e;
    e.base_url = "http://127.0.0.1:1/v1";
    e.model_name = "m";
    e.max_retries = max_retries;
    return e;
}

prompt::PromptText text(std::string s) {
    prompt::PromptText p;
    p.user_text = std::move(s);
    return p;
}

struct Sleeps {
    std::mutex mu;
    std::vector<double> seconds;
    Sleeper fn() {
        return [this](std::chrono::duration<double> d) {
            std::lock_guard lock(mu);
            seconds.push_back(d.count());
        };
    }
};

}  // namespace

TEST_CASE("endpoint config invariants") {
    auto e = endpoint();
    CHECK_NOTHROW(e.validate());
    e.timeout_seconds = 0;
    CHECK_THROWS_AS(e.validate(), ValidationError);
    e = endpoint();
    e.max_retries = -1;
    CHECK_THROWS_AS(e.validate(), ValidationError);
    e = endpoint();
    e.decoding.temperature = -0.1;
    CHECK_THROWS_AS(e.validate(), ValidationError);
}

TEST_CASE("two 500s then success within max_retries=3") {
    auto backend = std::make_shared<ScriptedBackend>(
        std::vector<Attempt>{fail(500), fail(500), Attempt::success("ok")});
    Sleeps sleeps;
    Gateway gw(backend, sleeps.fn());
    CHECK(gw.complete(endpoint(3), text("x")) == "ok");
    CHECK(backend->calls() == 3);
    REQUIRE(sleeps.seconds.size() == 2);
    // Full jitter: uniform in [0, base * 2^(attempt-1)].
    CHECK(sleeps.seconds[0] <= 0.5);
    CHECK(sleeps.seconds[1] <= 1.0);
}

TEST_CASE("max_retries=0 surfaces the first 500") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<Attempt>{fail(500)});
    Gateway gw(backend, [](auto) {});
    try {
        gw.complete(endpoint(0), text("x"));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 1);
        CHECK(e.exit_code() == ExitCode::transport);
    }
}

TEST_CASE("exhausted retries report the attempt count") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<Attempt>(4, fail(503)));
    Gateway gw(backend, [](auto) {});
    try {
        gw.complete(endpoint(3), text("x"));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 4);
        CHECK(std::string(e.what()).find("4 attempts") != std::string::npos);
    }
}

TEST_CASE("4xx is not retried, 429 is") {
    auto b400 = std::make_shared<ScriptedBackend>(std::vector<Attempt>{fail(400), Attempt::success("no")});
    CHECK_THROWS_AS(Gateway(b400, [](auto) {}).complete(endpoint(3), text("x")), TransportError);
    CHECK(b400->calls() == 1);

    auto b429 = std::make_shared<ScriptedBackend>(std::vector<Attempt>{fail(429), Attempt::success("yes")});
    CHECK(Gateway(b429, [](auto) {}).complete(endpoint(3), text("x")) == "yes");
}

TEST_CASE("batch: order, isolation, empty input, bounded concurrency") {
    auto probe = std::make_shared<ProbeBackend>();
    Gateway gw(probe, [](auto) {});
    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 20; ++i) reqs.push_back({text(i == 7 ? "FAIL" : "p" + std::to_string(i)), std::nullopt});

    auto out = gw.complete_batch(endpoint(), reqs, 4);
    REQUIRE(out.size() == 20);
    CHECK(probe->peak() <= 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].index == i);
        if (i == 7) {
            CHECK_FALSE(out[i].ok());
            CHECK(out[i].error.has_value());
        } else {
            CHECK(*out[i].text == "echo:p" + std::to_string(i));
        }
    }
    CHECK(gw.complete_batch(endpoint(), {}, 4).empty());
    CHECK_THROWS_AS(gw.complete_batch(endpoint(), reqs, 0), PreconditionError);
}

TEST_CASE("mock backend is deterministic and parallelism-independent") {
    MockOptions opts;
    opts.seed = 42;
    Gateway gw(std::make_shared<MockBackend>(opts));
    DialogueContext c;
    c.record_id = "r";
    c.current_query = "Can you recommend a rice cooker?";
    c.intent = Intent::product_recommendation;
    const auto p = prompt::render_generation_prompt(c);
    const auto a = gw.complete(endpoint(), p);
    CHECK(a == Gateway(std::make_shared<MockBackend>(opts)).complete(endpoint(), p));

    std::vector<ChatRequest> reqs;
    for (std::uint64_t i = 0; i < 10; ++i) reqs.push_back({p, i});
    auto serial = gw.complete_batch(endpoint(), reqs, 1);
    auto parallel = gw.complete_batch(endpoint(), reqs, 4);
    for (std::size_t i = 0; i < 10; ++i) CHECK(*serial[i].text == *parallel[i].text);

    // The per-request seed distinguishes rollouts; another model name changes output.
    std::set<std::string> distinct;
    for (const auto& s : serial) distinct.insert(*s.text);
    CHECK(distinct.size() > 1);
    auto other = endpoint();
    other.model_name = "other";
    CHECK(gw.complete(other, ChatRequest{p, 3}) != *serial[3].text);
}

TEST_CASE("mock judge emits parseable verdicts") {
    Gateway gw(std::make_shared<MockBackend>());
    DialogueContext c;
    c.record_id = "r";
    c.current_query = "Is this phone case durable?";
    SuggestionSet s;
    s.candidates = {"What material is it?", "Does it fit the new model?", "Tell me about phone case"};
    s.format_ok = true;
    auto raw = gw.complete(endpoint(), prompt::render_judge_prompt(c, s));
    auto v = prompt::parse_judge_output(raw, 3);
    CHECK(v.k() == 3);
    CHECK(v.per_candidate[2].informative == 0);
}

TEST_CASE("fault injection fails at roughly the configured rate") {
    MockOptions opts;
    opts.behavior = MockOptions::Behavior::fault_injection;
    opts.failure_rate = 0.3;
    Gateway gw(std::make_shared<MockBackend>(opts), [](auto) {});
    std::vector<ChatRequest> reqs;
    for (std::uint64_t i = 0; i < 400; ++i) reqs.push_back({text("q"), i});
    auto out = gw.complete_batch(endpoint(0), reqs, 4);
    int failed = 0;
    for (const auto& c : out) failed += !c.ok();
    CHECK(failed > 80);
    CHECK(failed < 160);
    // With retries most items recover.
    auto retried = gw.complete_batch(endpoint(3), reqs, 4);
    int still = 0;
    for (const auto& c : retried) still += !c.ok();
    CHECK(still < 15);
}

TEST_CASE("HTTP backend against a local server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::mutex mu;
    std::string last_auth;
    json last_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++hits;
        {
            std::lock_guard lock(mu);
            last_auth = req.get_header_value("Authorization");
            last_body = json::parse(req.body);
        }
        const auto model = json::parse(req.body)["model"].get<std::string>();
        if (model == "flaky" && n <= 2) {
            res.status = 500;
            return;
        }
        if (model == "forbidden") {
            res.status = 403;
            return;
        }
        if (model == "broken") {
            res.set_content("<html>", "text/html");
            return;
        }
        json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "hello from " + model}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("COLDQS_TEST_KEY", "sk-secret-value", 1);
    EndpointConfig e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
    e.model_name = "flaky";
    e.api_key_env = "COLDQS_TEST_KEY";
    e.max_retries = 3;
    e.backoff_base_seconds = 0.0;
    e.timeout_seconds = 5;
    Gateway gw(std::make_shared<HttpBackend>());

    prompt::PromptText p;
    p.system_text = "sys";
    p.user_text = "usr";
    CHECK(gw.complete(e, ChatRequest{p, 7}) == "hello from flaky");
    CHECK(hits.load() == 3);
    {
        std::lock_guard lock(mu);
        CHECK(last_auth == "Bearer sk-secret-value");
        CHECK(last_body["messages"].size() == 2);
        CHECK(last_body["messages"][0]["role"] == "system");
        CHECK(last_body["seed"] == 7);
        CHECK(last_body["stream"] == false);
    }

    e.model_name = "forbidden";
    hits = 0;
    try {
        gw.complete(e, p);
        FAIL("expected TransportError");
    } catch (const TransportError& err) {
        CHECK(err.attempts() == 1);
        CHECK(std::string(err.what()).find("403") != std::string::npos);
        CHECK(std::string(err.what()).find("sk-secret-value") == std::string::npos);
    }

    e.model_name = "broken";
    CHECK_THROWS_AS(gw.complete(e, p), TransportError);

    // Request body never carries the key itself.
    CHECK(HttpBackend::request_body(e, {p, std::nullopt}).dump().find("sk-secret") == std::string::npos);

    server.stop();
    t.join();

    // Nothing listening: connection errors are retried and then surface.
    e.max_retries = 1;
    try {
        gw.complete(e, p);
        FAIL("expected TransportError");
    } catch (const TransportError& err) {
        CHECK(err.attempts() == 2);
    }
    ::unsetenv("COLDQS_TEST_KEY");
}
