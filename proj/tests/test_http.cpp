#include "doctest.h"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <thread>

#include "httplib.h"

#include "batchwise/client.hpp"
#include "batchwise/errors.hpp"
#include "batchwise/harness.hpp"
#include "batchwise/http.hpp"
#include "batchwise/prompt.hpp"
#include "test_support.hpp"

using namespace batchwise;
using namespace batchwise::testing;

namespace {

BatchPrompt chat_prompt_fixture() {
    const auto blocks = make_demo_blocks(math_exemplars(12), 4);
    std::vector<Sample> batch;
    for (int i = 1; i <= 4; ++i) {
        batch.push_back(make_sample("s" + std::to_string(i), "what now?", "1"));
    }
    return render_chat_prompt(blocks, batch);
}

BatchPrompt completion_prompt_fixture() {
    const auto blocks = make_demo_blocks(math_exemplars(12), 2);
    return render_completion_prompt(
        blocks, {make_sample("s1", "a?", "1"), make_sample("s2", "b?", "2")});
}

// In-process OpenAI-shaped server for end-to-end client tests.
class LocalServer {
public:
    LocalServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& request,
                                                    httplib::Response& response) {
            handle(request, response, true);
        });
        server_.Post("/v1/completions", [this](const httplib::Request& request,
                                               httplib::Response& response) {
            handle(request, response, false);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> rate_limit_first{0};  // respond 429 to this many requests
    std::atomic<int> requests_seen{0};
    std::string last_body;
    std::string last_auth;

private:
    void handle(const httplib::Request& request, httplib::Response& response, bool chat) {
        ++requests_seen;
        last_body = request.body;
        last_auth = request.get_header_value("Authorization");
        if (rate_limit_first.fetch_sub(1) > 0) {
            response.status = 429;
            response.set_header("Retry-After", "0");
            response.set_content("{\"error\":{\"message\":\"slow down\"}}", "application/json");
            return;
        }
        rate_limit_first = 0;
        nlohmann::json body;
        if (chat) {
            body = {{"choices",
                     {{{"message", {{"role", "assistant"}, {"content", "A[1]: The answer is 4."}}}}}},
                    {"usage", {{"prompt_tokens", 120}, {"completion_tokens", 9}}}};
        } else {
            body = {{"choices", {{{"text", "A[1]: The answer is 4."}}}},
                    {"usage", {{"prompt_tokens", 80}, {"completion_tokens", 9}}}};
        }
        response.set_content(body.dump(), "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace

TEST_CASE("request body carries the wire fields") {
    GenerationParams params;
    params.model = "test-model";
    params.max_tokens = 256;

    SUBCASE("chat prompts serialize to a messages array") {
        const BatchPrompt prompt = chat_prompt_fixture();
        const nlohmann::json body = build_request_body(prompt, params);
        CHECK(body.at("model") == "test-model");
        CHECK(body.at("temperature") == 0.0);
        CHECK(body.at("top_p") == 1.0);
        CHECK(body.at("n") == 1);
        CHECK(body.at("stop") == "\n\n");
        CHECK(body.at("max_tokens") == 256);
        REQUIRE(body.contains("messages"));
        CHECK(body.at("messages").size() == 8);  // system + 3 pairs + final user
        CHECK(body.at("messages")[0].at("role") == "system");
        CHECK_FALSE(body.contains("prompt"));
        CHECK(endpoint_path(prompt) == "/chat/completions");
    }
    SUBCASE("completion prompts serialize to a prompt string") {
        const BatchPrompt prompt = completion_prompt_fixture();
        const nlohmann::json body = build_request_body(prompt, params);
        REQUIRE(body.contains("prompt"));
        CHECK(body.at("prompt") == prompt.completion_text());
        CHECK_FALSE(body.contains("messages"));
        CHECK(endpoint_path(prompt) == "/completions");
    }
    SUBCASE("stop can be omitted") {
        GenerationParams no_stop = params;
        no_stop.stop.reset();
        const nlohmann::json body = build_request_body(completion_prompt_fixture(), no_stop);
        CHECK_FALSE(body.contains("stop"));
    }
}

TEST_CASE("response body parsing") {
    SUBCASE("chat shape") {
        const nlohmann::json body = {
            {"choices", {{{"message", {{"content", "hello"}}}}}},
            {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 2}}}};
        const CompletionResult result = parse_response_body(body, true);
        CHECK(result.text == "hello");
        CHECK(result.prompt_tokens == 10);
        CHECK(result.completion_tokens == 2);
    }
    SUBCASE("completion shape without usage") {
        const nlohmann::json body = {{"choices", {{{"text", "hi"}}}}};
        const CompletionResult result = parse_response_body(body, false);
        CHECK(result.text == "hi");
        CHECK(result.prompt_tokens == 0);
    }
    SUBCASE("missing choices is fatal") {
        CHECK_THROWS_AS(parse_response_body(nlohmann::json::object(), true), BadRequestError);
    }
}

TEST_CASE("http backend round trip against a local server") {
    LocalServer server;
    HttpEndpointConfig config;
    config.base_url = server.base_url();
    auto backend = std::make_shared<HttpBackend>(config);

    GenerationParams params;
    params.model = "local";

    SUBCASE("chat request and usage-backed token counts") {
        const auto result = backend->attempt(chat_prompt_fixture(), params, "secret-key");
        CHECK(result.text == "A[1]: The answer is 4.");
        CHECK(result.prompt_tokens == 120);
        CHECK(result.completion_tokens == 9);
        CHECK(server.last_auth == "Bearer secret-key");
        const auto sent = nlohmann::json::parse(server.last_body);
        CHECK(sent.at("messages").size() == 8);
        CHECK(sent.at("temperature") == 0.0);
        CHECK(sent.at("stop") == "\n\n");
    }
    SUBCASE("completion request") {
        const auto result = backend->attempt(completion_prompt_fixture(), params, "secret-key");
        CHECK(result.text == "A[1]: The answer is 4.");
        CHECK(result.prompt_tokens == 80);
        const auto sent = nlohmann::json::parse(server.last_body);
        CHECK(sent.contains("prompt"));
    }
    SUBCASE("429 raises RateLimitedError with the retry-after hint") {
        server.rate_limit_first = 1;
        try {
            backend->attempt(completion_prompt_fixture(), params, "k");
            FAIL("expected RateLimitedError");
        } catch (const RateLimitedError& e) {
            REQUIRE(e.retry_after.has_value());
            CHECK(e.retry_after->count() == 0);
        }
    }
    SUBCASE("client retries through 429s and rotates keys") {
        server.rate_limit_first = 2;
        RetryPolicy policy;
        policy.max_attempts = 6;
        LlmClient client(backend, KeyPool({"k0", "k1", "k2"}), policy, 1,
                         [](std::chrono::milliseconds) {});
        const auto result = client.complete(completion_prompt_fixture(), params);
        CHECK(result.attempts == 3);
        REQUIRE(result.key_index.has_value());
        CHECK(*result.key_index == 2);
        CHECK(server.requests_seen == 3);
    }
    SUBCASE("transport errors when nothing is listening") {
        HttpEndpointConfig dead;
        dead.base_url = "http://127.0.0.1:9";  // discard port; nothing listens
        dead.timeout_seconds = 1;
        HttpBackend unreachable(dead);
        CHECK_THROWS_AS(unreachable.attempt(completion_prompt_fixture(), params, "k"),
                        TransportError);
    }
}

TEST_CASE("config-driven run over the http backend") {
    LocalServer server;

    std::ofstream dataset("http_dataset_tmp.jsonl", std::ios::binary);
    dataset << "{\"id\":\"s1\",\"context\":[{\"label\":\"Q\",\"text\":\"two plus two?\"}],"
               "\"gold\":\"4\",\"kind\":\"numeric\"}\n";
    dataset.close();

    RunConfig config;
    config.dataset_path = "http_dataset_tmp.jsonl";
    config.b = 1;
    config.backend.type = "http";
    config.backend.http.base_url = server.base_url();
    config.backend.api_keys = {"k0", "k1"};
    config.params.model = "local";

    const RunReport report = run(config);
    CHECK(report.aggregates.calls == 1);
    CHECK(report.aggregates.accuracy == 1.0);  // server answers "The answer is 4."
    CHECK(report.per_call[0].prompt_tokens == 80);
    CHECK(server.requests_seen == 1);
    std::remove("http_dataset_tmp.jsonl");
}

TEST_CASE("http backend surfaces bad requests verbatim") {
    httplib::Server server;
    server.Post("/v1/completions", [](const httplib::Request&, httplib::Response& response) {
        response.status = 400;
        response.set_content("{\"error\":{\"message\":\"model 'x' does not exist\"}}",
                             "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpEndpointConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    HttpBackend backend(config);
    GenerationParams params;
    params.model = "x";
    try {
        backend.attempt(completion_prompt_fixture(), params, "k");
        FAIL("expected BadRequestError");
    } catch (const BadRequestError& e) {
        CHECK(std::string(e.what()) == "model 'x' does not exist");
    }
    server.stop();
    thread.join();
}
