#include "batchwise/http.hpp"

#include "httplib.h"

#include "batchwise/cost.hpp"
#include "batchwise/errors.hpp"

namespace batchwise {

nlohmann::json build_request_body(const BatchPrompt& prompt, const GenerationParams& params) {
    nlohmann::json body;
    body["model"] = params.model;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["n"] = params.n_samples;
    if (params.stop) body["stop"] = *params.stop;
    if (params.max_tokens) body["max_tokens"] = *params.max_tokens;

    if (prompt.is_chat()) {
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& message : prompt.messages()) {
            messages.push_back({{"role", message.role}, {"content", message.text}});
        }
        body["messages"] = std::move(messages);
    } else {
        body["prompt"] = prompt.completion_text();
    }
    return body;
}

std::string endpoint_path(const BatchPrompt& prompt) {
    return prompt.is_chat() ? "/chat/completions" : "/completions";
}

CompletionResult parse_response_body(const nlohmann::json& body, bool chat) {
    CompletionResult result;
    const auto choices = body.find("choices");
    if (choices == body.end() || !choices->is_array() || choices->empty()) {
        throw BadRequestError("response carried no choices");
    }
    const auto& choice = choices->front();
    if (chat) {
        result.text = choice.at("message").at("content").get<std::string>();
    } else {
        result.text = choice.at("text").get<std::string>();
    }
    if (body.contains("usage")) {
        const auto& usage = body["usage"];
        result.prompt_tokens = usage.value("prompt_tokens", 0LL);
        result.completion_tokens = usage.value("completion_tokens", 0LL);
    }
    return result;
}

HttpBackend::HttpBackend(HttpEndpointConfig config) : config_(std::move(config)) {
    const std::string& url = config_.base_url;
    if (url.empty()) throw ConfigError("http backend requires a base_url");
    const std::size_t scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const std::size_t slash = url.find('/', host_start);
    if (slash == std::string::npos) {
        host_ = url;
    } else {
        host_ = url.substr(0, slash);
        prefix_ = url.substr(slash);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (host_.rfind("https://", 0) == 0) {
        throw ConfigError("built without TLS support; use an http:// base_url");
    }
#endif
}

CompletionResult HttpBackend::attempt(const BatchPrompt& prompt, const GenerationParams& params,
                                      std::string_view api_key) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + std::string(api_key));
    }

    const std::string payload = build_request_body(prompt, params).dump();
    const auto response =
        client.Post(prefix_ + endpoint_path(prompt), headers, payload, "application/json");

    if (!response) {
        throw TransportError("request to " + host_ + " failed: " +
                             httplib::to_string(response.error()));
    }
    if (response->status == 429) {
        std::optional<std::chrono::milliseconds> retry_after;
        const std::string hint = response->get_header_value("Retry-After");
        if (!hint.empty() && hint.size() <= 9 &&
            hint.find_first_not_of("0123456789") == std::string::npos) {
            retry_after = std::chrono::seconds(std::stoll(hint));
        }
        throw RateLimitedError("rate limited by " + host_, retry_after);
    }
    if (response->status == 408 || response->status >= 500) {
        throw TransportError("HTTP " + std::to_string(response->status) + " from " + host_);
    }
    if (response->status != 200) {
        // Prefer the structured error message; fall back to the raw body.
        std::string message = response->body;
        try {
            const auto body = nlohmann::json::parse(response->body);
            if (body.contains("error") && body["error"].contains("message")) {
                message = body["error"]["message"].get<std::string>();
            }
        } catch (const nlohmann::json::exception&) {
        }
        throw BadRequestError(message);
    }

    nlohmann::json body;
    try {
        body = nlohmann::json::parse(response->body);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed response body: ") + e.what());
    }

    CompletionResult result;
    try {
        result = parse_response_body(body, prompt.is_chat());
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("unexpected response shape: ") + e.what());
    }
    if (!body.contains("usage")) {
        if (prompt.is_chat()) {
            long long total = 0;
            for (const auto& message : prompt.messages()) total += count_tokens(message.text);
            result.prompt_tokens = total;
        } else {
            result.prompt_tokens = count_tokens(prompt.completion_text());
        }
        result.completion_tokens = count_tokens(result.text);
    }
    return result;
}

} // namespace batchwise
