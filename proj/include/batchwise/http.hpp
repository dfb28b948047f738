#pragma once

#include <string>

#include "json.hpp"

#include "batchwise/client.hpp"

namespace batchwise {

struct HttpEndpointConfig {
    std::string base_url;  // e.g. "https://api.openai.com/v1"
    int timeout_seconds = 120;
};

/// OpenAI-compatible request body: {model, messages, temperature, top_p, n,
/// stop, max_tokens} for chat prompts, {model, prompt, ...} for completion
/// prompts.
nlohmann::json build_request_body(const BatchPrompt& prompt, const GenerationParams& params);

/// "/chat/completions" for chat prompts, "/completions" otherwise.
std::string endpoint_path(const BatchPrompt& prompt);

/// Pulls text and usage out of a successful response body.
CompletionResult parse_response_body(const nlohmann::json& body, bool chat);

/// Single-attempt HTTP backend. Maps 429 to RateLimitedError (honoring a
/// numeric Retry-After), connection failures and 5xx/408 to TransportError,
/// and other 4xx to BadRequestError carrying the upstream message verbatim.
/// Token usage from the response overrides heuristic counts.
class HttpBackend : public RawBackend {
public:
    explicit HttpBackend(HttpEndpointConfig config);

    CompletionResult attempt(const BatchPrompt& prompt, const GenerationParams& params,
                             std::string_view api_key) override;

private:
    HttpEndpointConfig config_;
    std::string host_;    // scheme://host[:port]
    std::string prefix_;  // path portion of base_url, if any
};

} // namespace batchwise
