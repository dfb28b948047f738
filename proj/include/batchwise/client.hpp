#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "batchwise/prompt.hpp"
#include "batchwise/rng.hpp"

namespace batchwise {

/// Decoding parameters forwarded to a backend.
struct GenerationParams {
    double temperature = 0.0;
    double top_p = 1.0;
    int n_samples = 1;
    std::optional<std::string> stop = std::string("\n\n");
    std::optional<int> max_tokens;
    std::string model;
};

/// Throws DomainError when ranges are invalid.
void validate(const GenerationParams& params);

struct CompletionResult {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long latency_ms = 0;
    int attempts = 1;
    std::optional<int> key_index;
};

/// One backend attempt, no retries. Throws RateLimitedError or TransportError
/// for retryable failures, BadRequestError or UnknownSampleError for fatal ones.
class RawBackend {
public:
    virtual ~RawBackend() = default;
    virtual CompletionResult attempt(const BatchPrompt& prompt, const GenerationParams& params,
                                     std::string_view api_key) = 0;
};

/// Rotating pool of API credentials with per-key cooldowns. Thread-safe;
/// checkout is atomic rotate-and-claim.
class KeyPool {
public:
    explicit KeyPool(std::vector<std::string> keys);
    KeyPool(KeyPool&& other) noexcept;
    KeyPool(const KeyPool&) = delete;
    KeyPool& operator=(const KeyPool&) = delete;
    KeyPool& operator=(KeyPool&&) = delete;

    /// Reads a comma-separated key list from the environment.
    static KeyPool from_env(const char* variable = "BATCHWISE_API_KEYS");

    struct Lease {
        int index = 0;
        std::string key;
        std::chrono::milliseconds wait{0};  // sleep this long before using the key
    };

    /// Next key in rotation order that is off cooldown; when every key is
    /// cooling, the one that frees up soonest together with the needed wait.
    Lease checkout();

    void report_rate_limited(int index, std::chrono::milliseconds cooldown);
    void report_success(int index);

    std::size_t size() const;
    std::vector<long long> usage_counts() const;

private:
    mutable std::mutex mu_;
    std::vector<std::string> keys_;
    std::vector<std::chrono::steady_clock::time_point> not_before_;
    std::vector<long long> uses_;
    std::size_t cursor_ = 0;
};

struct RetryPolicy {
    int max_attempts = 6;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    std::chrono::milliseconds max_delay{60000};
    bool full_jitter = true;

    /// Pre-jitter wait after a failed attempt (1-based): base * factor^(n-1),
    /// capped at max_delay. Non-decreasing in the attempt number.
    std::chrono::milliseconds scheduled_delay(int attempt) const;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Retrying completion client. Rotates keys on rate limits (placing the hot
/// key on cooldown for the upstream retry-after hint when present, else the
/// scheduled backoff), sleeps with full jitter between attempts, and stamps
/// results with the attempt count, serving key and wall latency including
/// retries. Safe to call from many workers concurrently.
class LlmClient {
public:
    LlmClient(std::shared_ptr<RawBackend> backend, KeyPool pool, RetryPolicy policy = {},
              std::uint64_t jitter_seed = 0, SleepFn sleep = {});

    CompletionResult complete(const BatchPrompt& prompt, const GenerationParams& params);

    KeyPool& keys() { return pool_; }
    const RetryPolicy& policy() const { return policy_; }

private:
    std::chrono::milliseconds jittered(std::chrono::milliseconds scheduled);

    std::shared_ptr<RawBackend> backend_;
    KeyPool pool_;
    RetryPolicy policy_;
    SleepFn sleep_;
    std::mutex rng_mu_;
    SplitMix64 rng_;
};

} // namespace batchwise
