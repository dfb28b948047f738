#include "batchwise/client.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "batchwise/errors.hpp"

namespace batchwise {

using std::chrono::milliseconds;
using std::chrono::steady_clock;

void validate(const GenerationParams& params) {
    if (params.temperature < 0.0) throw DomainError("temperature must be >= 0");
    if (!(params.top_p > 0.0) || params.top_p > 1.0) throw DomainError("top_p must be in (0, 1]");
    if (params.n_samples < 1) throw DomainError("n_samples must be >= 1");
    if (params.max_tokens && *params.max_tokens < 1) throw DomainError("max_tokens must be >= 1");
}

KeyPool::KeyPool(std::vector<std::string> keys) : keys_(std::move(keys)) {
    if (keys_.empty()) throw ConfigError("key pool requires at least one key");
    not_before_.assign(keys_.size(), steady_clock::time_point::min());
    uses_.assign(keys_.size(), 0);
}

KeyPool::KeyPool(KeyPool&& other) noexcept {
    std::lock_guard<std::mutex> lock(other.mu_);
    keys_ = std::move(other.keys_);
    not_before_ = std::move(other.not_before_);
    uses_ = std::move(other.uses_);
    cursor_ = other.cursor_;
}

KeyPool KeyPool::from_env(const char* variable) {
    const char* raw = std::getenv(variable);
    if (raw == nullptr || *raw == '\0') {
        throw ConfigError(std::string(variable) + " is not set");
    }
    std::vector<std::string> keys;
    std::string current;
    for (const char* p = raw;; ++p) {
        if (*p == ',' || *p == '\0') {
            const auto begin = current.find_first_not_of(" \t");
            if (begin != std::string::npos) {
                const auto end = current.find_last_not_of(" \t");
                keys.push_back(current.substr(begin, end - begin + 1));
            }
            current.clear();
            if (*p == '\0') break;
        } else {
            current += *p;
        }
    }
    if (keys.empty()) throw ConfigError(std::string(variable) + " holds no keys");
    return KeyPool(std::move(keys));
}

KeyPool::Lease KeyPool::checkout() {
    std::lock_guard<std::mutex> lock(mu_);
    const auto now = steady_clock::now();
    const std::size_t n = keys_.size();

    for (std::size_t offset = 0; offset < n; ++offset) {
        const std::size_t index = (cursor_ + offset) % n;
        if (not_before_[index] <= now) {
            cursor_ = (index + 1) % n;
            ++uses_[index];
            return {static_cast<int>(index), keys_[index], milliseconds(0)};
        }
    }

    // Everything is cooling: lease the key that frees up soonest, scanning in
    // rotation order so ties stay fair.
    std::size_t best = cursor_ % n;
    for (std::size_t offset = 0; offset < n; ++offset) {
        const std::size_t index = (cursor_ + offset) % n;
        if (not_before_[index] < not_before_[best]) best = index;
    }
    cursor_ = (best + 1) % n;
    ++uses_[best];
    const auto wait = std::chrono::duration_cast<milliseconds>(not_before_[best] - now);
    return {static_cast<int>(best), keys_[best], wait < milliseconds(0) ? milliseconds(0) : wait};
}

void KeyPool::report_rate_limited(int index, milliseconds cooldown) {
    std::lock_guard<std::mutex> lock(mu_);
    not_before_[static_cast<std::size_t>(index)] = steady_clock::now() + cooldown;
}

void KeyPool::report_success(int index) {
    std::lock_guard<std::mutex> lock(mu_);
    not_before_[static_cast<std::size_t>(index)] = steady_clock::time_point::min();
}

std::size_t KeyPool::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return keys_.size();
}

std::vector<long long> KeyPool::usage_counts() const {
    std::lock_guard<std::mutex> lock(mu_);
    return uses_;
}

milliseconds RetryPolicy::scheduled_delay(int attempt) const {
    double delay = static_cast<double>(base_delay.count()) *
                   std::pow(factor, std::max(0, attempt - 1));
    delay = std::min(delay, static_cast<double>(max_delay.count()));
    return milliseconds(static_cast<long long>(std::llround(delay)));
}

LlmClient::LlmClient(std::shared_ptr<RawBackend> backend, KeyPool pool, RetryPolicy policy,
                     std::uint64_t jitter_seed, SleepFn sleep)
    : backend_(std::move(backend)),
      pool_(std::move(pool)),
      policy_(policy),
      sleep_(sleep ? std::move(sleep)
                   : [](milliseconds d) { std::this_thread::sleep_for(d); }),
      rng_(jitter_seed) {
    if (backend_ == nullptr) throw ConfigError("client requires a backend");
    if (policy_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

milliseconds LlmClient::jittered(milliseconds scheduled) {
    if (!policy_.full_jitter || scheduled.count() <= 0) return scheduled;
    std::lock_guard<std::mutex> lock(rng_mu_);
    return milliseconds(static_cast<long long>(
        rng_.below(static_cast<std::uint64_t>(scheduled.count()) + 1)));
}

CompletionResult LlmClient::complete(const BatchPrompt& prompt, const GenerationParams& params) {
    validate(params);
    const auto start = steady_clock::now();

    for (int attempt = 1;; ++attempt) {
        KeyPool::Lease lease = pool_.checkout();
        if (lease.wait.count() > 0) sleep_(lease.wait);
        try {
            CompletionResult result = backend_->attempt(prompt, params, lease.key);
            pool_.report_success(lease.index);
            result.attempts = attempt;
            result.key_index = lease.index;
            result.latency_ms =
                std::chrono::duration_cast<milliseconds>(steady_clock::now() - start).count();
            return result;
        } catch (const RateLimitedError& e) {
            const milliseconds scheduled = policy_.scheduled_delay(attempt);
            pool_.report_rate_limited(lease.index, e.retry_after.value_or(scheduled));
            if (attempt >= policy_.max_attempts) {
                throw ExhaustedError("gave up after " + std::to_string(attempt) +
                                     " attempts; last error: " + e.what());
            }
            sleep_(jittered(scheduled));
        } catch (const TransportError& e) {
            if (attempt >= policy_.max_attempts) {
                throw ExhaustedError("gave up after " + std::to_string(attempt) +
                                     " attempts; last error: " + e.what());
            }
            sleep_(jittered(policy_.scheduled_delay(attempt)));
        }
    }
}

} // namespace batchwise
