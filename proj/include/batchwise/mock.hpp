#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "batchwise/client.hpp"

namespace batchwise {

/// Deterministic test double for a completion backend.
///
/// Modes:
///  - Oracle: answers "label[i]: <cue> <gold>." from a per-id answer table
///  - Fixed: the same text for every index
///  - Faulty: oracle output with drop/duplicate/reorder directives applied
///  - Throttled: rate-limits the first throttle_failures attempts of each
///    prompt, then answers like Oracle (or Fixed when no table is set)
///
/// Randomness (reorder) derives from (seed, batch identity), never from call
/// order, so results are stable under concurrency.
struct MockScript {
    enum class Mode { Oracle, Fixed, Faulty, Throttled };

    Mode mode = Mode::Oracle;
    std::unordered_map<std::string, std::string> answers;  // sample id -> gold
    std::string cue = "The answer is";
    std::string fixed_text = "ok";
    std::optional<int> drop_index;
    std::optional<int> duplicate_index;
    bool reorder = false;
    int throttle_failures = 0;
    std::uint64_t seed = 0;
};

MockScript::Mode mock_mode_from_string(std::string_view name);

class MockBackend : public RawBackend {
public:
    explicit MockBackend(MockScript script);

    CompletionResult attempt(const BatchPrompt& prompt, const GenerationParams& params,
                             std::string_view api_key) override;

private:
    std::vector<std::string> answer_lines(const BatchPrompt& prompt) const;

    MockScript script_;
    std::mutex mu_;
    std::unordered_map<std::uint64_t, int> throttle_counts_;
};

} // namespace batchwise
