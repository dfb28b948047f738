#include "batchwise/mock.hpp"

#include "batchwise/cost.hpp"
#include "batchwise/errors.hpp"

namespace batchwise {

namespace {

std::uint64_t batch_identity(const BatchPrompt& prompt) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const auto& id : prompt.sample_ids) {
        hash = fnv1a(id, hash);
        hash = fnv1a("\x1f", hash);
    }
    return hash;
}

long long prompt_token_estimate(const BatchPrompt& prompt) {
    if (!prompt.is_chat()) return count_tokens(prompt.completion_text());
    long long total = 0;
    for (const auto& message : prompt.messages()) total += count_tokens(message.text);
    return total;
}

} // namespace

MockScript::Mode mock_mode_from_string(std::string_view name) {
    if (name == "oracle") return MockScript::Mode::Oracle;
    if (name == "fixed") return MockScript::Mode::Fixed;
    if (name == "faulty") return MockScript::Mode::Faulty;
    if (name == "throttled") return MockScript::Mode::Throttled;
    throw ConfigError("unknown mock mode '" + std::string(name) + "'");
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

std::vector<std::string> MockBackend::answer_lines(const BatchPrompt& prompt) const {
    const std::string& label = prompt.expected_output_label;
    const bool fixed = script_.mode == MockScript::Mode::Fixed ||
                       (script_.mode == MockScript::Mode::Throttled && script_.answers.empty());

    std::vector<std::string> lines;
    lines.reserve(prompt.sample_ids.size());
    for (std::size_t i = 0; i < prompt.sample_ids.size(); ++i) {
        std::string line = label + "[" + std::to_string(i + 1) + "]: ";
        if (fixed) {
            line += script_.fixed_text;
        } else {
            const auto it = script_.answers.find(prompt.sample_ids[i]);
            if (it == script_.answers.end()) {
                throw UnknownSampleError("no scripted answer for sample '" +
                                         prompt.sample_ids[i] + "'");
            }
            if (!script_.cue.empty()) {
                line += script_.cue;
                line += ' ';
            }
            line += it->second;
            line += '.';
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

CompletionResult MockBackend::attempt(const BatchPrompt& prompt, const GenerationParams& params,
                                      std::string_view api_key) {
    (void)params;
    (void)api_key;
    const std::uint64_t identity = batch_identity(prompt);

    if (script_.mode == MockScript::Mode::Throttled) {
        std::lock_guard<std::mutex> lock(mu_);
        int& failures = throttle_counts_[identity];
        if (failures < script_.throttle_failures) {
            ++failures;
            throw RateLimitedError("mock throttle (" + std::to_string(failures) + "/" +
                                   std::to_string(script_.throttle_failures) + ")");
        }
    }

    std::vector<std::string> lines = answer_lines(prompt);
    if (script_.mode == MockScript::Mode::Faulty) {
        const int m = static_cast<int>(lines.size());
        if (script_.drop_index && *script_.drop_index >= 1 && *script_.drop_index <= m) {
            lines.erase(lines.begin() + (*script_.drop_index - 1));
        }
        if (script_.duplicate_index && *script_.duplicate_index >= 1 &&
            *script_.duplicate_index <= static_cast<int>(lines.size())) {
            const auto at = lines.begin() + (*script_.duplicate_index - 1);
            lines.insert(at + 1, *at);
        }
        if (script_.reorder) {
            SplitMix64 rng(script_.seed * 0x9e3779b97f4a7c15ULL ^ identity);
            rng.shuffle(lines);
        }
    }

    std::string text;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i != 0) text += '\n';
        text += lines[i];
    }

    CompletionResult result;
    result.text = std::move(text);
    result.prompt_tokens = prompt_token_estimate(prompt);
    result.completion_tokens = count_tokens(result.text);
    return result;
}

} // namespace batchwise
