#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "batchwise/client.hpp"
#include "batchwise/grouping.hpp"
#include "batchwise/http.hpp"
#include "batchwise/mock.hpp"
#include "batchwise/parse.hpp"

namespace batchwise {

enum class PromptFormat { Completion, Chat };

std::string to_string(PromptFormat format);
PromptFormat prompt_format_from_string(std::string_view name);

struct BackendConfig {
    std::string type = "mock";  // "mock" | "http"
    MockScript mock;            // mock only; an empty answer table is filled from dataset golds
    HttpEndpointConfig http;    // http only
    std::vector<std::string> api_keys;  // http only; falls back to BATCHWISE_API_KEYS
    int max_attempts = 6;
};

struct RunConfig {
    std::string dataset_path;
    std::string exemplar_path;
    std::string embeddings_path;  // optional; similar/diverse only
    int b = 1;
    Strategy strategy = Strategy::Random;
    std::uint64_t seed = 0;
    PromptFormat format = PromptFormat::Completion;
    BackendConfig backend;
    GenerationParams params;
    int max_in_flight = 1;
    std::string system_text{kDefaultChatSystemText};
    bool allow_partial_demo_block = false;
    DiverseParams diverse;
};

/// Reads a JSON run config; relative paths resolve against the config file's
/// directory.
RunConfig load_run_config(const std::string& path);

/// Loads samples from JSONL, one object per line:
/// {"id": str, "context": [{"label","text"},...], "gold": str,
///  "kind": "choice-letter"|"numeric"|"binary"|"label-set",
///  "labels": [str, ...]}   (labels required for label-set only)
/// Throws ParseError naming the offending line, or DuplicateIdError.
std::vector<Sample> load_dataset(const std::string& path);

/// Missing predictions are wrong; numeric answers compare by exact decimal
/// value ("8.0" equals "8"); everything else case-insensitively.
bool score(const std::optional<std::string>& predicted, const std::string& gold,
           const AnswerKind& kind);

struct CallRecord {
    int call_index = 0;
    std::vector<std::string> sample_ids;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long latency_ms = 0;
    int attempts = 1;
    std::optional<int> key_index;
    std::vector<Diagnostic> parse_diagnostics;
};

struct SampleRecord {
    std::string id;
    std::string predicted;  // normalized; empty when missing or unextractable
    std::string gold;
    bool correct = false;
    bool missing = false;
};

struct Aggregates {
    double accuracy = 0.0;
    long long calls = 0;
    long long correct = 0;
    long long missing = 0;
    double tokens_per_sample = 0.0;
    double seconds_per_sample = 0.0;
    double empirical_eta = 0.0;  // sum(completion) / sum(prompt + completion)
    long long diagnostics_count = 0;
};

struct RunReport {
    std::vector<CallRecord> per_call;
    std::vector<SampleRecord> per_sample;
    Aggregates aggregates;
};

/// Core pipeline against an already-built client: group, render, complete,
/// parse, demux, extract, score. Batches run concurrently up to
/// config.max_in_flight; aggregation always follows batch order.
RunReport execute_run(const RunConfig& config, const std::vector<Sample>& samples,
                      const std::vector<Exemplar>& exemplars, LlmClient& client);

/// Loads everything named by the config, builds the backend, runs.
RunReport run(const RunConfig& config);

nlohmann::ordered_json report_to_json(const RunReport& report);

/// Aggregates row first, then one row per sample.
std::string report_to_csv(const RunReport& report);

/// format is "json" or "csv"; path "-" writes to stdout.
void emit_report(const RunReport& report, std::string_view format, const std::string& path);

nlohmann::ordered_json grouping_to_json(const Grouping& grouping);

} // namespace batchwise
