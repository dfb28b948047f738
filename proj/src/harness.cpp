#include "batchwise/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "batchwise/cost.hpp"
#include "batchwise/errors.hpp"
#include "batchwise/jsonl.hpp"
#include "batchwise/rational.hpp"

namespace batchwise {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

// "$1,234." -> "1234"; keeps signs and decimal points.
std::string strip_number_decorations(std::string_view text) {
    std::string out;
    for (char c : trim(text)) {
        if (c == '$' || c == ',' || c == '+') continue;
        out += c;
    }
    while (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

} // namespace

std::string to_string(PromptFormat format) {
    return format == PromptFormat::Chat ? "chat" : "completion";
}

PromptFormat prompt_format_from_string(std::string_view name) {
    if (name == "completion") return PromptFormat::Completion;
    if (name == "chat") return PromptFormat::Chat;
    throw ConfigError("unknown prompt format '" + std::string(name) + "'");
}

std::vector<Sample> load_dataset(const std::string& path) {
    std::vector<Sample> samples;
    std::unordered_set<std::string> seen;
    for_each_jsonl_line(path, [&](int line, const nlohmann::json& record) {
        try {
            Sample sample;
            sample.id = record.at("id").get<std::string>();
            for (const auto& field : record.at("context")) {
                sample.context.push_back(
                    {field.at("label").get<std::string>(), field.at("text").get<std::string>()});
            }
            sample.gold = record.at("gold").get<std::string>();
            if (sample.gold.empty()) {
                throw InvalidFieldError("gold answer is empty");
            }
            sample.kind.tag = answer_kind_tag_from_string(record.at("kind").get<std::string>());
            if (sample.kind.tag == AnswerKind::Tag::LabelSet) {
                sample.kind.labels = record.at("labels").get<std::vector<std::string>>();
            }
            validate(sample);
            if (!seen.insert(sample.id).second) {
                throw DuplicateIdError(path + ":" + std::to_string(line) + ": duplicate id '" +
                                       sample.id + "'");
            }
            samples.push_back(std::move(sample));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
        } catch (const InvalidFieldError& e) {
            throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return samples;
}

bool score(const std::optional<std::string>& predicted, const std::string& gold,
           const AnswerKind& kind) {
    if (!predicted) return false;
    if (kind.tag == AnswerKind::Tag::Numeric) {
        try {
            return Rational::from_decimal(strip_number_decorations(*predicted)) ==
                   Rational::from_decimal(strip_number_decorations(gold));
        } catch (const std::exception&) {
            // Not parseable as decimals; fall through to the string compare.
        }
    }
    return lowercase(trim(*predicted)) == lowercase(trim(gold));
}

namespace {

std::vector<std::string> answer_prefixes_for(const std::string& expected_label) {
    std::vector<std::string> prefixes{expected_label};
    for (const auto& fallback : kDefaultAnswerPrefixes) {
        if (std::find(prefixes.begin(), prefixes.end(), fallback) == prefixes.end()) {
            prefixes.push_back(fallback);
        }
    }
    return prefixes;
}

EmbeddingMatrix embeddings_for(const RunConfig& config, const std::vector<Sample>& samples) {
    if (config.embeddings_path.empty()) {
        return TfidfEmbedder{}.embed(samples);
    }
    EmbeddingMatrix loaded = load_embeddings(config.embeddings_path);
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < loaded.ids.size(); ++i) by_id.emplace(loaded.ids[i], i);

    EmbeddingMatrix aligned;  // dataset order
    for (const auto& sample : samples) {
        const auto it = by_id.find(sample.id);
        if (it == by_id.end()) {
            throw ConfigError("embeddings file lacks a vector for sample '" + sample.id + "'");
        }
        aligned.ids.push_back(sample.id);
        aligned.rows.push_back(loaded.rows[it->second]);
    }
    return aligned;
}

Grouping make_grouping(const RunConfig& config, const std::vector<Sample>& samples) {
    std::vector<std::string> ids;
    ids.reserve(samples.size());
    for (const auto& sample : samples) ids.push_back(sample.id);

    switch (config.strategy) {
        case Strategy::Random: return group_random(ids, config.b, config.seed);
        case Strategy::Similar:
            return group_similar(embeddings_for(config, samples), config.b, config.seed);
        case Strategy::Diverse:
            return group_diverse(embeddings_for(config, samples), config.b, config.diverse);
    }
    throw ConfigError("unhandled strategy");
}

struct CallOutcome {
    CallRecord record;
    std::vector<SampleRecord> samples;
};

} // namespace

RunReport execute_run(const RunConfig& config, const std::vector<Sample>& samples,
                      const std::vector<Exemplar>& exemplars, LlmClient& client) {
    if (config.b < 1) throw ConfigError("b must be >= 1");
    if (config.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (samples.empty()) throw ConfigError("dataset is empty");

    std::unordered_map<std::string, const Sample*> by_id;
    for (const auto& sample : samples) {
        if (!by_id.emplace(sample.id, &sample).second) {
            throw DuplicateIdError("duplicate sample id '" + sample.id + "'");
        }
    }

    const Grouping grouping = make_grouping(config, samples);
    const std::vector<DemoBlock> blocks =
        exemplars.empty() ? std::vector<DemoBlock>{}
                          : make_demo_blocks(exemplars, config.b, config.allow_partial_demo_block);

    const std::size_t call_count = grouping.batches.size();
    std::vector<CallOutcome> outcomes(call_count);
    std::vector<std::exception_ptr> failures(call_count);

    const auto started = std::chrono::steady_clock::now();

    auto process = [&](std::size_t call_index) {
        const auto& batch_ids = grouping.batches[call_index];
        std::vector<Sample> batch;
        batch.reserve(batch_ids.size());
        for (const auto& id : batch_ids) batch.push_back(*by_id.at(id));

        const BatchPrompt prompt =
            config.format == PromptFormat::Chat
                ? render_chat_prompt(blocks, batch, config.system_text)
                : render_completion_prompt(blocks, batch);

        const CompletionResult completion = client.complete(prompt, config.params);
        const ParsedBatch parsed =
            parse_indexed_lines(completion.text, static_cast<int>(batch.size()),
                                answer_prefixes_for(prompt.expected_output_label));

        CallOutcome outcome;
        outcome.record.call_index = static_cast<int>(call_index);
        outcome.record.sample_ids = batch_ids;
        outcome.record.prompt_tokens = completion.prompt_tokens;
        outcome.record.completion_tokens = completion.completion_tokens;
        outcome.record.latency_ms = completion.latency_ms;
        outcome.record.attempts = completion.attempts;
        outcome.record.key_index = completion.key_index;
        outcome.record.parse_diagnostics = parsed.diagnostics;

        for (const auto& [id, raw] : demux(parsed, prompt.sample_ids)) {
            const Sample& sample = *by_id.at(id);
            SampleRecord record;
            record.id = id;
            record.gold = sample.gold;
            if (!raw) {
                record.missing = true;
            } else if (auto extracted = extract_final_answer(*raw, sample.kind)) {
                record.predicted = *extracted;
                record.correct = score(extracted, sample.gold, sample.kind);
            }
            outcome.samples.push_back(std::move(record));
        }
        outcomes[call_index] = std::move(outcome);
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), call_count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < call_count; ++i) {
            try {
                process(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= call_count) break;
                    try {
                        process(i);
                    } catch (...) {
                        failures[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& thread : threads) thread.join();
    }

    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    const double wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    // Collect in batch order regardless of completion order.
    RunReport report;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    for (auto& outcome : outcomes) {
        prompt_tokens += outcome.record.prompt_tokens;
        completion_tokens += outcome.record.completion_tokens;
        report.aggregates.diagnostics_count +=
            static_cast<long long>(outcome.record.parse_diagnostics.size());
        report.per_call.push_back(std::move(outcome.record));
        for (auto& sample_record : outcome.samples) {
            report.aggregates.correct += sample_record.correct ? 1 : 0;
            report.aggregates.missing += sample_record.missing ? 1 : 0;
            report.per_sample.push_back(std::move(sample_record));
        }
    }

    const auto n = static_cast<long long>(samples.size());
    report.aggregates.calls = static_cast<long long>(call_count);
    if (report.aggregates.calls != (n + config.b - 1) / config.b) {
        throw Error("internal: call count " + std::to_string(report.aggregates.calls) +
                    " violates ceil(N/b)");
    }
    report.aggregates.accuracy =
        static_cast<double>(report.aggregates.correct) / static_cast<double>(n);
    report.aggregates.tokens_per_sample =
        static_cast<double>(prompt_tokens + completion_tokens) / static_cast<double>(n);
    report.aggregates.seconds_per_sample = wall_seconds / static_cast<double>(n);
    const long long total_tokens = prompt_tokens + completion_tokens;
    report.aggregates.empirical_eta =
        total_tokens == 0 ? 0.0
                          : static_cast<double>(completion_tokens) /
                                static_cast<double>(total_tokens);
    return report;
}

RunReport run(const RunConfig& config) {
    const std::vector<Sample> samples = load_dataset(config.dataset_path);
    const std::vector<Exemplar> exemplars =
        config.exemplar_path.empty() ? std::vector<Exemplar>{}
                                     : load_exemplars(config.exemplar_path);

    std::shared_ptr<RawBackend> backend;
    std::vector<std::string> keys = config.backend.api_keys;
    if (config.backend.type == "mock") {
        MockScript script = config.backend.mock;
        if (script.answers.empty() && script.mode != MockScript::Mode::Fixed) {
            for (const auto& sample : samples) script.answers.emplace(sample.id, sample.gold);
        }
        backend = std::make_shared<MockBackend>(std::move(script));
        if (keys.empty()) keys = {"mock-key"};
    } else if (config.backend.type == "http") {
        backend = std::make_shared<HttpBackend>(config.backend.http);
    } else {
        throw ConfigError("unknown backend type '" + config.backend.type + "'");
    }

    KeyPool pool = keys.empty() ? KeyPool::from_env() : KeyPool(std::move(keys));
    RetryPolicy policy;
    policy.max_attempts = config.backend.max_attempts;
    LlmClient client(backend, std::move(pool), policy, config.seed);
    return execute_run(config, samples, exemplars, client);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (base / p).string();
    };

    RunConfig config;
    try {
        config.dataset_path = resolve(body.at("dataset").get<std::string>());
        config.exemplar_path = resolve(body.value("exemplars", std::string{}));
        config.embeddings_path = resolve(body.value("embeddings", std::string{}));
        config.b = body.value("b", 1);
        config.strategy = strategy_from_string(body.value("strategy", "random"));
        config.seed = body.value("seed", 0ULL);
        config.format = prompt_format_from_string(body.value("format", "completion"));
        config.max_in_flight = body.value("max_in_flight", 1);
        config.system_text = body.value("system_text", std::string(kDefaultChatSystemText));
        config.allow_partial_demo_block = body.value("allow_partial_demo_block", false);
        config.diverse.k_nn = body.value("knn", 0);
        config.diverse.rho = body.value("rho", 10.0);

        if (body.contains("params")) {
            const auto& params = body["params"];
            config.params.temperature = params.value("temperature", 0.0);
            config.params.top_p = params.value("top_p", 1.0);
            config.params.n_samples = params.value("n", 1);
            if (params.contains("stop")) {
                if (params["stop"].is_null()) {
                    config.params.stop.reset();
                } else {
                    config.params.stop = params["stop"].get<std::string>();
                }
            }
            if (params.contains("max_tokens") && !params["max_tokens"].is_null()) {
                config.params.max_tokens = params["max_tokens"].get<int>();
            }
            config.params.model = params.value("model", std::string{});
        }

        if (body.contains("backend")) {
            const auto& backend = body["backend"];
            config.backend.type = backend.value("type", "mock");
            config.backend.max_attempts = backend.value("max_attempts", 6);
            config.backend.mock.mode =
                mock_mode_from_string(backend.value("mode", "oracle"));
            config.backend.mock.cue = backend.value("cue", std::string("The answer is"));
            config.backend.mock.fixed_text = backend.value("fixed_text", std::string("ok"));
            if (backend.contains("drop_index") && !backend["drop_index"].is_null()) {
                config.backend.mock.drop_index = backend["drop_index"].get<int>();
            }
            if (backend.contains("duplicate_index") && !backend["duplicate_index"].is_null()) {
                config.backend.mock.duplicate_index = backend["duplicate_index"].get<int>();
            }
            config.backend.mock.reorder = backend.value("reorder", false);
            config.backend.mock.throttle_failures = backend.value("throttle_failures", 0);
            config.backend.mock.seed = backend.value("mock_seed", 0ULL);
            config.backend.http.base_url = backend.value("base_url", std::string{});
            config.backend.http.timeout_seconds = backend.value("timeout_seconds", 120);
            if (backend.contains("api_keys")) {
                config.backend.api_keys = backend["api_keys"].get<std::vector<std::string>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config;
}

namespace {

nlohmann::ordered_json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& diagnostic : diagnostics) {
        out.push_back({{"severity", to_string(diagnostic.severity)},
                       {"code", diagnostic.code},
                       {"detail", diagnostic.detail}});
    }
    return out;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    return buffer;
}

} // namespace

nlohmann::ordered_json report_to_json(const RunReport& report) {
    nlohmann::ordered_json out;
    out["aggregates"] = {{"accuracy", report.aggregates.accuracy},
                         {"calls", report.aggregates.calls},
                         {"correct", report.aggregates.correct},
                         {"missing", report.aggregates.missing},
                         {"tokens_per_sample", report.aggregates.tokens_per_sample},
                         {"seconds_per_sample", report.aggregates.seconds_per_sample},
                         {"empirical_eta", report.aggregates.empirical_eta},
                         {"diagnostics_count", report.aggregates.diagnostics_count}};

    nlohmann::ordered_json calls = nlohmann::ordered_json::array();
    for (const auto& call : report.per_call) {
        nlohmann::ordered_json record;
        record["call_index"] = call.call_index;
        record["sample_ids"] = call.sample_ids;
        record["prompt_tokens"] = call.prompt_tokens;
        record["completion_tokens"] = call.completion_tokens;
        record["latency_ms"] = call.latency_ms;
        record["attempts"] = call.attempts;
        if (call.key_index) {
            record["key_index"] = *call.key_index;
        } else {
            record["key_index"] = nullptr;
        }
        record["parse_diagnostics"] = diagnostics_to_json(call.parse_diagnostics);
        calls.push_back(std::move(record));
    }
    out["per_call"] = std::move(calls);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& sample : report.per_sample) {
        rows.push_back({{"id", sample.id},
                        {"predicted", sample.predicted},
                        {"gold", sample.gold},
                        {"correct", sample.correct},
                        {"missing", sample.missing}});
    }
    out["per_sample"] = std::move(rows);
    return out;
}

std::string report_to_csv(const RunReport& report) {
    std::string out =
        "accuracy,calls,tokens_per_sample,seconds_per_sample,empirical_eta,diagnostics_count\n";
    out += format_double(report.aggregates.accuracy) + "," +
           std::to_string(report.aggregates.calls) + "," +
           format_double(report.aggregates.tokens_per_sample) + "," +
           format_double(report.aggregates.seconds_per_sample) + "," +
           format_double(report.aggregates.empirical_eta) + "," +
           std::to_string(report.aggregates.diagnostics_count) + "\n";
    out += "id,predicted,gold,correct,missing\n";
    for (const auto& sample : report.per_sample) {
        out += csv_escape(sample.id) + "," + csv_escape(sample.predicted) + "," +
               csv_escape(sample.gold) + "," + (sample.correct ? "true" : "false") + "," +
               (sample.missing ? "true" : "false") + "\n";
    }
    return out;
}

void emit_report(const RunReport& report, std::string_view format, const std::string& path) {
    std::string payload;
    if (format == "json") {
        payload = report_to_json(report).dump(2);
        payload += '\n';
    } else if (format == "csv") {
        payload = report_to_csv(report);
    } else {
        throw ConfigError("unknown report format '" + std::string(format) + "'");
    }

    if (path == "-") {
        std::cout << payload;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << payload;
    if (!out) throw IoError("failed writing '" + path + "'");
}

nlohmann::ordered_json grouping_to_json(const Grouping& grouping) {
    nlohmann::ordered_json out;
    out["strategy"] = to_string(grouping.strategy);
    out["seed"] = grouping.seed;
    out["batches"] = grouping.batches;
    return out;
}

} // namespace batchwise
