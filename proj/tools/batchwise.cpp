#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "batchwise/cost.hpp"
#include "batchwise/errors.hpp"
#include "batchwise/harness.hpp"

namespace {

using namespace batchwise;

std::string format_rational(const Rational& value) {
    if (value.is_integer()) return value.to_string();
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value.to_double());
    return buffer;
}

int cmd_run(const std::string& config_path, std::optional<int> b,
            std::optional<std::string> strategy, std::optional<std::uint64_t> seed,
            std::optional<std::string> format, std::optional<std::string> backend,
            const std::string& out_path, const std::string& report_format) {
    RunConfig config = load_run_config(config_path);
    if (b) config.b = *b;
    if (strategy) config.strategy = strategy_from_string(*strategy);
    if (seed) config.seed = *seed;
    if (format) config.format = prompt_format_from_string(*format);
    if (backend) config.backend.type = *backend;

    const RunReport report = run(config);
    emit_report(report, report_format, out_path);
    std::fprintf(stderr, "accuracy %.4f over %lld calls (%lld correct, %lld missing)\n",
                 report.aggregates.accuracy, report.aggregates.calls, report.aggregates.correct,
                 report.aggregates.missing);
    return 0;
}

int cmd_simulate(int k, const std::string& c_text, const std::vector<int>& batch_sizes,
                 long long n, std::optional<std::string> c_out_text,
                 std::optional<std::string> price_text, const std::string& instruction_text) {
    const Rational c = Rational::from_decimal(c_text);
    const Rational c_out = c_out_text ? Rational::from_decimal(*c_out_text) : c;
    const Rational instruction = Rational::from_decimal(instruction_text);
    std::optional<Rational> price;
    if (price_text) price = Rational::from_decimal(*price_text);

    std::cout << "b,eta_standard,eta_batch,ratio,t_total,calls,prompt_tokens,generated_tokens,"
                 "price\n";
    for (int b : batch_sizes) {
        const EfficiencyReport efficiency = token_efficiency(k, b);
        const DecodeTimeEstimate time = decode_time(k, b, c);
        CostParams params;
        params.exemplar_count = k;
        params.batch_size = b;
        params.dataset_size = n;
        params.avg_tokens_per_sample = c;
        const RunProjection projection = estimate_run(params, c_out, price, instruction);

        std::cout << b << ',' << format_rational(efficiency.eta_standard) << ','
                  << format_rational(efficiency.eta_batch) << ','
                  << format_rational(efficiency.ratio) << ',' << format_rational(time.t_total)
                  << ',' << projection.calls << ',' << format_rational(projection.prompt_tokens)
                  << ',' << format_rational(projection.generated_tokens) << ','
                  << (projection.price ? format_rational(*projection.price) : std::string{})
                  << '\n';
    }
    return 0;
}

int cmd_group(const std::string& dataset_path, int b, const std::string& strategy_name,
              std::uint64_t seed, int k_nn, double rho, const std::string& embeddings_path) {
    const std::vector<Sample> samples = load_dataset(dataset_path);
    RunConfig config;
    config.b = b;
    config.seed = seed;
    config.strategy = strategy_from_string(strategy_name);
    config.embeddings_path = embeddings_path;
    config.diverse = {k_nn, rho};

    Grouping grouping;
    std::vector<std::string> ids;
    for (const auto& sample : samples) ids.push_back(sample.id);
    switch (config.strategy) {
        case Strategy::Random: grouping = group_random(ids, b, seed); break;
        case Strategy::Similar: {
            const EmbeddingMatrix matrix = embeddings_path.empty()
                                               ? TfidfEmbedder{}.embed(samples)
                                               : load_embeddings(embeddings_path);
            grouping = group_similar(matrix, b, seed);
            break;
        }
        case Strategy::Diverse: {
            const EmbeddingMatrix matrix = embeddings_path.empty()
                                               ? TfidfEmbedder{}.embed(samples)
                                               : load_embeddings(embeddings_path);
            grouping = group_diverse(matrix, b, config.diverse);
            break;
        }
    }
    std::cout << grouping_to_json(grouping).dump(2) << '\n';
    return 0;
}

int cmd_parse(const std::string& response_path, int expected,
              std::vector<std::string> prefixes) {
    std::string text;
    if (response_path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        text = buffer.str();
    } else {
        std::ifstream in(response_path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + response_path + "'");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        text = buffer.str();
    }

    if (prefixes.empty()) prefixes = kDefaultAnswerPrefixes;
    const ParsedBatch parsed = parse_indexed_lines(text, expected, prefixes);

    nlohmann::ordered_json out;
    nlohmann::ordered_json answers;
    for (const auto& [index, answer] : parsed.answers) {
        answers[std::to_string(index)] = answer;
    }
    out["expected"] = parsed.expected;
    out["answers"] = std::move(answers);
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::array();
    for (const auto& diagnostic : parsed.diagnostics) {
        diagnostics.push_back({{"severity", to_string(diagnostic.severity)},
                               {"code", diagnostic.code},
                               {"detail", diagnostic.detail}});
    }
    out["diagnostics"] = std::move(diagnostics);
    std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"batchwise: batch prompting runs, grouping, parsing and cost projections"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "Execute a batch-prompting run from a JSON config");
    std::string config_path;
    std::optional<int> b_override;
    std::optional<std::string> strategy_override, format_override, backend_override;
    std::optional<std::uint64_t> seed_override;
    std::string out_path = "-";
    std::string report_format = "json";
    run_cmd->add_option("--config", config_path, "Run config JSON")->required();
    run_cmd->add_option("--b", b_override, "Samples per batch");
    run_cmd->add_option("--strategy", strategy_override, "random | similar | diverse");
    run_cmd->add_option("--seed", seed_override, "Grouping / jitter seed");
    run_cmd->add_option("--format", format_override, "completion | chat");
    run_cmd->add_option("--backend", backend_override, "mock | http");
    run_cmd->add_option("--out", out_path, "Report path ('-' for stdout)");
    run_cmd->add_option("--report-format", report_format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // simulate
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Project token efficiency, decode time and run cost");
    int k = 12;
    std::string c_text = "100";
    std::vector<int> batch_sizes;
    long long n = 300;
    std::optional<std::string> c_out_text, price_text;
    std::string instruction_text = "0";
    simulate_cmd->add_option("--k", k, "In-context exemplar count")->required();
    simulate_cmd->add_option("--c", c_text, "Average tokens per sample")->required();
    simulate_cmd->add_option("--b", batch_sizes, "Batch sizes (comma separated)")
        ->required()
        ->delimiter(',');
    simulate_cmd->add_option("--n", n, "Test set size");
    simulate_cmd->add_option("--c-out", c_out_text, "Average generated tokens (defaults to --c)");
    simulate_cmd->add_option("--price", price_text, "Price per token");
    simulate_cmd->add_option("--instruction-tokens", instruction_text,
                             "Fixed instruction tokens per call");

    // group
    auto* group_cmd = app.add_subcommand("group", "Partition a dataset into batches");
    std::string dataset_path, group_strategy = "random", embeddings_path;
    int group_b = 1;
    std::uint64_t group_seed = 0;
    int k_nn = 0;
    double rho = 10.0;
    group_cmd->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
    group_cmd->add_option("--b", group_b, "Samples per batch")->required();
    group_cmd->add_option("--strategy", group_strategy, "random | similar | diverse");
    group_cmd->add_option("--seed", group_seed, "Grouping seed");
    group_cmd->add_option("--knn", k_nn, "Neighbor count for diverse (0 = default)");
    group_cmd->add_option("--rho", rho, "Vote discount for diverse");
    group_cmd->add_option("--embeddings", embeddings_path, "Pre-computed embeddings JSONL");

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "Parse a batch response offline");
    std::string response_path;
    int expected = 1;
    std::vector<std::string> prefixes;
    parse_cmd->add_option("--response", response_path, "Response text file ('-' for stdin)")
        ->required();
    parse_cmd->add_option("--expected", expected, "Expected answer count")->required();
    parse_cmd->add_option("--prefix", prefixes, "Answer prefixes (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            return cmd_run(config_path, b_override, strategy_override, seed_override,
                           format_override, backend_override, out_path, report_format);
        }
        if (simulate_cmd->parsed()) {
            return cmd_simulate(k, c_text, batch_sizes, n, c_out_text, price_text,
                                instruction_text);
        }
        if (group_cmd->parsed()) {
            return cmd_group(dataset_path, group_b, group_strategy, group_seed, k_nn, rho,
                             embeddings_path);
        }
        if (parse_cmd->parsed()) {
            return cmd_parse(response_path, expected, prefixes);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
