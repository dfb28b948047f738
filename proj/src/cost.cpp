#include "batchwise/cost.hpp"

#include <string>

#include "batchwise/errors.hpp"

namespace batchwise {

EfficiencyReport token_efficiency(int exemplar_count, int batch_size) {
    if (exemplar_count < 1) {
        throw DomainError("exemplar count must be >= 1, got " + std::to_string(exemplar_count));
    }
    if (batch_size < 1) {
        throw DomainError("batch size must be >= 1, got " + std::to_string(batch_size));
    }
    EfficiencyReport report;
    report.eta_standard = Rational(1, exemplar_count + 1);
    report.eta_batch = Rational(batch_size, exemplar_count + batch_size);
    report.ratio = report.eta_batch / report.eta_standard;
    return report;
}

DecodeTimeEstimate decode_time(int exemplar_count, int batch_size,
                               const Rational& avg_tokens_per_sample) {
    if (exemplar_count < 0) {
        throw DomainError("exemplar count must be >= 0, got " + std::to_string(exemplar_count));
    }
    if (batch_size < 1) {
        throw DomainError("batch size must be >= 1, got " + std::to_string(batch_size));
    }
    if (!(avg_tokens_per_sample > Rational(0))) {
        throw DomainError("tokens per sample must be positive");
    }

    const Rational& c = avg_tokens_per_sample;
    const Rational ck = c * Rational(exemplar_count);
    const Rational cb = c * Rational(batch_size);

    DecodeTimeEstimate estimate;
    estimate.t_encode = ck * ck;
    estimate.t_decode = c * c * Rational(batch_size) * Rational(exemplar_count) +
                        cb * (cb + Rational(1)) / Rational(2);
    estimate.t_total = estimate.t_encode + estimate.t_decode;
    return estimate;
}

RunProjection estimate_run(const CostParams& params, const Rational& avg_output_tokens,
                           const std::optional<Rational>& price_per_token,
                           const Rational& instruction_tokens_per_call) {
    if (params.exemplar_count < 0) throw DomainError("exemplar count must be >= 0");
    if (params.batch_size < 1) throw DomainError("batch size must be >= 1");
    if (params.dataset_size < 1) throw DomainError("dataset size must be >= 1");
    if (!(params.avg_tokens_per_sample > Rational(0))) {
        throw DomainError("tokens per sample must be positive");
    }
    if (!(avg_output_tokens > Rational(0))) throw DomainError("output tokens must be positive");
    if (instruction_tokens_per_call < Rational(0)) {
        throw DomainError("instruction tokens must be >= 0");
    }
    if (price_per_token && *price_per_token < Rational(0)) {
        throw DomainError("price per token must be >= 0");
    }

    const long long n = params.dataset_size;
    const long long b = params.batch_size;
    const Rational& c = params.avg_tokens_per_sample;

    RunProjection projection;
    projection.calls = (n + b - 1) / b;
    // Every call carries the K demonstrations (context plus output) and its
    // batch's contexts; batch lengths over all calls sum to N.
    projection.prompt_tokens =
        Rational(projection.calls) * Rational(params.exemplar_count) * (c + avg_output_tokens) +
        Rational(n) * c + Rational(projection.calls) * instruction_tokens_per_call;
    projection.generated_tokens = Rational(n) * avg_output_tokens;
    projection.total_tokens = projection.prompt_tokens + projection.generated_tokens;
    if (price_per_token) projection.price = projection.total_tokens * *price_per_token;
    return projection;
}

long long HeuristicTokenCounter::count(std::string_view text) const {
    return static_cast<long long>((text.size() + 3) / 4);
}

long long count_tokens(std::string_view text) {
    return HeuristicTokenCounter{}.count(text);
}

} // namespace batchwise
