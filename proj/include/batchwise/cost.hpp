#pragma once

#include <optional>
#include <string_view>

#include "batchwise/rational.hpp"

namespace batchwise {

/// Closed-form cost model inputs: exemplar count K, samples per batch b,
/// test set size N, and average tokens per sample C.
struct CostParams {
    int exemplar_count = 0;
    int batch_size = 1;
    long long dataset_size = 1;
    Rational avg_tokens_per_sample{100};
};

/// Fractions of call tokens that are generated rather than prompt.
struct EfficiencyReport {
    Rational eta_standard;  // one sample per call
    Rational eta_batch;     // batch_size samples per call
    Rational ratio;         // eta_batch / eta_standard
};

/// Unitless decoder time for one call: quadratic encode of the prompt, then
/// one step per generated token over a growing context.
struct DecodeTimeEstimate {
    Rational t_encode;
    Rational t_decode;
    Rational t_total;
};

struct RunProjection {
    long long calls = 0;
    Rational prompt_tokens;
    Rational generated_tokens;
    Rational total_tokens;
    std::optional<Rational> price;
};

/// eta_standard = 1/(K+1), eta_batch = b/(K+b), exactly.
EfficiencyReport token_efficiency(int exemplar_count, int batch_size);

/// t_encode = (C*K)^2, t_decode = C^2*b*K + C*b*(C*b+1)/2, all exact.
DecodeTimeEstimate decode_time(int exemplar_count, int batch_size,
                               const Rational& avg_tokens_per_sample);

/// Token/price projection for a whole run: ceil(N/b) calls, each carrying the
/// K demonstrations (context plus output) and its batch's contexts.
RunProjection estimate_run(const CostParams& params, const Rational& avg_output_tokens,
                           const std::optional<Rational>& price_per_token = {},
                           const Rational& instruction_tokens_per_call = Rational(0));

class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual long long count(std::string_view text) const = 0;
};

/// ceil(chars/4), the usual rough estimate for completion APIs. Backend
/// reported usage always takes precedence over this fallback.
class HeuristicTokenCounter : public TokenCounter {
public:
    long long count(std::string_view text) const override;
};

long long count_tokens(std::string_view text);

} // namespace batchwise
