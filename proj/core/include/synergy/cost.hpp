#pragma once

#include <cstdint>

#include "synergy/money.hpp"

namespace synergy {

// Pricing of one model API call: a per-1000-token price applied to the sum
// of completion and prompt tokens.
struct CostParams {
    Money token_price_per_1000;
    std::int64_t tokens_per_call = 0;
    std::int64_t prompt_tokens = 0;

    // Throws ConfigError on negative counts or a negative price.
    void validate() const;
};

// What one subject consumed: paid human time plus a number of API calls.
struct CostRecord {
    Money hourly_rate;
    double minutes = 0.0;
    std::int64_t api_calls = 0;

    // Throws ConfigError on negative time or counts.
    void validate() const;
};

// (tokens_per_call + prompt_tokens) * token_price / 1000, exact.
Money per_call_cost(const CostParams& params);

// hourly_rate * minutes/60 + api_calls * per_call_cost(params), exact.
// Exactness makes the function linear in minutes and in api_calls with
// equality, not just to rounding error.
Money subject_cost(const CostRecord& record, const CostParams& params);

}  // namespace synergy
