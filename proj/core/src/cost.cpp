#include "synergy/cost.hpp"

#include <cmath>

#include "synergy/errors.hpp"

namespace synergy {

void CostParams::validate() const {
    if (token_price_per_1000 < Money::zero()) {
        throw ConfigError("token price must be non-negative");
    }
    if (tokens_per_call < 0 || prompt_tokens < 0) {
        throw ConfigError("token counts must be non-negative");
    }
}

void CostRecord::validate() const {
    if (hourly_rate < Money::zero()) {
        throw ConfigError("hourly rate must be non-negative");
    }
    if (!std::isfinite(minutes) || minutes < 0.0) {
        throw ConfigError("minutes must be finite and non-negative");
    }
    if (api_calls < 0) {
        throw ConfigError("api_calls must be non-negative");
    }
}

Money per_call_cost(const CostParams& params) {
    params.validate();
    const Money::Rational tokens = params.tokens_per_call + params.prompt_tokens;
    return params.token_price_per_1000 * tokens / Money::Rational(1000);
}

Money subject_cost(const CostRecord& record, const CostParams& params) {
    record.validate();
    const Money human = record.hourly_rate * Money::from_double(record.minutes).value() / Money::Rational(60);
    const Money machine = per_call_cost(params) * Money::Rational(record.api_calls);
    return human + machine;
}

}  // namespace synergy
