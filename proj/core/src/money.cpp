#include "synergy/money.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "synergy/errors.hpp"

namespace synergy {

using boost::multiprecision::cpp_int;

Money Money::parse(std::string_view decimal) {
    std::size_t i = 0;
    bool negative = false;
    if (i < decimal.size() && (decimal[i] == '+' || decimal[i] == '-')) {
        negative = decimal[i] == '-';
        ++i;
    }
    cpp_int digits = 0;
    int scale = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (; i < decimal.size(); ++i) {
        const char c = decimal[i];
        if (c == '.') {
            if (seen_point) throw ConfigError("invalid decimal: " + std::string(decimal));
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits = digits * 10 + (c - '0');
            if (seen_point) ++scale;
            seen_digit = true;
        } else {
            throw ConfigError("invalid decimal: " + std::string(decimal));
        }
    }
    if (!seen_digit) throw ConfigError("invalid decimal: " + std::string(decimal));
    cpp_int den = 1;
    for (int k = 0; k < scale; ++k) den *= 10;
    Rational v(digits, den);
    if (negative) v = -v;
    return Money(v);
}

Money Money::from_double(double value) {
    if (!std::isfinite(value)) throw ConfigError("monetary value must be finite");
    // Decompose into mantissa * 2^exp exactly.
    int exp = 0;
    double mant = std::frexp(value, &exp);
    // 53 doublings make the mantissa integral.
    for (int k = 0; k < 53; ++k) {
        mant *= 2.0;
        --exp;
    }
    Rational v(cpp_int(static_cast<long long>(mant)));
    if (exp > 0) {
        v *= Rational(cpp_int(1) << exp);
    } else if (exp < 0) {
        v /= Rational(cpp_int(1) << -exp);
    }
    return Money(v);
}

double Money::to_double() const {
    return static_cast<double>(value_);
}

std::string Money::to_string(int decimals) const {
    if (decimals < 0) throw ConfigError("decimals must be non-negative");
    Rational v = value_;
    const bool negative = v < 0;
    if (negative) v = -v;
    cpp_int pow10 = 1;
    for (int k = 0; k < decimals; ++k) pow10 *= 10;
    // round(v * 10^d) with half-up: floor(v * 10^d + 1/2)
    Rational scaled = v * Rational(pow10) + Rational(1, 2);
    cpp_int units = numerator(scaled) / denominator(scaled);  // floor (operands >= 0)
    cpp_int whole = units / pow10;
    cpp_int frac = units % pow10;
    std::string out = negative && units != 0 ? "-" : "";
    out += whole.str();
    if (decimals > 0) {
        std::string f = frac.str();
        out += "." + std::string(static_cast<std::size_t>(decimals) - f.size(), '0') + f;
    }
    return out;
}

}  // namespace synergy
