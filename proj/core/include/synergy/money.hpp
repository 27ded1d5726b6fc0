#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace synergy {

// Exact monetary amount. Internally a big-integer rational (dollars), so
// sums, scalar products, and divisions by exact factors carry no rounding at
// all; rounding happens once, at the formatting boundary. This is what makes
// the cost model exactly linear instead of linear-up-to-float-noise.
class Money {
public:
    using Rational = boost::multiprecision::cpp_rational;

    Money() = default;
    explicit Money(Rational value) : value_(std::move(value)) {}

    // Parses a plain decimal string such as "16.28" or "-0.06".
    // Throws ConfigError on anything else (exponents, percent signs, ...).
    static Money parse(std::string_view decimal);

    // Exact value of a binary double (every finite double is rational).
    static Money from_double(double value);

    static Money zero() { return Money{}; }

    const Rational& value() const noexcept { return value_; }
    double to_double() const;

    // Fixed-point decimal rendering with round-half-up at the last digit,
    // e.g. to_string(2) -> "11.24".
    std::string to_string(int decimals = 2) const;

    Money operator+(const Money& other) const { return Money(value_ + other.value_); }
    Money operator-(const Money& other) const { return Money(value_ - other.value_); }
    Money& operator+=(const Money& other) {
        value_ += other.value_;
        return *this;
    }
    Money operator*(const Rational& factor) const { return Money(value_ * factor); }
    Money operator/(const Rational& divisor) const { return Money(value_ / divisor); }

    friend Money operator*(const Rational& factor, const Money& m) { return m * factor; }

    bool operator==(const Money& other) const { return value_ == other.value_; }
    bool operator!=(const Money& other) const { return value_ != other.value_; }
    bool operator<(const Money& other) const { return value_ < other.value_; }
    bool operator<=(const Money& other) const { return value_ <= other.value_; }
    bool operator>(const Money& other) const { return value_ > other.value_; }
    bool operator>=(const Money& other) const { return value_ >= other.value_; }

private:
    Rational value_ = 0;
};

}  // namespace synergy
