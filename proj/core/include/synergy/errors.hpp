#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synergy {

// Base class for all library errors. Callers that only need to distinguish
// "bad input or data" from "programming error" can catch this type alone.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration: malformed MetricSpec, SimConfig, level outside (0,1), ...
class ConfigError : public Error {
public:
    using Error::Error;
};

// Mathematical domain violation: value at or below a transform's pole,
// value at the upper bound (infinite odds), non-positive outcome, ...
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data. Carries the 1-based row number when
// the problem is addressable to a specific row of an input file.
class DataError : public Error {
public:
    using Error::Error;
    DataError(std::size_t row, const std::string& message)
        : Error("row " + std::to_string(row) + ": " + message), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_ = 0;
};

// Design matrix not of full column rank.
class RankError : public Error {
public:
    using Error::Error;
};

// Ratio with zero numerator and zero denominator: no defined value.
class UndefinedRatioError : public Error {
public:
    using Error::Error;
};

// Fieller interval whose denominator is not significantly different from
// zero: the confidence set is unbounded and no finite interval exists.
class UnboundedIntervalError : public Error {
public:
    using Error::Error;
};

}  // namespace synergy
