#pragma once

#include <stdexcept>
#include <string>

namespace kgsens {

// Malformed input that the caller can fix (bad arguments, unknown names).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input data is unusable: parse failures, empty splits, out-of-range ids.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical analysis cannot proceed (zero variance, too few rows).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kgsens
