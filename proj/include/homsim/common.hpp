#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace homsim {

inline constexpr const char* kVersion = "0.1.0";

// Bad run configuration or parameter values (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative solver hit its cap without meeting its tolerance (CLI exit code 4).
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated internal consistency (a bug, not a user error).
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

// Shortest decimal form that parses back to the identical double.
// Integral values print without a decimal point ("12" not "12.0").
std::string format_double(double v);

// Strict parse of a full string as a double; throws DataError otherwise.
double parse_double(std::string_view s);

}  // namespace homsim
