#pragma once

#include <stdexcept>
#include <string>

namespace nvl {

// Invalid parameters or configuration. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation that could not produce a trustworthy number (non-finite
// values, non-convergence, exhausted resolution). Exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nvl
