#pragma once

#include <stdexcept>
#include <string>

namespace padicdiff {

/// Invalid input or violated model invariant. The CLI maps this to exit code 1.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Numerical failure: non-convergence, singular system, overflow. CLI exit code 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

} // namespace padicdiff
