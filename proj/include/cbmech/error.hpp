#pragma once

#include <stdexcept>
#include <string>

namespace cbmech {

// Bad input: malformed config, out-of-chart point, inconsistent field
// shapes. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A well-posed task failed numerically: singular system, non-converged
// solve, tolerance not reached. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cbmech
