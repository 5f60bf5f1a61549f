#pragma once

#include <stdexcept>
#include <string>

namespace emel {

// Input that violates a documented precondition or schema. The CLI maps these
// to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Failure while integrating a valid problem (blow-up, step cap, step collapse).
// The CLI maps these to exit code 3.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double last_valid_time)
        : std::runtime_error(what), last_valid_time_(last_valid_time) {}

    double last_valid_time() const noexcept { return last_valid_time_; }

private:
    double last_valid_time_;
};

}  // namespace emel
