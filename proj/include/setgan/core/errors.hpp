#pragma once

#include <stdexcept>
#include <string>

namespace setgan {

/// Input data is missing, malformed, or unusable (rejected clips, empty
/// datasets, unreadable files). Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric invariant was violated at runtime (NaN loss, divergent update).
/// Carries a diagnostic record for post-mortem dumps. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, std::string diagnostic = {})
        : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}

    const std::string& diagnostic() const { return diagnostic_; }

private:
    std::string diagnostic_;
};

}  // namespace setgan
