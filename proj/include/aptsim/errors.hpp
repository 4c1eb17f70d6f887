#pragma once

#include <stdexcept>
#include <string>

namespace aptsim {

// Invalid model, strategy or configuration input. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// The observed feedback has probability zero under the conjectured world,
// so the belief posterior is undefined (the filter normalizer is zero).
struct ZeroLikelihoodError : std::runtime_error {
    explicit ZeroLikelihoodError(const std::string& msg) : std::runtime_error(msg) {}
};

// Every candidate conjecture assigns probability zero to the observed feedback.
struct AllZeroLikelihoodError : std::runtime_error {
    explicit AllZeroLikelihoodError(const std::string& msg) : std::runtime_error(msg) {}
};

// A lookahead tree exceeded the configured node budget.
struct BudgetExceededError : std::runtime_error {
    explicit BudgetExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative solver did not reach its tolerance within the iteration cap.
struct NonConvergenceError : std::runtime_error {
    explicit NonConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// A diagnostic was requested on a trace too short for its burn-in window.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace aptsim
