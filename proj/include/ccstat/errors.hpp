#pragma once
// Error taxonomy for the ccstat library.
//
// Every failure mode maps to one of four categories, which the CLI translates
// into its stable exit-code contract:
//   0  success
//   2  infeasible problem        (InfeasibleError, or a solve ending Infeasible)
//   3  validation-gate violation (GateError: sample-count gates, domain
//      restrictions on alpha/lambda, degenerate sample sets, bad models)
//   4  input/output error        (IoError and StructuralError: missing or
//      malformed files, schema mismatches, shape mismatches in loaded data)

#include <stdexcept>
#include <string>

namespace ccstat {

class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& message)
        : std::runtime_error(message), tag_(std::move(tag)) {}
    // Short machine-readable tag, e.g. "insufficient-samples".
    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

// Shape/dimension mismatches and other malformed in-memory structures.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Violations of mathematical preconditions: sample-count gates, alpha or
// lambda outside their admissible domains, degenerate sample sets,
// non-factorizable covariance models, negative variance radicands.
class GateError : public Error {
public:
    using Error::Error;
};

// Definite infeasibility detected from problem data (e.g. a constraint row
// that no admissible input can satisfy).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// File-system and serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

namespace exit_code {
inline constexpr int success = 0;
inline constexpr int infeasible = 2;
inline constexpr int gate = 3;
inline constexpr int io = 4;
} // namespace exit_code

} // namespace ccstat
