#pragma once

#include <stdexcept>
#include <string>

namespace napv {

/// Malformed input text (model, NAP, dataset files).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a structural invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. delta <= 0.5).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The simplex core could not certify its answer (iteration cap, witness re-check).
class LpInstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace napv
