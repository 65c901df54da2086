#pragma once

#include <stdexcept>
#include <string>

namespace rvisc {

// Raised when an operation is evaluated outside its geometric domain
// (cut locus, coincident points, radius beyond the injectivity radius).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed or inconsistent arguments (mismatched base points, bad sizes).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularBvpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iteration blew up; the message carries the last residuals.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rvisc
