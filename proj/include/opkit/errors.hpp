#pragma once

#include <stdexcept>
#include <string>

namespace opkit {

// Malformed or inconsistent input (CLI exit code 2).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A mathematical precondition failed: ill-conditioning, a violated identity,
// a vector outside the required null space (CLI exit code 1).
class MathError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A configured size or term budget was exceeded (CLI exit code 3).
class BudgetError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace opkit
