#pragma once

#include <stdexcept>
#include <string>

namespace ucplan {

/// Bad user input: malformed config, out-of-range parameter, invalid
/// probability vector. The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A well-posed planning instance that has no solution (empty constrained
/// set, chance level below what any mixed strategy can reach). Exit code 1.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gradient descent could not make progress towards the stopping set.
class Stagnation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ucplan
