#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed LTL text. `position()` is the 0-based byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Scenario document does not satisfy the schema or its semantic checks.
class ScenarioError : public Error {
public:
    using Error::Error;
};

/// A lookup referenced a region, automaton state or proposition that does not exist.
class UnknownId : public Error {
public:
    using Error::Error;
};

/// The hard task cannot be satisfied from the requested start states.
class NoAcceptingRun : public Error {
public:
    using Error::Error;
};

/// Every candidate insertion of a temporary task violates the hard task.
class NoFeasibleInsertion : public Error {
public:
    using Error::Error;
};

/// No hard-consistent product run projects onto the given region trace.
class NoLift : public Error {
public:
    using Error::Error;
};

/// A margin-augmented search found no path between the demonstration endpoints.
class NoPath : public Error {
public:
    using Error::Error;
};

}  // namespace mixplan
