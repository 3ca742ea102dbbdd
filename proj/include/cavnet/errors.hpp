#pragma once

#include <stdexcept>
#include <string>

namespace cavnet {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed graph/route/profile structure (dangling endpoints, unknown
// edges, missing or extra map entries).
struct StructuralError : Error {
    using Error::Error;
};

// A value violates a type invariant (capacity <= 0, duplicate id, NaN).
struct AttributeError : Error {
    using Error::Error;
};

// An operation was called outside its precondition (theta < 0, traveler
// not competing on the edge).
struct DomainError : Error {
    using Error::Error;
};

// The feasible region of the allocation problem is empty.
struct InfeasibilityError : Error {
    using Error::Error;
};

// The brute-force oracle was asked for more decision dimensions than it
// is allowed to enumerate.
struct OracleScopeError : Error {
    using Error::Error;
};

// Scenario or profile file could not be parsed; message carries context.
struct ParseError : Error {
    using Error::Error;
};

// Unknown suite name / bad CLI usage.
struct UsageError : Error {
    using Error::Error;
};

}  // namespace cavnet
