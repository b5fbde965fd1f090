#pragma once

#include <stdexcept>
#include <string>

namespace raz {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// A root bracket could not be established (signals a violated precondition).
struct BracketError : Error {
    using Error::Error;
};

// An iteration failed to reach its tolerance within the iteration budget.
struct ConvergenceError : Error {
    using Error::Error;
};

// The deviating argument ceased to lag (a + c*u <= 0): numerical failure.
struct DelayCollapse : Error {
    using Error::Error;
};

// Requested integration step exceeds the stability guard (step > a/4).
struct StepTooLarge : Error {
    using Error::Error;
};

// File input/output failure; message carries the path.
struct IoError : Error {
    using Error::Error;
};

} // namespace raz
