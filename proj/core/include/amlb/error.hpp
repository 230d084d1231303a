#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amlb {

// Malformed or truncated binary encodings (weight files, chain files, payloads).
struct CodecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row-level CSV problems; `line` is 1-based and counts the header.
struct ParseError : std::runtime_error {
    size_t line;
    ParseError(const std::string& msg, size_t line_no)
        : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

// Operation invoked on an object in the wrong state (e.g. untrained surrogate).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Second signature attempt with a one-time Lamport key.
struct KeyReuseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pseudonym submitted more than one transaction to the same chain.
struct DoubleSubmissionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transaction rejected at append time (bad signature, empty payload).
struct TransactionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Nonce space exhausted during proof-of-work search.
struct MiningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace amlb
