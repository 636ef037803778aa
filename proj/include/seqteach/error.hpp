#pragma once

#include <stdexcept>
#include <string>

namespace seqteach {

/// Malformed or inconsistent input data (files, columns, alignments).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value supplied by the caller.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while running a computation (corrupt state, I/O, numerics).
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace seqteach
