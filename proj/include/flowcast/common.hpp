#pragma once

#include <stdexcept>
#include <string>

namespace flowcast {

// Malformed files, unreadable paths, broken on-disk data.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation was called with inputs that violate its contract.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw InvalidArgument(msg);
}

} // namespace flowcast
