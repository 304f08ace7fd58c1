#pragma once

#include <stdexcept>
#include <string>

namespace sequency {

/// Malformed or invalid input data (bad rows, out-of-range levels, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coordinator/worker exchange failed: missing, truncated or mismatched message.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sequency
