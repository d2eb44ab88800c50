#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace coldwarm {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using Timestamp = std::int64_t;

/// One interaction in dense-id space. `position` is the row index in the
/// original input stream and is the final tie-breaker for every ordering.
struct Event {
    UserId user = 0;
    ItemId item = 0;
    Timestamp timestamp = 0;
    double weight = 1.0;
    std::uint64_t position = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Chronological order with stream position as tie-breaker.
inline bool chronological(const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.position < b.position;
}

// Error taxonomy. The CLI maps these onto exit codes.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class RunFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace coldwarm
