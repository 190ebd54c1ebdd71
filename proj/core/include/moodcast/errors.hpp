#pragma once

#include <stdexcept>
#include <string>

namespace moodcast {

// Exit-code bearing errors. main() maps these to the documented process
// exit codes: usage 1, data 2, divergence 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

} // namespace moodcast
