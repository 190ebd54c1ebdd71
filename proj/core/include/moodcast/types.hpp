#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace moodcast {

inline constexpr std::int64_t kMsPerSecond = 1'000;
inline constexpr std::int64_t kMsPerMinute = 60'000;
inline constexpr std::int64_t kMsPerHour = 3'600'000;
inline constexpr std::int64_t kMsPerDay = 86'400'000;

// Largest UTC offset accepted, minutes (UTC+-14:00).
inline constexpr std::int32_t kMaxUtcOffsetMin = 840;

// Opaque cohort-unique participant token.
struct SubjectId {
    std::string value;
    auto operator<=>(const SubjectId&) const = default;
};

// An instant plus the UTC offset that was in effect for the subject when it
// was recorded. All day-boundary logic works on local wall time.
struct Timestamp {
    std::int64_t instant_ms = 0; // UTC epoch milliseconds
    std::int32_t offset_min = 0; // minutes east of UTC, in [-840, 840]

    std::int64_t local_ms() const { return instant_ms + static_cast<std::int64_t>(offset_min) * kMsPerMinute; }

    auto operator<=>(const Timestamp&) const = default;
};

enum class CallDirection { incoming, outgoing, missed };

const char* to_string(CallDirection d);
std::optional<CallDirection> parse_call_direction(const std::string& s);

struct GpsFix {
    Timestamp t;
    double lat = 0.0;        // degrees, [-90, 90]
    double lon = 0.0;        // degrees, [-180, 180]
    double accuracy_m = 0.0; // >= 0, finite
    double speed_mps = 0.0;  // negative means the reading is invalid
};

struct CallEvent {
    Timestamp t;
    CallDirection direction = CallDirection::incoming;
    double duration_s = 0.0; // missed calls carry 0
    std::string contact;     // opaque hashed token
};

struct UsageSession {
    Timestamp start;
    Timestamp end; // end >= start
};

struct AppEvent {
    Timestamp t;
    std::string app; // opaque token, non-empty
};

struct LockEvent {
    Timestamp start;
    Timestamp end; // end >= start
};

struct PhqObservation {
    SubjectId subject;
    int day_index = 1; // 1-based study day the questionnaire was answered
    int score = 0;     // [0, 27]
};

// Invariant checks used both by ingestion (to quarantine rows) and by tests.
// Returns the violated constraint, or nullopt when the value is well formed.
std::optional<std::string> violation(const Timestamp& t);
std::optional<std::string> violation(const GpsFix& f);
std::optional<std::string> violation(const CallEvent& e);
std::optional<std::string> violation(const UsageSession& s);
std::optional<std::string> violation(const AppEvent& e);
std::optional<std::string> violation(const LockEvent& e);
std::optional<std::string> violation(const PhqObservation& o);

// Calendar day number of a local instant (days since the local epoch day,
// floored, so it is valid for instants before 1970 too).
std::int64_t local_day_number(const Timestamp& t);

// Milliseconds since local midnight, in [0, kMsPerDay).
std::int64_t local_time_of_day_ms(const Timestamp& t);

// 1-based study day of t relative to study_start, both in local wall time.
// Throws std::invalid_argument("before study start") when t's local day
// precedes study_start's.
int local_day_index(const Timestamp& t, const Timestamp& study_start);

} // namespace moodcast
