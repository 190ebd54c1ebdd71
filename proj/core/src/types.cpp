#include "moodcast/types.hpp"

#include <cmath>
#include <stdexcept>

namespace moodcast {

const char* to_string(CallDirection d) {
    switch (d) {
    case CallDirection::incoming: return "incoming";
    case CallDirection::outgoing: return "outgoing";
    case CallDirection::missed: return "missed";
    }
    return "?";
}

std::optional<CallDirection> parse_call_direction(const std::string& s) {
    if (s == "incoming") return CallDirection::incoming;
    if (s == "outgoing") return CallDirection::outgoing;
    if (s == "missed") return CallDirection::missed;
    return std::nullopt;
}

std::optional<std::string> violation(const Timestamp& t) {
    if (t.offset_min < -kMaxUtcOffsetMin || t.offset_min > kMaxUtcOffsetMin) {
        return "utc offset out of range";
    }
    return std::nullopt;
}

std::optional<std::string> violation(const GpsFix& f) {
    if (auto v = violation(f.t)) return v;
    if (!(f.lat >= -90.0 && f.lat <= 90.0)) return "lat out of range";
    if (!(f.lon >= -180.0 && f.lon <= 180.0)) return "lon out of range";
    if (!std::isfinite(f.accuracy_m) || f.accuracy_m < 0.0) return "accuracy invalid";
    if (!std::isfinite(f.speed_mps)) return "speed not finite";
    return std::nullopt;
}

std::optional<std::string> violation(const CallEvent& e) {
    if (auto v = violation(e.t)) return v;
    if (!std::isfinite(e.duration_s) || e.duration_s < 0.0) return "duration negative";
    if (e.direction == CallDirection::missed && e.duration_s != 0.0) {
        return "missed call with nonzero duration";
    }
    if (e.contact.empty()) return "contact empty";
    return std::nullopt;
}

std::optional<std::string> violation(const UsageSession& s) {
    if (auto v = violation(s.start)) return v;
    if (auto v = violation(s.end)) return v;
    if (s.end.instant_ms < s.start.instant_ms) return "end before start";
    return std::nullopt;
}

std::optional<std::string> violation(const AppEvent& e) {
    if (auto v = violation(e.t)) return v;
    if (e.app.empty()) return "app empty";
    return std::nullopt;
}

std::optional<std::string> violation(const LockEvent& e) {
    if (auto v = violation(e.start)) return v;
    if (auto v = violation(e.end)) return v;
    if (e.end.instant_ms < e.start.instant_ms) return "end before start";
    return std::nullopt;
}

std::optional<std::string> violation(const PhqObservation& o) {
    if (o.subject.value.empty()) return "subject empty";
    if (o.day_index < 1) return "day index < 1";
    if (o.score < 0 || o.score > 27) return "score out of range";
    return std::nullopt;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

std::int64_t local_day_number(const Timestamp& t) {
    return floor_div(t.local_ms(), kMsPerDay);
}

std::int64_t local_time_of_day_ms(const Timestamp& t) {
    const std::int64_t r = t.local_ms() - local_day_number(t) * kMsPerDay;
    return r;
}

int local_day_index(const Timestamp& t, const Timestamp& study_start) {
    const std::int64_t d = local_day_number(t) - local_day_number(study_start);
    if (d < 0) throw std::invalid_argument("before study start");
    return static_cast<int>(d) + 1;
}

} // namespace moodcast
