#pragma once

#include "moodcast/geo.hpp"
#include "moodcast/types.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace moodcast::features {

inline constexpr int kFeatureCount = 19;

// Canonical feature order. Indices are stable across the feature matrix, the
// model input, and every CSV this project writes.
enum Feature : int {
    kCallFreq = 0,
    kCallDurMin,
    kNonworkCallFreq,
    kNonworkCallDurMin,
    kMissedCalls,
    kNumContacts,
    kCallEntropy,
    kNormCallEntropy,
    kUsageFreq,
    kUsageDurS,
    kLockDurS,
    kNumApps,
    kNumMidnightApps,
    kSleepTimeH,
    kLocVariance,
    kLocEntropy,
    kNormLocEntropy,
    kTimeAtHome,
    kTotalDistanceM,
};

extern const std::array<const char*, kFeatureCount> kFeatureNames;

// Count-valued features, exact integers by construction.
bool is_count_feature(int index);

enum class FeatureGroup { calls, usage, activity, gps, all };

const char* to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(const std::string& s);

// Half-open index range [first, last) of a group within the 19-vector.
std::pair<int, int> group_span(FeatureGroup g);

// Local-time windows used by the daily features, hours.
inline constexpr int kWorkStartHour = 8;    // working time is [8 am, 6 pm)
inline constexpr int kWorkEndHour = 18;
inline constexpr int kMidnightAppsEndHour = 5; // midnight apps in [0 am, 5 am)
inline constexpr int kSleepAnchorHour = 2;     // same-day anchor must be before 2 am
inline constexpr int kWakeHour = 5;            // wake is first app use at/after 5 am

struct DailyFeatures {
    SubjectId subject;
    int day_index = 1;
    std::array<double, kFeatureCount> values{};
    std::array<bool, kFeatureCount> missing{};
};

// A fully-masked placeholder row for a day with no extracted features.
DailyFeatures placeholder_day(const SubjectId& subject, int day_index);

// The 8 phone-call features of one subject-day, canonical order
// [kCallFreq..kNormCallEntropy]. Events must lie within the local day.
std::array<double, 8> call_features(std::span<const CallEvent> day_events);

// usage_freq and usage_dur_s over sessions already clipped to the local day.
std::array<double, 2> usage_features(std::span<const UsageSession> day_sessions);

struct ActivityFeatures {
    double lock_dur_s = 0.0;
    double n_apps = 0.0;
    double n_midnight_apps = 0.0;
    double sleep_time_h = 0.0;
    bool sleep_missing = true;
};

// Locks must be clipped to the day; app events of the previous local day are
// needed for the sleep anchor.
ActivityFeatures activity_features(std::span<const AppEvent> day_apps,
                                   std::span<const LockEvent> day_locks,
                                   std::span<const AppEvent> prev_day_apps);

DailyFeatures assemble_daily(const SubjectId& subject, int day_index,
                             const std::array<double, 8>& calls,
                             const std::array<double, 2>& usage,
                             const ActivityFeatures& activity,
                             const std::optional<geo::GpsFeatures>& gps);

// Intersects [start, end) intervals with one local day of a study and returns
// the clipped intervals, expressed as (start_local_ms, end_local_ms) offsets
// into that day. Used for usage sessions and lock events.
struct DayWindow {
    std::int64_t local_start_ms; // local epoch ms of the day's midnight
    std::int64_t local_end_ms;
};

DayWindow day_window(const Timestamp& study_start, int day_index);

// features.csv: subject,day,<19 names>,<19 mask bits>
void write_features_csv(const std::filesystem::path& path,
                        const std::map<SubjectId, std::vector<DailyFeatures>>& daily);
std::map<SubjectId, std::vector<DailyFeatures>> read_features_csv(const std::filesystem::path& path);

} // namespace moodcast::features
