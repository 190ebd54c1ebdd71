#include "moodcast/features.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace moodcast::features {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "call_freq",        "call_dur_min",    "nonwork_call_freq", "nonwork_call_dur_min",
    "missed_calls",     "n_contacts",      "call_entropy",      "norm_call_entropy",
    "usage_freq",       "usage_dur_s",     "lock_dur_s",        "n_apps",
    "n_midnight_apps",  "sleep_time_h",    "loc_variance",      "loc_entropy",
    "norm_loc_entropy", "time_at_home",    "total_distance_m",
};

bool is_count_feature(int index) {
    switch (index) {
    case kCallFreq:
    case kNonworkCallFreq:
    case kMissedCalls:
    case kNumContacts:
    case kUsageFreq:
    case kNumApps:
    case kNumMidnightApps:
        return true;
    default:
        return false;
    }
}

const char* to_string(FeatureGroup g) {
    switch (g) {
    case FeatureGroup::calls: return "calls";
    case FeatureGroup::usage: return "usage";
    case FeatureGroup::activity: return "activity";
    case FeatureGroup::gps: return "gps";
    case FeatureGroup::all: return "all";
    }
    return "?";
}

std::optional<FeatureGroup> parse_feature_group(const std::string& s) {
    if (s == "calls") return FeatureGroup::calls;
    if (s == "usage") return FeatureGroup::usage;
    if (s == "activity") return FeatureGroup::activity;
    if (s == "gps") return FeatureGroup::gps;
    if (s == "all") return FeatureGroup::all;
    return std::nullopt;
}

std::pair<int, int> group_span(FeatureGroup g) {
    switch (g) {
    case FeatureGroup::calls: return {kCallFreq, kUsageFreq};
    case FeatureGroup::usage: return {kUsageFreq, kLockDurS};
    case FeatureGroup::activity: return {kLockDurS, kLocVariance};
    case FeatureGroup::gps: return {kLocVariance, kFeatureCount};
    case FeatureGroup::all: return {0, kFeatureCount};
    }
    return {0, kFeatureCount};
}

DailyFeatures placeholder_day(const SubjectId& subject, int day_index) {
    DailyFeatures d;
    d.subject = subject;
    d.day_index = day_index;
    d.values.fill(std::numeric_limits<double>::quiet_NaN());
    d.missing.fill(true);
    return d;
}

namespace {

bool in_working_hours(const Timestamp& t) {
    const std::int64_t tod = local_time_of_day_ms(t);
    return tod >= kWorkStartHour * kMsPerHour && tod < kWorkEndHour * kMsPerHour;
}

} // namespace

std::array<double, 8> call_features(std::span<const CallEvent> day_events) {
    std::array<double, 8> out{};
    std::map<std::string, double> contact_duration; // answered/made calls only
    double total_dur_s = 0.0;

    for (const auto& e : day_events) {
        if (e.direction == CallDirection::missed) {
            out[4] += 1.0; // missed_calls
            continue;
        }
        out[0] += 1.0;                    // call_freq
        out[1] += e.duration_s / 60.0;    // call_dur_min
        if (!in_working_hours(e.t)) {
            out[2] += 1.0;                 // nonwork_call_freq
            out[3] += e.duration_s / 60.0; // nonwork_call_dur_min
        }
        contact_duration[e.contact] += e.duration_s;
        total_dur_s += e.duration_s;
    }

    out[5] = static_cast<double>(contact_duration.size()); // n_contacts

    double entropy = 0.0;
    if (total_dur_s > 0.0) {
        for (const auto& [contact, dur] : contact_duration) {
            if (dur <= 0.0) continue;
            const double p = dur / total_dur_s;
            entropy -= p * std::log(p);
        }
    }
    out[6] = entropy;
    out[7] = contact_duration.size() > 1 ? entropy / std::log(static_cast<double>(contact_duration.size())) : 0.0;
    return out;
}

std::array<double, 2> usage_features(std::span<const UsageSession> day_sessions) {
    std::array<double, 2> out{};
    for (const auto& s : day_sessions) {
        out[0] += 1.0;
        out[1] += static_cast<double>(s.end.local_ms() - s.start.local_ms()) / 1000.0;
    }
    return out;
}

ActivityFeatures activity_features(std::span<const AppEvent> day_apps,
                                   std::span<const LockEvent> day_locks,
                                   std::span<const AppEvent> prev_day_apps) {
    ActivityFeatures out;

    for (const auto& l : day_locks) {
        out.lock_dur_s += static_cast<double>(l.end.local_ms() - l.start.local_ms()) / 1000.0;
    }

    std::map<std::string, int> apps;
    std::map<std::string, int> midnight_apps;
    for (const auto& e : day_apps) {
        apps[e.app] += 1;
        if (local_time_of_day_ms(e.t) < kMidnightAppsEndHour * kMsPerHour) {
            midnight_apps[e.app] += 1;
        }
    }
    out.n_apps = static_cast<double>(apps.size());
    out.n_midnight_apps = static_cast<double>(midnight_apps.size());

    // Sleep anchor: last app use before 2 am the same day when one exists,
    // otherwise the last app use of the previous day. Wake: first app use at
    // or after 5 am the same day.
    std::optional<std::int64_t> anchor_ms;
    for (const auto& e : day_apps) {
        if (local_time_of_day_ms(e.t) < kSleepAnchorHour * kMsPerHour) {
            const std::int64_t v = e.t.local_ms();
            if (!anchor_ms || v > *anchor_ms) anchor_ms = v;
        }
    }
    if (!anchor_ms) {
        for (const auto& e : prev_day_apps) {
            const std::int64_t v = e.t.local_ms();
            if (!anchor_ms || v > *anchor_ms) anchor_ms = v;
        }
    }

    std::optional<std::int64_t> wake_ms;
    for (const auto& e : day_apps) {
        if (local_time_of_day_ms(e.t) >= kWakeHour * kMsPerHour) {
            const std::int64_t v = e.t.local_ms();
            if (!wake_ms || v < *wake_ms) wake_ms = v;
        }
    }

    if (anchor_ms && wake_ms && *wake_ms >= *anchor_ms) {
        out.sleep_time_h = static_cast<double>(*wake_ms - *anchor_ms) / static_cast<double>(kMsPerHour);
        out.sleep_missing = false;
    }
    return out;
}

DailyFeatures assemble_daily(const SubjectId& subject, int day_index,
                             const std::array<double, 8>& calls,
                             const std::array<double, 2>& usage,
                             const ActivityFeatures& activity,
                             const std::optional<geo::GpsFeatures>& gps) {
    DailyFeatures d;
    d.subject = subject;
    d.day_index = day_index;
    d.missing.fill(false);

    for (int i = 0; i < 8; ++i) d.values[static_cast<std::size_t>(i)] = calls[static_cast<std::size_t>(i)];
    d.values[kUsageFreq] = usage[0];
    d.values[kUsageDurS] = usage[1];
    d.values[kLockDurS] = activity.lock_dur_s;
    d.values[kNumApps] = activity.n_apps;
    d.values[kNumMidnightApps] = activity.n_midnight_apps;

    if (activity.sleep_missing) {
        d.values[kSleepTimeH] = std::numeric_limits<double>::quiet_NaN();
        d.missing[kSleepTimeH] = true;
    } else {
        d.values[kSleepTimeH] = activity.sleep_time_h;
    }

    if (!gps) {
        for (int i = kLocVariance; i < kFeatureCount; ++i) {
            d.values[static_cast<std::size_t>(i)] = std::numeric_limits<double>::quiet_NaN();
            d.missing[static_cast<std::size_t>(i)] = true;
        }
    } else {
        if (gps->variance_missing) {
            d.values[kLocVariance] = std::numeric_limits<double>::quiet_NaN();
            d.missing[kLocVariance] = true;
        } else {
            d.values[kLocVariance] = gps->location_variance;
        }
        d.values[kLocEntropy] = gps->location_entropy;
        d.values[kNormLocEntropy] = gps->normalized_location_entropy;
        d.values[kTimeAtHome] = gps->time_at_home;
        d.values[kTotalDistanceM] = gps->total_distance_m;
    }
    return d;
}

DayWindow day_window(const Timestamp& study_start, int day_index) {
    const std::int64_t day0 = local_day_number(study_start);
    const std::int64_t start = (day0 + day_index - 1) * kMsPerDay;
    return {start, start + kMsPerDay};
}

void write_features_csv(const std::filesystem::path& path,
                        const std::map<SubjectId, std::vector<DailyFeatures>>& daily) {
    std::vector<std::string> columns = {"subject", "day"};
    for (const char* name : kFeatureNames) columns.emplace_back(name);
    for (const char* name : kFeatureNames) columns.emplace_back(std::string(name) + "_missing");

    csv::TableWriter w(path, columns);
    std::vector<std::string> row;
    for (const auto& [subject, days] : daily) {
        for (const auto& d : days) {
            row.clear();
            row.push_back(subject.value);
            row.push_back(std::to_string(d.day_index));
            for (int i = 0; i < kFeatureCount; ++i) {
                row.push_back(csv::format_double(d.values[static_cast<std::size_t>(i)]));
            }
            for (int i = 0; i < kFeatureCount; ++i) {
                row.push_back(d.missing[static_cast<std::size_t>(i)] ? "1" : "0");
            }
            w.row(row);
        }
    }
}

std::map<SubjectId, std::vector<DailyFeatures>> read_features_csv(const std::filesystem::path& path) {
    std::vector<std::string> columns = {"subject", "day"};
    for (const char* name : kFeatureNames) columns.emplace_back(name);
    for (const char* name : kFeatureNames) columns.emplace_back(std::string(name) + "_missing");

    csv::TableReader r(path, columns);
    std::map<SubjectId, std::vector<DailyFeatures>> out;
    std::vector<std::string> fields;
    std::vector<csv::RejectedRow> rejects;
    while (r.next(fields, rejects)) {
        DailyFeatures d;
        d.subject = SubjectId{fields[0]};
        const auto day = csv::parse_i64(fields[1]);
        if (!day || *day < 1) {
            throw DataError("bad day index in " + path.string() + " line " + std::to_string(r.line_number()));
        }
        d.day_index = static_cast<int>(*day);
        for (int i = 0; i < kFeatureCount; ++i) {
            const auto v = csv::parse_f64(fields[static_cast<std::size_t>(2 + i)]);
            if (!v) throw DataError("bad feature value in " + path.string());
            d.values[static_cast<std::size_t>(i)] = *v;
        }
        for (int i = 0; i < kFeatureCount; ++i) {
            const auto& bit = fields[static_cast<std::size_t>(2 + kFeatureCount + i)];
            d.missing[static_cast<std::size_t>(i)] = bit == "1";
        }
        out[d.subject].push_back(d);
    }
    if (!rejects.empty()) {
        throw DataError("malformed rows in " + path.string() + " (first at line " +
                        std::to_string(rejects.front().line) + ": " + rejects.front().reason + ")");
    }
    for (auto& [subject, days] : out) {
        std::sort(days.begin(), days.end(),
                  [](const DailyFeatures& a, const DailyFeatures& b) { return a.day_index < b.day_index; });
    }
    return out;
}

} // namespace moodcast::features
