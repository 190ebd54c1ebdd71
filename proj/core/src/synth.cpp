#include "moodcast/synth.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/ingest.hpp"
#include "moodcast/pipeline.hpp"
#include "moodcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

namespace moodcast::synth {

namespace {

// Local calendar day the studies start on (all subjects share it; offsets
// differ). 2023-03-06.
constexpr std::int64_t kStudyLocalDay = 19'422;
constexpr std::int64_t kFixPeriodMs = 5 * kMsPerMinute;
constexpr double kFixAccuracyM = 10.0;
constexpr double kTransitSpeedMps = 8.0;

// Generator-local great-circle distance (atan2 form). Deliberately a
// different code path from the extraction side's distance function.
double gc_distance_m(double lat1, double lon1, double lat2, double lon2) {
    const double d = std::numbers::pi / 180.0;
    const double p1 = lat1 * d;
    const double p2 = lat2 * d;
    const double dl = (lon2 - lon1) * d;
    const double y = std::sqrt(std::pow(std::cos(p2) * std::sin(dl), 2.0) +
                               std::pow(std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl), 2.0));
    const double x = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
    return 6'371'000.0 * std::atan2(y, x);
}

struct Site {
    double lat = 0.0;
    double lon = 0.0;
};

// One contiguous stay; fix times are inclusive bounds on the 5-minute grid.
struct Visit {
    int site = 0; // 0 home, 1 work, 2 park
    std::int64_t first_tod_ms = 0;
    std::int64_t last_tod_ms = 0;
};

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

int clampi(double v, int lo, int hi) {
    return static_cast<int>(clampd(std::round(v), static_cast<double>(lo), static_cast<double>(hi)));
}

struct SubjectStreams {
    std::vector<CallEvent> calls;
    std::vector<UsageSession> usage;
    std::vector<AppEvent> apps;
    std::vector<LockEvent> locks;
    std::vector<GpsFix> gps;
    std::vector<PhqObservation> phq;
};

class SubjectBuilder {
public:
    SubjectBuilder(const SynthConfig& config, int subject_index)
        : config_(config), index_(subject_index) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "s%03d", subject_index + 1);
        id_ = SubjectId{buf};

        static constexpr std::int32_t kOffsets[3] = {60, 0, -300};
        offset_min_ = kOffsets[subject_index % 3];
        study_start_ = Timestamp{kStudyLocalDay * kMsPerDay - static_cast<std::int64_t>(offset_min_) * kMsPerMinute,
                                 offset_min_};

        // Subjects share the site layout; clustering is per subject, so
        // nothing couples across the cohort, and a zero-effect config then
        // yields numerically identical feature rows for everyone.
        sites_[0] = {47.30, 8.20};                              // home
        sites_[1] = {sites_[0].lat + 0.018, sites_[0].lon + 0.008}; // work
        sites_[2] = {sites_[0].lat - 0.015, sites_[0].lon + 0.015}; // park

        for (int c = 0; c < 5; ++c) contacts_.push_back(id_.value + "_c" + std::to_string(c));
        for (int a = 0; a < 12; ++a) apps_.push_back(id_.value + "_a" + std::to_string(a));
    }

    const SubjectId& id() const { return id_; }
    const Timestamp& study_start() const { return study_start_; }

    // Builds all streams and the expected feature rows.
    void build(SubjectStreams& streams, std::vector<features::DailyFeatures>& truth_days,
               std::vector<WeekTruth>& truth_weeks) {
        // Weekly latent trajectory: spread starting points cover the whole
        // severity range across the cohort, then a bounded random walk.
        Rng week_rng = Rng::derive(config_.seed, {static_cast<std::uint64_t>(index_), 0x7765656bULL});
        const double denom = std::max(1, config_.n_subjects - 1);
        double latent = 1.0 + 25.0 * static_cast<double>(index_) / denom;
        for (int w = 1; w <= config_.n_weeks; ++w) {
            WeekTruth wt;
            wt.week = w;
            wt.latent = latent;
            wt.observed = clampi(latent, 0, 27);
            truth_weeks.push_back(wt);
            streams.phq.push_back(PhqObservation{id_, w * 7, wt.observed});
            latent = clampd(latent + config_.weekly_step * week_rng.uniform(-1.0, 1.0), 0.0, 27.0);
        }

        std::vector<AppEvent> prev_day_apps;
        for (int day = 1; day <= config_.n_weeks * 7; ++day) {
            const double level = truth_weeks[static_cast<std::size_t>((day - 1) / 7)].latent / 27.0;
            build_day(day, level, streams, prev_day_apps, truth_days);
        }
    }

private:
    Timestamp at(int day, std::int64_t tod_ms) const {
        const std::int64_t local = (kStudyLocalDay + day - 1) * kMsPerDay + tod_ms;
        return Timestamp{local - static_cast<std::int64_t>(offset_min_) * kMsPerMinute, offset_min_};
    }

    void build_day(int day, double level, SubjectStreams& streams, std::vector<AppEvent>& prev_day_apps,
                   std::vector<features::DailyFeatures>& truth_days) {
        // One shared day stream for the whole cohort: subjects differ only
        // through their latent level, so a zero-effect config produces a
        // behaviourally identical cohort.
        Rng rng = Rng::derive(config_.seed, {static_cast<std::uint64_t>(day)});

        features::DailyFeatures truth;
        truth.subject = id_;
        truth.day_index = day;
        truth.missing.fill(false);

        std::vector<AppEvent> day_apps = build_apps(day, level, rng, streams, truth);
        build_calls(day, level, rng, streams, truth);
        build_usage(day, level, rng, streams, truth);
        build_locks(day, level, rng, streams, truth);
        build_gps(day, level, rng, streams, truth);
        fill_sleep(day_apps, prev_day_apps, truth);

        prev_day_apps = std::move(day_apps);
        truth_days.push_back(truth);
    }

    std::vector<AppEvent> build_apps(int day, double level, Rng& rng, SubjectStreams& streams,
                                     features::DailyFeatures& truth) {
        using features::Feature;
        std::vector<AppEvent> events;

        const double wake_h =
            clampd(5.6 + 2.8 * config_.activity_effect * level + 0.35 * config_.noise * rng.normal(), 5.05, 11.5);
        const double last_h =
            clampd(22.4 - 1.2 * config_.activity_effect * level + 0.30 * config_.noise * rng.normal(), 20.5, 23.8);
        const std::int64_t wake_ms = static_cast<std::int64_t>(std::llround(wake_h * 3600.0)) * 1000;
        const std::int64_t last_ms = static_cast<std::int64_t>(std::llround(last_h * 3600.0)) * 1000;

        std::set<std::string> used;

        // Wake and evening events bracket the daytime app usage.
        std::vector<std::string> pool = apps_;
        rng.shuffle(pool);
        events.push_back(AppEvent{at(day, wake_ms), pool[0]});
        used.insert(pool[0]);

        const int n_day = clampi(7.5 - 4.5 * config_.activity_effect * level + 1.2 * config_.noise * rng.normal(),
                                 1, 10);
        for (int k = 1; k < n_day; ++k) {
            const std::string& app = pool[static_cast<std::size_t>(k % static_cast<int>(pool.size()))];
            const std::int64_t lo = wake_ms + 10 * kMsPerMinute;
            const std::int64_t hi = last_ms - 10 * kMsPerMinute;
            if (hi <= lo) break;
            const std::int64_t tod = lo + rng.uniform_int(0, (hi - lo) / kMsPerMinute) * kMsPerMinute +
                                     static_cast<std::int64_t>(k) * 1000;
            events.push_back(AppEvent{at(day, std::min(tod, hi)), app});
            used.insert(app);
        }
        events.push_back(AppEvent{at(day, last_ms), pool[0]});

        const int n_mid = clampi(3.2 * config_.activity_effect * level + 0.6 * config_.noise * rng.normal(), 0, 5);
        std::vector<std::string> mid_pool = apps_;
        rng.shuffle(mid_pool);
        std::set<std::string> mid_used;
        for (int k = 0; k < n_mid; ++k) {
            const std::string& app = mid_pool[static_cast<std::size_t>(k)];
            // Strictly inside [2 am, 5 am): counts as midnight use without
            // becoming the sleep anchor or the wake event.
            const std::int64_t tod = 2 * kMsPerHour + 5 * kMsPerMinute +
                                     rng.uniform_int(0, 160) * kMsPerMinute + static_cast<std::int64_t>(k) * 1000;
            events.push_back(AppEvent{at(day, tod), app});
            used.insert(app);
            mid_used.insert(app);
        }

        truth.values[Feature::kNumApps] = static_cast<double>(used.size());
        truth.values[Feature::kNumMidnightApps] = static_cast<double>(mid_used.size());

        std::sort(events.begin(), events.end(), [](const AppEvent& a, const AppEvent& b) {
            return std::tie(a.t.instant_ms, a.app) < std::tie(b.t.instant_ms, b.app);
        });
        streams.apps.insert(streams.apps.end(), events.begin(), events.end());
        return events;
    }

    void build_calls(int day, double level, Rng& rng, SubjectStreams& streams, features::DailyFeatures& truth) {
        using features::Feature;
        const int n_calls =
            clampi(2.2 - 1.2 * config_.call_effect * level + 0.9 * config_.noise * rng.normal(), 0, 6);
        const int n_missed = rng.uniform() < 0.25 + 0.3 * config_.call_effect * level ? 1 : 0;

        std::map<std::string, double> contact_dur;
        double total_dur_s = 0.0;
        double dur_min = 0.0;
        double nonwork_freq = 0.0;
        double nonwork_dur_min = 0.0;

        for (int k = 0; k < n_calls; ++k) {
            const std::int64_t tod = (7 * 60 + rng.uniform_int(0, 14 * 60 - 1)) * kMsPerMinute +
                                     static_cast<std::int64_t>(k) * 1500;
            const double dur_s = static_cast<double>(rng.uniform_int(45, 600));
            const auto& contact = contacts_[static_cast<std::size_t>(rng.uniform_int(0, 4))];
            const CallDirection dir = rng.uniform() < 0.5 ? CallDirection::incoming : CallDirection::outgoing;
            streams.calls.push_back(CallEvent{at(day, tod), dir, dur_s, contact});

            dur_min += dur_s / 60.0;
            const std::int64_t tod_in_day = tod % kMsPerDay;
            if (tod_in_day < 8 * kMsPerHour || tod_in_day >= 18 * kMsPerHour) {
                nonwork_freq += 1.0;
                nonwork_dur_min += dur_s / 60.0;
            }
            contact_dur[contact] += dur_s;
            total_dur_s += dur_s;
        }
        for (int k = 0; k < n_missed; ++k) {
            const std::int64_t tod = (9 * 60 + rng.uniform_int(0, 10 * 60 - 1)) * kMsPerMinute + 500;
            const auto& contact = contacts_[static_cast<std::size_t>(rng.uniform_int(0, 4))];
            streams.calls.push_back(CallEvent{at(day, tod), CallDirection::missed, 0.0, contact});
        }

        double entropy = 0.0;
        if (total_dur_s > 0.0) {
            for (const auto& [contact, dur] : contact_dur) {
                if (dur <= 0.0) continue;
                const double p = dur / total_dur_s;
                entropy -= p * std::log(p);
            }
        }
        truth.values[Feature::kCallFreq] = static_cast<double>(n_calls);
        truth.values[Feature::kCallDurMin] = dur_min;
        truth.values[Feature::kNonworkCallFreq] = nonwork_freq;
        truth.values[Feature::kNonworkCallDurMin] = nonwork_dur_min;
        truth.values[Feature::kMissedCalls] = static_cast<double>(n_missed);
        truth.values[Feature::kNumContacts] = static_cast<double>(contact_dur.size());
        truth.values[Feature::kCallEntropy] = entropy;
        truth.values[Feature::kNormCallEntropy] =
            contact_dur.size() > 1 ? entropy / std::log(static_cast<double>(contact_dur.size())) : 0.0;
    }

    void build_usage(int day, double level, Rng& rng, SubjectStreams& streams, features::DailyFeatures& truth) {
        using features::Feature;
        const int n_sessions =
            clampi(9.0 - 4.0 * config_.usage_effect * level + 1.5 * config_.noise * rng.normal(), 1, 18);
        double total_s = 0.0;
        for (int k = 0; k < n_sessions; ++k) {
            const std::int64_t start =
                (6 * 60 + rng.uniform_int(0, 990)) * kMsPerMinute + static_cast<std::int64_t>(k) * 1000;
            std::int64_t dur_ms = rng.uniform_int(40, 900) * 1000;
            dur_ms = std::min(dur_ms, kMsPerDay - kMsPerMinute - start);
            streams.usage.push_back(UsageSession{at(day, start), at(day, start + dur_ms)});
            total_s += static_cast<double>(dur_ms) / 1000.0;
        }
        truth.values[Feature::kUsageFreq] = static_cast<double>(n_sessions);
        truth.values[Feature::kUsageDurS] = total_s;
    }

    void build_locks(int day, double level, Rng& rng, SubjectStreams& streams, features::DailyFeatures& truth) {
        using features::Feature;
        const int night_min =
            clampi(300.0 + 120.0 * config_.activity_effect * level + 20.0 * config_.noise * rng.normal(), 60, 520);
        const int evening_min = clampi(60.0 + 30.0 * config_.noise * rng.normal(), 10, 110);

        const std::int64_t n_start = 10 * kMsPerMinute;
        const std::int64_t e_start = 22 * kMsPerHour;
        streams.locks.push_back(LockEvent{at(day, n_start), at(day, n_start + night_min * kMsPerMinute)});
        streams.locks.push_back(LockEvent{at(day, e_start), at(day, e_start + evening_min * kMsPerMinute)});
        truth.values[Feature::kLockDurS] = static_cast<double>((night_min + evening_min) * 60);
    }

    void build_gps(int day, double level, Rng& rng, SubjectStreams& streams, features::DailyFeatures& truth) {
        using features::Feature;
        const int dow = (day - 1) % 7; // 5, 6 = weekend
        const bool weekend = dow >= 5;

        const double p_work = weekend ? 0.05 : clampd(0.95 - 0.5 * config_.gps_effect * level, 0.10, 0.97);
        const bool work_today = rng.uniform() < p_work;
        const bool park_today =
            !work_today && weekend && rng.uniform() < clampd(0.7 - 0.6 * config_.gps_effect * level, 0.05, 0.9);

        std::vector<Visit> visits;
        if (work_today) {
            visits.push_back({0, 0, hm(7, 55)});
            visits.push_back({1, hm(8, 30), hm(17, 25)});
            visits.push_back({0, hm(18, 0), hm(23, 55)});
        } else if (park_today) {
            visits.push_back({0, 0, hm(13, 55)});
            visits.push_back({2, hm(14, 30), hm(16, 25)});
            visits.push_back({0, hm(17, 0), hm(23, 55)});
        } else {
            visits.push_back({0, 0, hm(23, 55)});
        }

        std::vector<GpsFix> fixes;
        for (std::size_t v = 0; v < visits.size(); ++v) {
            if (v > 0) add_transit(day, visits[v - 1], visits[v], rng, fixes);
            const Site& site = sites_[static_cast<std::size_t>(visits[v].site)];
            for (std::int64_t tod = visits[v].first_tod_ms; tod <= visits[v].last_tod_ms; tod += kFixPeriodMs) {
                GpsFix f;
                f.t = at(day, tod);
                f.lat = site.lat + rng.uniform(-1.5e-5, 1.5e-5);
                f.lon = site.lon + rng.uniform(-1.5e-5, 1.5e-5);
                f.accuracy_m = kFixAccuracyM;
                f.speed_mps = rng.uniform(0.0, 1.0);
                fixes.push_back(f);
            }
        }
        std::sort(fixes.begin(), fixes.end(),
                  [](const GpsFix& a, const GpsFix& b) { return a.t.instant_ms < b.t.instant_ms; });

        // Expected values from the emitted fixes, generator-local math.
        const std::vector<GpsFix>& all_valid = fixes; // everything so far has speed >= 0
        double lat_mean = 0.0;
        double lon_mean = 0.0;
        for (const auto& f : all_valid) {
            lat_mean += f.lat;
            lon_mean += f.lon;
        }
        lat_mean /= static_cast<double>(all_valid.size());
        lon_mean /= static_cast<double>(all_valid.size());
        double var = 0.0;
        for (const auto& f : all_valid) {
            var += (f.lat - lat_mean) * (f.lat - lat_mean) + (f.lon - lon_mean) * (f.lon - lon_mean);
        }
        var /= static_cast<double>(all_valid.size());
        truth.values[Feature::kLocVariance] = std::log(var);

        double distance = 0.0;
        for (std::size_t i = 1; i < all_valid.size(); ++i) {
            distance +=
                gc_distance_m(all_valid[i - 1].lat, all_valid[i - 1].lon, all_valid[i].lat, all_valid[i].lon);
        }
        truth.values[Feature::kTotalDistanceM] = distance;

        double dwell[3] = {0.0, 0.0, 0.0};
        for (const auto& v : visits) {
            dwell[static_cast<std::size_t>(v.site)] += static_cast<double>(v.last_tod_ms - v.first_tod_ms) / 1000.0;
        }
        const double total_dwell = dwell[0] + dwell[1] + dwell[2];
        int visited = 0;
        double entropy = 0.0;
        for (double d : dwell) {
            if (d <= 0.0) continue;
            ++visited;
            const double p = d / total_dwell;
            entropy -= p * std::log(p);
        }
        truth.values[Feature::kLocEntropy] = entropy;
        truth.values[Feature::kNormLocEntropy] =
            visited > 1 ? entropy / std::log(static_cast<double>(visited)) : 0.0;
        truth.values[Feature::kTimeAtHome] = dwell[0] / total_dwell;

        // Occasional invalid reading; excluded from every feature upstream.
        if (rng.uniform() < 0.08) {
            GpsFix junk;
            junk.t = at(day, hm(12, 2));
            junk.lat = sites_[0].lat + 0.001;
            junk.lon = sites_[0].lon;
            junk.accuracy_m = kFixAccuracyM;
            junk.speed_mps = -1.0;
            fixes.push_back(junk);
            std::sort(fixes.begin(), fixes.end(),
                      [](const GpsFix& a, const GpsFix& b) { return a.t.instant_ms < b.t.instant_ms; });
        }

        streams.gps.insert(streams.gps.end(), fixes.begin(), fixes.end());
    }

    void add_transit(int day, const Visit& from, const Visit& to, Rng& rng, std::vector<GpsFix>& fixes) {
        const Site& a = sites_[static_cast<std::size_t>(from.site)];
        const Site& b = sites_[static_cast<std::size_t>(to.site)];
        const std::int64_t start = from.last_tod_ms + kFixPeriodMs;
        const std::int64_t end = to.first_tod_ms - kFixPeriodMs;
        const auto n = static_cast<int>((end - start) / kFixPeriodMs) + 1;
        for (int k = 0; k < n; ++k) {
            const double frac = static_cast<double>(k + 1) / static_cast<double>(n + 1);
            GpsFix f;
            f.t = at(day, start + static_cast<std::int64_t>(k) * kFixPeriodMs);
            f.lat = a.lat + frac * (b.lat - a.lat) + rng.uniform(-1e-5, 1e-5);
            f.lon = a.lon + frac * (b.lon - a.lon) + rng.uniform(-1e-5, 1e-5);
            f.accuracy_m = kFixAccuracyM;
            f.speed_mps = kTransitSpeedMps;
            fixes.push_back(f);
        }
    }

    void fill_sleep(const std::vector<AppEvent>& day_apps, const std::vector<AppEvent>& prev_day_apps,
                    features::DailyFeatures& truth) {
        using features::Feature;
        // The same rule as the extraction side, evaluated on the generator's
        // own event lists: anchor is the last use before 2 am today, else the
        // last use yesterday; wake the first use at or after 5 am today.
        std::optional<std::int64_t> anchor;
        for (const auto& e : day_apps) {
            if (local_time_of_day_ms(e.t) < 2 * kMsPerHour) {
                if (!anchor || e.t.local_ms() > *anchor) anchor = e.t.local_ms();
            }
        }
        if (!anchor) {
            for (const auto& e : prev_day_apps) {
                if (!anchor || e.t.local_ms() > *anchor) anchor = e.t.local_ms();
            }
        }
        std::optional<std::int64_t> wake;
        for (const auto& e : day_apps) {
            if (local_time_of_day_ms(e.t) >= 5 * kMsPerHour) {
                if (!wake || e.t.local_ms() < *wake) wake = e.t.local_ms();
            }
        }
        if (anchor && wake && *wake >= *anchor) {
            truth.values[Feature::kSleepTimeH] =
                static_cast<double>(*wake - *anchor) / static_cast<double>(kMsPerHour);
        } else {
            truth.values[Feature::kSleepTimeH] = std::numeric_limits<double>::quiet_NaN();
            truth.missing[Feature::kSleepTimeH] = true;
        }
    }

    static std::int64_t hm(int hour, int minute) {
        return static_cast<std::int64_t>(hour) * kMsPerHour + static_cast<std::int64_t>(minute) * kMsPerMinute;
    }

    const SynthConfig& config_;
    int index_;
    SubjectId id_;
    std::int32_t offset_min_ = 0;
    Timestamp study_start_;
    Site sites_[3];
    std::vector<std::string> contacts_;
    std::vector<std::string> apps_;
};

} // namespace

GroundTruth generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
    if (config.n_subjects < 10) throw DataError("synthetic cohort needs at least 10 subjects");
    if (config.n_weeks < 1) throw DataError("synthetic cohort needs at least 1 week");

    std::filesystem::create_directories(out_dir);

    GroundTruth truth;
    ingest::CohortManifest manifest;
    std::vector<PhqObservation> all_phq;

    for (int si = 0; si < config.n_subjects; ++si) {
        SubjectBuilder builder(config, si);
        SubjectStreams streams;
        std::vector<features::DailyFeatures> days;
        std::vector<WeekTruth> weeks;
        builder.build(streams, days, weeks);

        const auto dir = out_dir / builder.id().value;
        std::filesystem::create_directories(dir);
        ingest::write_calls(dir / "calls.csv", streams.calls);
        ingest::write_usage(dir / "usage.csv", streams.usage);
        ingest::write_apps(dir / "apps.csv", streams.apps);
        ingest::write_locks(dir / "locks.csv", streams.locks);
        ingest::write_gps(dir / "gps.csv", streams.gps);
        ingest::write_phq(dir / "phq.csv", streams.phq);

        ingest::ManifestEntry entry;
        entry.subject = builder.id();
        entry.study_start = builder.study_start();
        entry.calls = dir / "calls.csv";
        entry.usage = dir / "usage.csv";
        entry.apps = dir / "apps.csv";
        entry.locks = dir / "locks.csv";
        entry.gps = dir / "gps.csv";
        entry.phq = dir / "phq.csv";
        manifest.subjects.push_back(std::move(entry));

        all_phq.insert(all_phq.end(), streams.phq.begin(), streams.phq.end());
        truth.expected_daily[builder.id()] = std::move(days);
        truth.weekly[builder.id()] = std::move(weeks);
    }

    ingest::write_manifest(out_dir / "manifest.csv", manifest);
    features::write_features_csv(out_dir / "truth_features.csv", truth.expected_daily);
    write_truth_phq(out_dir / "truth_phq.csv", truth.weekly);
    return truth;
}

void write_truth_phq(const std::filesystem::path& path,
                     const std::map<SubjectId, std::vector<WeekTruth>>& weekly) {
    csv::TableWriter w(path, {"subject", "week", "latent", "score"});
    for (const auto& [subject, weeks] : weekly) {
        for (const auto& wk : weeks) {
            w.row({subject.value, std::to_string(wk.week), csv::format_double(wk.latent),
                   std::to_string(wk.observed)});
        }
    }
}

namespace {

bool nearly_equal(double expected, double actual) {
    if (std::isnan(expected) && std::isnan(actual)) return true;
    const double diff = std::abs(expected - actual);
    return diff <= 1e-9 * std::max({1.0, std::abs(expected), std::abs(actual)});
}

} // namespace

VerifyReport diff_features(const std::map<SubjectId, std::vector<features::DailyFeatures>>& truth,
                           const std::map<SubjectId, std::vector<features::DailyFeatures>>& actual) {
    VerifyReport report;
    for (const auto& [subject, days] : truth) {
        const auto it = actual.find(subject);
        std::map<int, const features::DailyFeatures*> actual_by_day;
        if (it != actual.end()) {
            for (const auto& d : it->second) actual_by_day[d.day_index] = &d;
        }
        for (const auto& expected : days) {
            const auto row = actual_by_day.find(expected.day_index);
            if (row == actual_by_day.end()) {
                ++report.rows_missing;
                continue;
            }
            ++report.rows_checked;
            const auto& got = *row->second;
            for (int i = 0; i < features::kFeatureCount; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                if (expected.missing[idx] != got.missing[idx]) {
                    report.diffs.push_back({subject, expected.day_index,
                                            std::string(features::kFeatureNames[idx]) + "_missing",
                                            expected.missing[idx] ? 1.0 : 0.0, got.missing[idx] ? 1.0 : 0.0});
                    continue;
                }
                if (expected.missing[idx]) continue;
                const bool ok = features::is_count_feature(i)
                                    ? expected.values[idx] == got.values[idx]
                                    : nearly_equal(expected.values[idx], got.values[idx]);
                if (!ok) {
                    report.diffs.push_back(
                        {subject, expected.day_index, features::kFeatureNames[idx], expected.values[idx],
                         got.values[idx]});
                }
            }
        }
    }
    return report;
}

VerifyReport verify_pipeline(const std::filesystem::path& manifest_path,
                             const std::filesystem::path& truth_features_path,
                             geo::ClusterAlgorithm algorithm, const geo::ClusterParams& params) {
    const auto manifest = ingest::read_manifest(manifest_path);
    const auto cohort = ingest::load_cohort(manifest);
    const auto actual = pipeline::extract_features(cohort, algorithm, params);
    const auto truth = features::read_features_csv(truth_features_path);
    return diff_features(truth, actual);
}

std::string VerifyReport::summary() const {
    std::ostringstream os;
    os << "checked " << rows_checked << " subject-days, " << diffs.size() << " discrepancies";
    if (rows_missing > 0) os << ", " << rows_missing << " rows missing";
    if (!diffs.empty()) {
        os << "; first: " << diffs.front().subject.value << " day " << diffs.front().day_index << ' '
           << diffs.front().field << " expected " << diffs.front().expected << " got " << diffs.front().actual;
    }
    return os.str();
}

} // namespace moodcast::synth
