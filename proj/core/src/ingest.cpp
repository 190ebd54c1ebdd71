#include "moodcast/ingest.hpp"

#include "moodcast/errors.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace moodcast::ingest {

const char* to_string(StreamKind k) {
    switch (k) {
    case StreamKind::calls: return "calls";
    case StreamKind::usage: return "usage";
    case StreamKind::apps: return "apps";
    case StreamKind::locks: return "locks";
    case StreamKind::gps: return "gps";
    case StreamKind::phq: return "phq";
    }
    return "?";
}

namespace {

std::optional<Timestamp> parse_timestamp(const std::string& ms, const std::string& offset) {
    const auto instant = csv::parse_i64(ms);
    const auto off = csv::parse_i64(offset);
    if (!instant || !off) return std::nullopt;
    if (*off < -kMaxUtcOffsetMin || *off > kMaxUtcOffsetMin) return std::nullopt;
    return Timestamp{*instant, static_cast<std::int32_t>(*off)};
}

std::string join_raw(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out;
}

// Parses one stream file: per-row conversion, invariant check, quarantine,
// canonical full-field sort. row_fn returns nullopt for unparseable rows.
template <typename T, typename RowFn, typename KeyFn>
std::vector<T> parse_stream(const std::filesystem::path& path, const std::vector<std::string>& columns,
                            std::vector<csv::RejectedRow>& rejects, RowFn&& row_fn, KeyFn&& key_fn) {
    csv::TableReader reader(path, columns);
    std::vector<T> out;
    std::vector<std::string> fields;
    while (reader.next(fields, rejects)) {
        std::optional<T> value = row_fn(fields);
        if (!value) {
            rejects.push_back({reader.file_name(), reader.line_number(), "unparseable field", join_raw(fields)});
            continue;
        }
        if (auto why = violation(*value)) {
            rejects.push_back({reader.file_name(), reader.line_number(), *why, join_raw(fields)});
            continue;
        }
        out.push_back(std::move(*value));
    }
    std::sort(out.begin(), out.end(),
              [&](const T& a, const T& b) { return key_fn(a) < key_fn(b); });
    return out;
}

} // namespace

std::vector<CallEvent> parse_calls(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects) {
    const std::vector<std::string> columns = {"t_ms", "offset_min", "direction", "duration_s", "contact_hash"};
    return parse_stream<CallEvent>(
        path, columns, rejects,
        [](const std::vector<std::string>& f) -> std::optional<CallEvent> {
            const auto t = parse_timestamp(f[0], f[1]);
            const auto dir = parse_call_direction(f[2]);
            const auto dur = csv::parse_f64(f[3]);
            if (!t || !dir || !dur) return std::nullopt;
            return CallEvent{*t, *dir, *dur, f[4]};
        },
        [](const CallEvent& e) {
            return std::make_tuple(e.t.instant_ms, e.t.offset_min, static_cast<int>(e.direction), e.duration_s,
                                   e.contact);
        });
}

std::vector<UsageSession> parse_usage(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects) {
    const std::vector<std::string> columns = {"start_ms", "end_ms", "offset_min"};
    return parse_stream<UsageSession>(
        path, columns, rejects,
        [](const std::vector<std::string>& f) -> std::optional<UsageSession> {
            const auto start = parse_timestamp(f[0], f[2]);
            const auto end = parse_timestamp(f[1], f[2]);
            if (!start || !end) return std::nullopt;
            return UsageSession{*start, *end};
        },
        [](const UsageSession& s) {
            return std::make_tuple(s.start.instant_ms, s.end.instant_ms, s.start.offset_min);
        });
}

std::vector<AppEvent> parse_apps(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects) {
    const std::vector<std::string> columns = {"t_ms", "offset_min", "app_hash"};
    return parse_stream<AppEvent>(
        path, columns, rejects,
        [](const std::vector<std::string>& f) -> std::optional<AppEvent> {
            const auto t = parse_timestamp(f[0], f[1]);
            if (!t) return std::nullopt;
            return AppEvent{*t, f[2]};
        },
        [](const AppEvent& e) { return std::make_tuple(e.t.instant_ms, e.t.offset_min, e.app); });
}

std::vector<LockEvent> parse_locks(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects) {
    const std::vector<std::string> columns = {"start_ms", "end_ms", "offset_min"};
    return parse_stream<LockEvent>(
        path, columns, rejects,
        [](const std::vector<std::string>& f) -> std::optional<LockEvent> {
            const auto start = parse_timestamp(f[0], f[2]);
            const auto end = parse_timestamp(f[1], f[2]);
            if (!start || !end) return std::nullopt;
            return LockEvent{*start, *end};
        },
        [](const LockEvent& e) {
            return std::make_tuple(e.start.instant_ms, e.end.instant_ms, e.start.offset_min);
        });
}

std::vector<GpsFix> parse_gps(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects) {
    const std::vector<std::string> columns = {"t_ms", "offset_min", "lat", "lon", "accuracy_m", "speed_mps"};
    return parse_stream<GpsFix>(
        path, columns, rejects,
        [](const std::vector<std::string>& f) -> std::optional<GpsFix> {
            const auto t = parse_timestamp(f[0], f[1]);
            const auto lat = csv::parse_f64(f[2]);
            const auto lon = csv::parse_f64(f[3]);
            const auto acc = csv::parse_f64(f[4]);
            const auto speed = csv::parse_f64(f[5]);
            if (!t || !lat || !lon || !acc || !speed) return std::nullopt;
            return GpsFix{*t, *lat, *lon, *acc, *speed};
        },
        [](const GpsFix& g) {
            return std::make_tuple(g.t.instant_ms, g.t.offset_min, g.lat, g.lon, g.accuracy_m, g.speed_mps);
        });
}

std::vector<PhqObservation> parse_phq(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects,
                                      const std::optional<SubjectId>& expected_subject) {
    const std::vector<std::string> columns = {"subject", "day_index", "score"};
    csv::TableReader reader(path, columns);
    std::vector<PhqObservation> out;
    std::set<std::pair<std::string, int>> seen;
    std::vector<std::string> fields;
    while (reader.next(fields, rejects)) {
        const auto day = csv::parse_i64(fields[1]);
        const auto score = csv::parse_i64(fields[2]);
        if (!day || !score) {
            rejects.push_back({reader.file_name(), reader.line_number(), "unparseable field", join_raw(fields)});
            continue;
        }
        PhqObservation obs{SubjectId{fields[0]}, static_cast<int>(*day), static_cast<int>(*score)};
        if (auto why = violation(obs)) {
            rejects.push_back({reader.file_name(), reader.line_number(), *why, join_raw(fields)});
            continue;
        }
        if (expected_subject && obs.subject != *expected_subject) {
            rejects.push_back({reader.file_name(), reader.line_number(), "subject mismatch", join_raw(fields)});
            continue;
        }
        if (!seen.insert({obs.subject.value, obs.day_index}).second) {
            rejects.push_back({reader.file_name(), reader.line_number(), "duplicate observation", join_raw(fields)});
            continue;
        }
        out.push_back(std::move(obs));
    }
    std::sort(out.begin(), out.end(), [](const PhqObservation& a, const PhqObservation& b) {
        return std::tie(a.subject.value, a.day_index) < std::tie(b.subject.value, b.day_index);
    });
    return out;
}

void write_calls(const std::filesystem::path& path, std::span<const CallEvent> events) {
    csv::TableWriter w(path, {"t_ms", "offset_min", "direction", "duration_s", "contact_hash"});
    for (const auto& e : events) {
        w.row({std::to_string(e.t.instant_ms), std::to_string(e.t.offset_min), to_string(e.direction),
               csv::format_double(e.duration_s), e.contact});
    }
}

void write_usage(const std::filesystem::path& path, std::span<const UsageSession> events) {
    csv::TableWriter w(path, {"start_ms", "end_ms", "offset_min"});
    for (const auto& e : events) {
        w.row({std::to_string(e.start.instant_ms), std::to_string(e.end.instant_ms),
               std::to_string(e.start.offset_min)});
    }
}

void write_apps(const std::filesystem::path& path, std::span<const AppEvent> events) {
    csv::TableWriter w(path, {"t_ms", "offset_min", "app_hash"});
    for (const auto& e : events) {
        w.row({std::to_string(e.t.instant_ms), std::to_string(e.t.offset_min), e.app});
    }
}

void write_locks(const std::filesystem::path& path, std::span<const LockEvent> events) {
    csv::TableWriter w(path, {"start_ms", "end_ms", "offset_min"});
    for (const auto& e : events) {
        w.row({std::to_string(e.start.instant_ms), std::to_string(e.end.instant_ms),
               std::to_string(e.start.offset_min)});
    }
}

void write_gps(const std::filesystem::path& path, std::span<const GpsFix> events) {
    csv::TableWriter w(path, {"t_ms", "offset_min", "lat", "lon", "accuracy_m", "speed_mps"});
    for (const auto& e : events) {
        w.row({std::to_string(e.t.instant_ms), std::to_string(e.t.offset_min), csv::format_double(e.lat),
               csv::format_double(e.lon), csv::format_double(e.accuracy_m), csv::format_double(e.speed_mps)});
    }
}

void write_phq(const std::filesystem::path& path, std::span<const PhqObservation> observations) {
    csv::TableWriter w(path, {"subject", "day_index", "score"});
    for (const auto& o : observations) {
        w.row({o.subject.value, std::to_string(o.day_index), std::to_string(o.score)});
    }
}

CohortManifest read_manifest(const std::filesystem::path& path) {
    const std::vector<std::string> columns = {"subject",     "study_start_ms", "offset_min", "calls", "usage",
                                              "apps",        "locks",          "gps",        "phq"};
    csv::TableReader reader(path, columns);
    const auto base = path.parent_path();
    CohortManifest manifest;
    std::vector<std::string> fields;
    std::vector<csv::RejectedRow> rejects;
    while (reader.next(fields, rejects)) {
        const auto start = parse_timestamp(fields[1], fields[2]);
        if (fields[0].empty() || !start) {
            throw DataError("bad manifest record at " + path.string() + " line " +
                            std::to_string(reader.line_number()));
        }
        ManifestEntry e;
        e.subject = SubjectId{fields[0]};
        e.study_start = *start;
        e.calls = base / fields[3];
        e.usage = base / fields[4];
        e.apps = base / fields[5];
        e.locks = base / fields[6];
        e.gps = base / fields[7];
        e.phq = base / fields[8];
        manifest.subjects.push_back(std::move(e));
    }
    if (!rejects.empty()) {
        throw DataError("malformed manifest row at line " + std::to_string(rejects.front().line));
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const CohortManifest& manifest) {
    csv::TableWriter w(path, {"subject", "study_start_ms", "offset_min", "calls", "usage", "apps", "locks",
                              "gps", "phq"});
    const auto base = path.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
        return p.lexically_proximate(base).generic_string();
    };
    for (const auto& e : manifest.subjects) {
        w.row({e.subject.value, std::to_string(e.study_start.instant_ms), std::to_string(e.study_start.offset_min),
               rel(e.calls), rel(e.usage), rel(e.apps), rel(e.locks), rel(e.gps), rel(e.phq)});
    }
}

namespace {

template <typename T, typename TimeFn>
StreamSummary summarize(const std::vector<T>& events, const Timestamp& study_start, TimeFn&& time_of) {
    StreamSummary s;
    s.events = events.size();
    std::set<int> days;
    for (const auto& e : events) {
        const Timestamp t = time_of(e);
        if (local_day_number(t) >= local_day_number(study_start)) {
            days.insert(local_day_index(t, study_start));
        }
    }
    s.days_covered = days.size();
    return s;
}

} // namespace

Cohort load_cohort(const CohortManifest& manifest) {
    std::set<std::string> ids;
    for (const auto& e : manifest.subjects) {
        if (e.subject.value.empty()) throw DataError("empty subject id in manifest");
        if (!ids.insert(e.subject.value).second) {
            throw DataError("duplicate subject id in manifest: " + e.subject.value);
        }
    }

    Cohort cohort;
    for (const auto& e : manifest.subjects) {
        SensorLog log;
        log.subject = e.subject;
        log.study_start = e.study_start;
        log.calls = parse_calls(e.calls, cohort.rejects);
        log.usage = parse_usage(e.usage, cohort.rejects);
        log.apps = parse_apps(e.apps, cohort.rejects);
        log.locks = parse_locks(e.locks, cohort.rejects);
        log.gps = parse_gps(e.gps, cohort.rejects);
        auto phq = parse_phq(e.phq, cohort.rejects, e.subject);

        SubjectSummary summary;
        summary.subject = e.subject;
        summary.streams["calls"] = summarize(log.calls, e.study_start, [](const CallEvent& v) { return v.t; });
        summary.streams["usage"] =
            summarize(log.usage, e.study_start, [](const UsageSession& v) { return v.start; });
        summary.streams["apps"] = summarize(log.apps, e.study_start, [](const AppEvent& v) { return v.t; });
        summary.streams["locks"] =
            summarize(log.locks, e.study_start, [](const LockEvent& v) { return v.start; });
        summary.streams["gps"] = summarize(log.gps, e.study_start, [](const GpsFix& v) { return v.t; });
        StreamSummary phq_summary;
        phq_summary.events = phq.size();
        std::set<int> phq_days;
        for (const auto& o : phq) phq_days.insert(o.day_index);
        phq_summary.days_covered = phq_days.size();
        summary.streams["phq"] = phq_summary;
        for (const auto& [name, s] : summary.streams) {
            if (s.days_covered == 0) summary.flagged = true;
        }

        cohort.logs.push_back(std::move(log));
        cohort.phq.insert(cohort.phq.end(), phq.begin(), phq.end());
        cohort.summaries.push_back(std::move(summary));
    }

    std::sort(cohort.logs.begin(), cohort.logs.end(),
              [](const SensorLog& a, const SensorLog& b) { return a.subject < b.subject; });
    std::sort(cohort.summaries.begin(), cohort.summaries.end(),
              [](const SubjectSummary& a, const SubjectSummary& b) { return a.subject < b.subject; });

    return cohort;
}

std::string format_summary(const Cohort& cohort) {
    std::ostringstream os;
    for (const auto& s : cohort.summaries) {
        os << s.subject.value << ':';
        for (const auto& [name, stream] : s.streams) {
            os << ' ' << name << '=' << stream.events << " (" << stream.days_covered << " days)";
        }
        if (s.flagged) os << "  [flagged: empty stream]";
        os << '\n';
    }
    os << "rejected rows: " << cohort.rejects.size() << '\n';
    return os.str();
}

} // namespace moodcast::ingest
