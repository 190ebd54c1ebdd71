#pragma once

#include "moodcast/csv.hpp"
#include "moodcast/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace moodcast::ingest {

enum class StreamKind { calls, usage, apps, locks, gps, phq };

const char* to_string(StreamKind k);

// Raw event streams of one subject.
struct SensorLog {
    SubjectId subject;
    Timestamp study_start;
    std::vector<CallEvent> calls;
    std::vector<UsageSession> usage;
    std::vector<AppEvent> apps;
    std::vector<LockEvent> locks;
    std::vector<GpsFix> gps;
};

struct ManifestEntry {
    SubjectId subject;
    Timestamp study_start;
    std::filesystem::path calls, usage, apps, locks, gps, phq;
};

struct CohortManifest {
    std::vector<ManifestEntry> subjects;
};

// Typed stream parsers. Output is sorted by timestamp (full-field tie-break,
// so the result does not depend on row order); malformed rows land in
// `rejects` with a reason. Missing file or bad header throw DataError.
std::vector<CallEvent> parse_calls(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects);
std::vector<UsageSession> parse_usage(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects);
std::vector<AppEvent> parse_apps(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects);
std::vector<LockEvent> parse_locks(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects);
std::vector<GpsFix> parse_gps(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects);

// When expected_subject is set, rows for any other subject are quarantined.
// Duplicate (subject, day) rows are quarantined after the first.
std::vector<PhqObservation> parse_phq(const std::filesystem::path& path, std::vector<csv::RejectedRow>& rejects,
                                      const std::optional<SubjectId>& expected_subject = std::nullopt);

// Stream emitters, inverse of the parsers (identical field names and order).
void write_calls(const std::filesystem::path& path, std::span<const CallEvent> events);
void write_usage(const std::filesystem::path& path, std::span<const UsageSession> events);
void write_apps(const std::filesystem::path& path, std::span<const AppEvent> events);
void write_locks(const std::filesystem::path& path, std::span<const LockEvent> events);
void write_gps(const std::filesystem::path& path, std::span<const GpsFix> events);
void write_phq(const std::filesystem::path& path, std::span<const PhqObservation> observations);

// Manifest: one record per subject with the study start and six stream paths,
// relative to the manifest's directory.
CohortManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const CohortManifest& manifest);

struct StreamSummary {
    std::size_t events = 0;
    std::size_t days_covered = 0; // distinct local study days with >= 1 event
};

struct SubjectSummary {
    SubjectId subject;
    std::map<std::string, StreamSummary> streams; // keyed by stream name
    bool flagged = false;                         // some stream has zero days
};

struct Cohort {
    std::vector<SensorLog> logs; // sorted by subject id
    std::vector<PhqObservation> phq;
    std::vector<SubjectSummary> summaries;
    std::vector<csv::RejectedRow> rejects;
};

// Loads every subject of the manifest. Duplicate subject ids in the manifest
// are a DataError; a subject with an empty stream is loaded but flagged.
Cohort load_cohort(const CohortManifest& manifest);

std::string format_summary(const Cohort& cohort);

} // namespace moodcast::ingest
