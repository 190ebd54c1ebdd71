#pragma once

#include "moodcast/features.hpp"
#include "moodcast/geo.hpp"
#include "moodcast/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace moodcast::synth {

// Synthetic cohort with a planted link between a weekly latent score and the
// generated behaviour. Effects are strongest in the user-activity features;
// call features carry only a weak signal.
struct SynthConfig {
    int n_subjects = 48;
    int n_weeks = 8;
    std::uint64_t seed = 7;
    double activity_effect = 1.0; // sleep shift, app counts, lock time
    double call_effect = 0.25;
    double usage_effect = 0.6;
    double gps_effect = 0.8;      // stay-home days, travel reduction
    double noise = 1.0;
    // Bounded random-walk step of the latent score. Small enough that the
    // one-week-ahead task stays comparable to the same-week task.
    double weekly_step = 0.6;
};

struct WeekTruth {
    int week = 1;
    double latent = 0.0;
    int observed = 0; // clipped rounded latent, the emitted questionnaire score
};

struct GroundTruth {
    std::map<SubjectId, std::vector<features::DailyFeatures>> expected_daily;
    std::map<SubjectId, std::vector<WeekTruth>> weekly;
};

// Writes a full raw cohort (per-subject stream files + manifest) plus
// truth_features.csv and truth_phq.csv under out_dir, and returns the ground
// truth. Deterministic: the same config writes byte-identical files.
//
// The expected features are computed here with generator-local code; the
// extraction modules are never called, so a later comparison is a genuine
// two-implementation check.
GroundTruth generate(const SynthConfig& config, const std::filesystem::path& out_dir);

struct Discrepancy {
    SubjectId subject;
    int day_index = 0;
    std::string field; // feature name or "<name>_missing"
    double expected = 0.0;
    double actual = 0.0;
};

struct VerifyReport {
    std::vector<Discrepancy> diffs;
    std::size_t rows_checked = 0;
    std::size_t rows_missing = 0; // truth rows with no extracted counterpart

    bool clean() const { return diffs.empty() && rows_missing == 0; }
    std::string summary() const;
};

// Count features must match exactly; derived reals within 1e-9 relative.
VerifyReport diff_features(const std::map<SubjectId, std::vector<features::DailyFeatures>>& truth,
                           const std::map<SubjectId, std::vector<features::DailyFeatures>>& actual);

// Ingests the raw cohort behind the manifest, extracts daily features with
// the given clustering algorithm, and diffs them against the stored truth.
VerifyReport verify_pipeline(const std::filesystem::path& manifest_path,
                             const std::filesystem::path& truth_features_path,
                             geo::ClusterAlgorithm algorithm,
                             const geo::ClusterParams& params = {});

void write_truth_phq(const std::filesystem::path& path,
                     const std::map<SubjectId, std::vector<WeekTruth>>& weekly);

} // namespace moodcast::synth
