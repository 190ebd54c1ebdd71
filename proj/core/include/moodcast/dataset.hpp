#pragma once

#include "moodcast/features.hpp"
#include "moodcast/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace moodcast::dataset {

inline constexpr int kDaysPerWeek = 7;

enum class Task { diagnosis, forecast };

const char* to_string(Task t);
std::optional<Task> parse_task(const std::string& s);

// One model sample: the daily feature rows of one subject-week plus the
// weekly score target. Diagnosis targets the score observed at the end of the
// same week, forecasting the score at the end of the following week.
struct Sample {
    SubjectId subject;
    int week_index = 1;
    Task task = Task::diagnosis;
    std::vector<features::DailyFeatures> seq; // 7 rows for full samples
    double target = 0.0;
    bool augmented = false; // training-only prefix copy
};

struct FoldPlan {
    int k = 10;
    std::uint64_t seed = 0;
    std::vector<std::vector<SubjectId>> folds; // disjoint, cover the cohort
};

// Per-feature normalisation statistics from training-fold rows only,
// computed over unmasked entries.
struct NormStats {
    std::array<double, features::kFeatureCount> mean{};
    std::array<double, features::kFeatureCount> stddev{};
    std::array<bool, features::kFeatureCount> constant{}; // no spread or no observations
};

// Maps each observation to the week whose end day it is closest to; an
// observation within one day of a week end snaps to it. Exact end-day
// observations win over snapped ones.
std::map<int, double> weekly_targets(std::span<const PhqObservation> subject_observations);

// One sample per subject-week with the required target; weeks missing the
// target are skipped. Days without a feature row become fully-masked
// placeholder rows so every full sample has exactly 7 steps.
std::vector<Sample> build_samples(const std::map<SubjectId, std::vector<features::DailyFeatures>>& daily,
                                  std::span<const PhqObservation> phq, Task task);

NormStats compute_stats(std::span<const Sample> training_samples);

// Masked entries take the training-fold mean; the mask is kept for audit.
Sample impute(Sample s, const NormStats& stats);

// Z-score per feature; constant features map to 0.
Sample normalize(Sample s, const NormStats& stats);

// impute + normalize over a whole set.
std::vector<Sample> prepare(std::span<const Sample> samples, const NormStats& stats);

// Training-only augmentation: day-1..d prefixes (d = 1..7) of every full
// sample, all carrying the week's target. The d = 7 copy is the sample
// itself, unflagged.
std::vector<Sample> augment_prefixes(std::span<const Sample> full_samples);

// Zeroes feature dimensions outside the group; applied after normalisation.
void restrict_to_group(Sample& s, features::FeatureGroup group);

// Deterministic subject-level fold assignment; fold sizes differ by at most
// one. Throws DataError when there are fewer subjects than folds.
FoldPlan subject_kfold(std::vector<SubjectId> subjects, int k, std::uint64_t seed);

void write_folds_json(const std::filesystem::path& path, const FoldPlan& plan);

// samples.csv: one row per sample-day.
void write_samples_csv(const std::filesystem::path& path, std::span<const Sample> samples);

} // namespace moodcast::dataset
