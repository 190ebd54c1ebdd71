#pragma once

#include "moodcast/dataset.hpp"
#include "moodcast/eval.hpp"
#include "moodcast/features.hpp"
#include "moodcast/geo.hpp"
#include "moodcast/ingest.hpp"
#include "moodcast/model.hpp"
#include "moodcast/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace moodcast::pipeline {

inline constexpr const char* kVersion = "0.1.0";

enum class TaskSelection { diagnosis, forecast, both };

// Resolved configuration of one command invocation. Every field that affects
// an output is recorded in the run metadata so reruns are reproducible.
struct RunConfig {
    // shared
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 1;

    // synth
    synth::SynthConfig synth;

    // extract
    std::filesystem::path manifest_path;
    geo::ClusterAlgorithm algorithm = geo::ClusterAlgorithm::kmeans;
    geo::ClusterParams cluster_params;
    bool emit_places = false;

    // run
    std::filesystem::path features_path;
    std::filesystem::path phq_path;
    TaskSelection task = TaskSelection::both;
    int folds = 10;
    model::TrainConfig train;
    features::FeatureGroup feature_set = features::FeatureGroup::all;
    bool ablation = false;     // evaluate every feature set
    bool emit_samples = false; // samples.csv + folds.json
    bool save_models = false;  // per-fold checkpoints and loss traces
    std::string model_label;   // report row label; algorithm name by default

    // verify
    std::filesystem::path truth_features_path;
};

// Full preprocessing + clustering + daily feature extraction for a loaded
// cohort. Places are clustered per subject over all study days; the accuracy
// cutoff is the cohort-wide 80th percentile.
std::map<SubjectId, std::vector<features::DailyFeatures>>
extract_features(const ingest::Cohort& cohort, geo::ClusterAlgorithm algorithm,
                 const geo::ClusterParams& params);

// Subcommand bodies; they throw UsageError / DataError / TrainingDiverged.
void cmd_synth(const RunConfig& config);
void cmd_extract(const RunConfig& config);
void cmd_run(const RunConfig& config);
// Returns the number of discrepancies (0 = verified).
std::size_t cmd_verify(const RunConfig& config);

} // namespace moodcast::pipeline
