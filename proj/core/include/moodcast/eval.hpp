#pragma once

#include "moodcast/dataset.hpp"
#include "moodcast/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace moodcast::eval {

// 5-class severity scheme over the 0-27 score range.
enum class Severity { minimal, mild, moderate, moderately_severe, severe };

const char* to_string(Severity s);

// Bins 0-4, 5-9, 10-14, 15-19, 20-27; real-valued predictions change class
// exactly at 5, 10, 15, 20. Scores are clipped to [0, 27] first.
Severity severity_class(double score);

// Major depression cutoff: score >= 10.
bool is_major(double score);

double clip_score(double score);

// Root mean squared error; throws DataError on empty or mismatched input.
double rmse(std::span<const double> predictions, std::span<const double> targets);

// Constant predictor: mean of the training-fold targets.
double baseline_predict(std::span<const double> train_targets);

// Per-sample metric triple over one prediction vector.
struct SampleMetrics {
    double rmse = 0.0;
    double binary_acc = 0.0;   // percent
    double severity_acc = 0.0; // percent
};

SampleMetrics sample_metrics(std::span<const double> predictions, std::span<const double> targets);

struct FoldMetrics {
    int fold = 0;
    std::size_t n_test = 0;
    double rmse = 0.0;
    double binary_acc = 0.0;   // percent
    double severity_acc = 0.0; // percent
    double baseline_value = 0.0; // the constant training-mean prediction
    double baseline_rmse = 0.0;
    double baseline_binary_acc = 0.0;
    double baseline_severity_acc = 0.0;
};

struct EvalReport {
    dataset::Task task = dataset::Task::diagnosis;
    std::string model_label;        // clustering algorithm behind the features
    features::FeatureGroup feature_set = features::FeatureGroup::all;
    std::vector<FoldMetrics> folds; // evaluated folds only
    std::vector<int> skipped_folds; // folds with zero test samples

    double mean_rmse() const;
    double std_rmse() const;
    double mean_binary_acc() const;
    double std_binary_acc() const;
    double mean_severity_acc() const;
    double std_severity_acc() const;
    double baseline_mean_rmse() const;
    double baseline_mean_binary_acc() const;
    double baseline_mean_severity_acc() const;
};

struct CvConfig {
    model::TrainConfig train;
    features::FeatureGroup feature_set = features::FeatureGroup::all;
    std::string model_label = "model";
    // When set, per-fold checkpoints and loss traces are written here.
    std::filesystem::path fold_artifacts_dir;
};

// Subject-independent cross-validation: per fold, normalisation statistics,
// the model, and the baseline all come from the nine training folds only;
// metrics are computed per test sample with predictions clipped to [0, 27].
EvalReport evaluate_cv(std::span<const dataset::Sample> samples, const dataset::FoldPlan& plan,
                       const CvConfig& config);

// Reruns the cross-validation once per feature set.
std::vector<EvalReport> feature_ablation(std::span<const dataset::Sample> samples,
                                         const dataset::FoldPlan& plan,
                                         std::span<const features::FeatureGroup> sets,
                                         const CvConfig& config);

void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports);
void write_ablation_csv(const std::filesystem::path& path, std::span<const EvalReport> reports);

// Human-readable summary table, one row per model x metric column per task.
std::string format_table(std::span<const EvalReport> reports);

} // namespace moodcast::eval
