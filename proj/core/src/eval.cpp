#include "moodcast/eval.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace moodcast::eval {

const char* to_string(Severity s) {
    switch (s) {
    case Severity::minimal: return "minimal";
    case Severity::mild: return "mild";
    case Severity::moderate: return "moderate";
    case Severity::moderately_severe: return "moderately_severe";
    case Severity::severe: return "severe";
    }
    return "?";
}

double clip_score(double score) { return std::clamp(score, 0.0, 27.0); }

Severity severity_class(double score) {
    const double s = clip_score(score);
    if (s < 5.0) return Severity::minimal;
    if (s < 10.0) return Severity::mild;
    if (s < 15.0) return Severity::moderate;
    if (s < 20.0) return Severity::moderately_severe;
    return Severity::severe;
}

bool is_major(double score) { return clip_score(score) >= 10.0; }

double rmse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.empty() || predictions.size() != targets.size()) {
        throw DataError("rmse: empty or mismatched input");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = predictions[i] - targets[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(predictions.size()));
}

double baseline_predict(std::span<const double> train_targets) {
    if (train_targets.empty()) throw DataError("baseline over empty training targets");
    double sum = 0.0;
    for (double t : train_targets) sum += t;
    return sum / static_cast<double>(train_targets.size());
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Population standard deviation across fold values.
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

template <typename Get>
std::vector<double> collect(const std::vector<FoldMetrics>& folds, Get&& get) {
    std::vector<double> out;
    out.reserve(folds.size());
    for (const auto& f : folds) out.push_back(get(f));
    return out;
}

} // namespace

SampleMetrics sample_metrics(std::span<const double> predictions, std::span<const double> targets) {
    SampleMetrics m;
    m.rmse = rmse(predictions, targets);
    std::size_t binary_hits = 0;
    std::size_t severity_hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (is_major(predictions[i]) == is_major(targets[i])) ++binary_hits;
        if (severity_class(predictions[i]) == severity_class(targets[i])) ++severity_hits;
    }
    m.binary_acc = 100.0 * static_cast<double>(binary_hits) / static_cast<double>(predictions.size());
    m.severity_acc = 100.0 * static_cast<double>(severity_hits) / static_cast<double>(predictions.size());
    return m;
}

double EvalReport::mean_rmse() const { return mean_of(collect(folds, [](const FoldMetrics& f) { return f.rmse; })); }
double EvalReport::std_rmse() const { return std_of(collect(folds, [](const FoldMetrics& f) { return f.rmse; })); }
double EvalReport::mean_binary_acc() const {
    return mean_of(collect(folds, [](const FoldMetrics& f) { return f.binary_acc; }));
}
double EvalReport::std_binary_acc() const {
    return std_of(collect(folds, [](const FoldMetrics& f) { return f.binary_acc; }));
}
double EvalReport::mean_severity_acc() const {
    return mean_of(collect(folds, [](const FoldMetrics& f) { return f.severity_acc; }));
}
double EvalReport::std_severity_acc() const {
    return std_of(collect(folds, [](const FoldMetrics& f) { return f.severity_acc; }));
}
double EvalReport::baseline_mean_rmse() const {
    return mean_of(collect(folds, [](const FoldMetrics& f) { return f.baseline_rmse; }));
}
double EvalReport::baseline_mean_binary_acc() const {
    return mean_of(collect(folds, [](const FoldMetrics& f) { return f.baseline_binary_acc; }));
}
double EvalReport::baseline_mean_severity_acc() const {
    return mean_of(collect(folds, [](const FoldMetrics& f) { return f.baseline_severity_acc; }));
}

EvalReport evaluate_cv(std::span<const dataset::Sample> samples, const dataset::FoldPlan& plan,
                       const CvConfig& config) {
    EvalReport report;
    if (samples.empty()) throw DataError("evaluate_cv: no samples");
    report.task = samples.front().task;
    report.model_label = config.model_label;
    report.feature_set = config.feature_set;

    for (int fold = 0; fold < plan.k; ++fold) {
        const auto& test_subjects = plan.folds[static_cast<std::size_t>(fold)];
        const std::set<SubjectId> test_set(test_subjects.begin(), test_subjects.end());

        std::vector<dataset::Sample> train_samples;
        std::vector<dataset::Sample> test_samples;
        for (const auto& s : samples) {
            if (test_set.contains(s.subject)) {
                test_samples.push_back(s);
            } else {
                train_samples.push_back(s);
            }
        }
        if (test_samples.empty()) {
            report.skipped_folds.push_back(fold);
            continue;
        }
        if (train_samples.empty()) throw DataError("evaluate_cv: empty training split");

        const auto stats = dataset::compute_stats(train_samples);
        auto train_prepared = dataset::prepare(train_samples, stats);
        auto test_prepared = dataset::prepare(test_samples, stats);

        if (config.feature_set != features::FeatureGroup::all) {
            for (auto& s : train_prepared) dataset::restrict_to_group(s, config.feature_set);
            for (auto& s : test_prepared) dataset::restrict_to_group(s, config.feature_set);
        }

        std::vector<dataset::Sample> train_input;
        if (config.train.prefix_augmentation) {
            train_input = dataset::augment_prefixes(train_prepared);
        } else {
            train_input = std::move(train_prepared);
        }

        model::TrainConfig fold_config = config.train;
        fold_config.seed = Rng::splitmix(config.train.seed + static_cast<std::uint64_t>(fold));
        const auto trained = model::train(train_input, fold_config);

        if (!config.fold_artifacts_dir.empty()) {
            std::filesystem::create_directories(config.fold_artifacts_dir);
            const std::string stem = std::string(to_string(report.task)) + "_fold" + std::to_string(fold);
            model::save_checkpoint(config.fold_artifacts_dir / ("model_" + stem + ".txt"), trained.params,
                                   fold_config);
            model::write_loss_trace(config.fold_artifacts_dir / ("loss_" + stem + ".csv"), trained.epoch_loss);
        }

        std::vector<double> preds;
        std::vector<double> targets;
        preds.reserve(test_prepared.size());
        targets.reserve(test_prepared.size());
        for (const auto& s : test_prepared) {
            preds.push_back(clip_score(model::predict(trained.params, s)));
            targets.push_back(s.target);
        }

        std::vector<double> train_targets;
        train_targets.reserve(train_samples.size());
        for (const auto& s : train_samples) train_targets.push_back(s.target);
        const double base = baseline_predict(train_targets);
        const std::vector<double> base_preds(targets.size(), clip_score(base));

        const SampleMetrics model_metrics = sample_metrics(preds, targets);
        const SampleMetrics base_metrics = sample_metrics(base_preds, targets);

        FoldMetrics fm;
        fm.fold = fold;
        fm.n_test = test_samples.size();
        fm.baseline_value = base;
        fm.rmse = model_metrics.rmse;
        fm.binary_acc = model_metrics.binary_acc;
        fm.severity_acc = model_metrics.severity_acc;
        fm.baseline_rmse = base_metrics.rmse;
        fm.baseline_binary_acc = base_metrics.binary_acc;
        fm.baseline_severity_acc = base_metrics.severity_acc;
        report.folds.push_back(fm);
    }
    return report;
}

std::vector<EvalReport> feature_ablation(std::span<const dataset::Sample> samples,
                                         const dataset::FoldPlan& plan,
                                         std::span<const features::FeatureGroup> sets,
                                         const CvConfig& config) {
    if (sets.empty()) throw DataError("feature_ablation: no feature sets");
    std::vector<EvalReport> out;
    out.reserve(sets.size());
    for (const auto set : sets) {
        CvConfig c = config;
        c.feature_set = set;
        out.push_back(evaluate_cv(samples, plan, c));
    }
    return out;
}

// Wide layout mirroring the summary table: one row per model, task x metric
// columns. Tasks that were not evaluated stay empty.
void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports) {
    std::vector<std::string> columns = {"model"};
    for (const char* metric : {"binary_acc", "severity_acc", "rmse"}) {
        for (const char* task : {"diagnosis", "forecast"}) {
            columns.push_back(std::string(metric) + "_" + task + "_mean");
            columns.push_back(std::string(metric) + "_" + task + "_std");
        }
    }
    columns.push_back("folds");
    columns.push_back("skipped_folds");
    csv::TableWriter w(path, columns);

    auto fmt = [](double v) { return csv::format_double(v); };
    const EvalReport* by_task[2] = {nullptr, nullptr};
    std::string label = "model";
    std::size_t folds = 0;
    std::size_t skipped = 0;
    for (const auto& r : reports) {
        by_task[r.task == dataset::Task::diagnosis ? 0 : 1] = &r;
        label = r.model_label;
        folds = std::max(folds, r.folds.size());
        skipped += r.skipped_folds.size();
    }

    auto metric_cells = [&](auto&& mean_fn, auto&& std_fn) {
        std::vector<std::string> cells;
        for (const auto* r : by_task) {
            if (r) {
                cells.push_back(fmt(mean_fn(*r)));
                cells.push_back(fmt(std_fn(*r)));
            } else {
                cells.emplace_back();
                cells.emplace_back();
            }
        }
        return cells;
    };
    auto emit_row = [&](const std::string& name, auto&& binary_mean, auto&& binary_std, auto&& sev_mean,
                        auto&& sev_std, auto&& rmse_mean, auto&& rmse_std) {
        std::vector<std::string> row = {name};
        for (auto& c : metric_cells(binary_mean, binary_std)) row.push_back(std::move(c));
        for (auto& c : metric_cells(sev_mean, sev_std)) row.push_back(std::move(c));
        for (auto& c : metric_cells(rmse_mean, rmse_std)) row.push_back(std::move(c));
        row.push_back(std::to_string(folds));
        row.push_back(std::to_string(skipped));
        w.row(row);
    };

    auto base_stat = [](const EvalReport& r, double FoldMetrics::*field, bool want_std) {
        const auto values = collect(r.folds, [field](const FoldMetrics& f) { return f.*field; });
        return want_std ? std_of(values) : mean_of(values);
    };
    emit_row(
        "baseline",
        [&](const EvalReport& r) { return base_stat(r, &FoldMetrics::baseline_binary_acc, false); },
        [&](const EvalReport& r) { return base_stat(r, &FoldMetrics::baseline_binary_acc, true); },
        [&](const EvalReport& r) { return base_stat(r, &FoldMetrics::baseline_severity_acc, false); },
        [&](const EvalReport& r) { return base_stat(r, &FoldMetrics::baseline_severity_acc, true); },
        [&](const EvalReport& r) { return base_stat(r, &FoldMetrics::baseline_rmse, false); },
        [&](const EvalReport& r) { return base_stat(r, &FoldMetrics::baseline_rmse, true); });
    emit_row(
        label, [](const EvalReport& r) { return r.mean_binary_acc(); },
        [](const EvalReport& r) { return r.std_binary_acc(); },
        [](const EvalReport& r) { return r.mean_severity_acc(); },
        [](const EvalReport& r) { return r.std_severity_acc(); },
        [](const EvalReport& r) { return r.mean_rmse(); }, [](const EvalReport& r) { return r.std_rmse(); });
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const EvalReport> reports) {
    csv::TableWriter w(path, {"feature_set", "task", "binary_acc_mean", "binary_acc_std", "severity_acc_mean",
                              "severity_acc_std", "rmse_mean", "rmse_std"});
    auto fmt = [](double v) { return csv::format_double(v); };
    for (const auto& r : reports) {
        w.row({features::to_string(r.feature_set), to_string(r.task), fmt(r.mean_binary_acc()),
               fmt(r.std_binary_acc()), fmt(r.mean_severity_acc()), fmt(r.std_severity_acc()),
               fmt(r.mean_rmse()), fmt(r.std_rmse())});
    }
}

std::string format_table(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << std::left << std::setw(12) << "Model" << std::setw(12) << "Task" << std::right << std::setw(18)
       << "Binary (% acc)" << std::setw(20) << "Severity (% acc)" << std::setw(18) << "Score (RMSE)" << '\n';
    for (const auto& r : reports) {
        os << std::left << std::setw(12) << "baseline" << std::setw(12) << to_string(r.task);
        os << std::right << std::setw(18) << r.baseline_mean_binary_acc() << std::setw(20)
           << r.baseline_mean_severity_acc();
        os << std::setw(15) << std::setprecision(3) << r.baseline_mean_rmse() << std::setprecision(1) << '\n';

        std::ostringstream b;
        b << std::fixed << std::setprecision(1) << r.mean_binary_acc() << " (" << r.std_binary_acc() << ")";
        std::ostringstream s;
        s << std::fixed << std::setprecision(1) << r.mean_severity_acc() << " (" << r.std_severity_acc() << ")";
        std::ostringstream rm;
        rm << std::fixed << std::setprecision(3) << r.mean_rmse() << " (" << r.std_rmse() << ")";
        os << std::left << std::setw(12) << r.model_label << std::setw(12) << to_string(r.task);
        os << std::right << std::setw(18) << b.str() << std::setw(20) << s.str() << std::setw(18) << rm.str()
           << '\n';
    }
    return os.str();
}

} // namespace moodcast::eval
