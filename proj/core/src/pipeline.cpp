#include "moodcast/pipeline.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

namespace moodcast::pipeline {

namespace {

int max_day_index(const ingest::SensorLog& log, std::span<const PhqObservation> phq) {
    int max_day = 0;
    auto consider = [&](const Timestamp& t) {
        if (local_day_number(t) >= local_day_number(log.study_start)) {
            max_day = std::max(max_day, local_day_index(t, log.study_start));
        }
    };
    for (const auto& e : log.calls) consider(e.t);
    for (const auto& e : log.usage) consider(e.start);
    for (const auto& e : log.apps) consider(e.t);
    for (const auto& e : log.locks) consider(e.start);
    for (const auto& e : log.gps) consider(e.t);
    for (const auto& o : phq) {
        if (o.subject == log.subject) max_day = std::max(max_day, o.day_index);
    }
    return max_day;
}

// Clips [start, end) intervals to one local day and rebases them as sessions
// within that day; each day receives its exact share, so daily totals
// partition the stream. A genuinely zero-length session counts once, on the
// day containing its instant; zero-length remnants of longer intervals at a
// day boundary are dropped.
template <typename T>
std::vector<T> clip_intervals(std::span<const T> intervals, const features::DayWindow& window) {
    std::vector<T> out;
    for (const auto& iv : intervals) {
        const std::int64_t lo = std::max(iv.start.local_ms(), window.local_start_ms);
        const std::int64_t hi = std::min(iv.end.local_ms(), window.local_end_ms);
        if (hi < lo) continue;
        if (lo >= window.local_end_ms) continue;
        if (hi == lo) {
            const bool degenerate = iv.start.local_ms() == iv.end.local_ms();
            if (!degenerate) continue;
        }
        T clipped = iv;
        clipped.start = Timestamp{lo - static_cast<std::int64_t>(iv.start.offset_min) * kMsPerMinute,
                                  iv.start.offset_min};
        clipped.end = Timestamp{hi - static_cast<std::int64_t>(iv.end.offset_min) * kMsPerMinute,
                                iv.end.offset_min};
        out.push_back(clipped);
    }
    return out;
}

} // namespace

namespace {

std::vector<features::DailyFeatures> extract_subject(const ingest::SensorLog& log,
                                                     std::span<const PhqObservation> phq,
                                                     std::optional<double> cutoff,
                                                     geo::ClusterAlgorithm algorithm,
                                                     const geo::ClusterParams& params) {
    const int n_days = std::max(1, max_day_index(log, phq));

    geo::Preprocessed gps;
    if (cutoff) gps = geo::preprocess(log.gps, *cutoff);
    const auto places = geo::cluster(algorithm, gps.stationary, params);
    const geo::PlaceIndex place_index(places);
    const auto home = geo::find_home(gps.stationary, place_index);

    // Per-day partitions of the preprocessed fixes (time-sorted, so each day
    // is one contiguous range).
    auto split_days = [&](const std::vector<GpsFix>& fixes) {
        std::map<int, std::pair<std::size_t, std::size_t>> ranges; // day -> [first, last)
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            if (local_day_number(fixes[i].t) < local_day_number(log.study_start)) continue;
            const int day = local_day_index(fixes[i].t, log.study_start);
            auto [it, inserted] = ranges.try_emplace(day, i, i + 1);
            if (!inserted) it->second.second = i + 1;
        }
        return ranges;
    };
    const auto valid_days = split_days(gps.all_valid);
    const auto stationary_days = split_days(gps.stationary);

    std::vector<features::DailyFeatures> days;
    days.reserve(static_cast<std::size_t>(n_days));

    std::vector<CallEvent> day_calls;
    std::vector<AppEvent> day_apps;
    std::vector<AppEvent> prev_day_apps;

    for (int day = 1; day <= n_days; ++day) {
        const auto window = features::day_window(log.study_start, day);

        day_calls.clear();
        for (const auto& e : log.calls) {
            const std::int64_t lm = e.t.local_ms();
            if (lm >= window.local_start_ms && lm < window.local_end_ms) day_calls.push_back(e);
        }
        day_apps.clear();
        for (const auto& e : log.apps) {
            const std::int64_t lm = e.t.local_ms();
            if (lm >= window.local_start_ms && lm < window.local_end_ms) day_apps.push_back(e);
        }
        const auto day_usage = clip_intervals<UsageSession>(log.usage, window);
        const auto day_locks = clip_intervals<LockEvent>(log.locks, window);

        std::optional<geo::GpsFeatures> day_gps;
        const auto valid_range = valid_days.find(day);
        if (valid_range != valid_days.end()) {
            std::span<const GpsFix> day_valid{gps.all_valid.data() + valid_range->second.first,
                                              valid_range->second.second - valid_range->second.first};
            std::span<const GpsFix> day_stationary;
            const auto stat_range = stationary_days.find(day);
            if (stat_range != stationary_days.end()) {
                day_stationary = {gps.stationary.data() + stat_range->second.first,
                                  stat_range->second.second - stat_range->second.first};
            }
            day_gps = geo::gps_features(day_valid, day_stationary, place_index, home);
        }

        days.push_back(features::assemble_daily(log.subject, day, features::call_features(day_calls),
                                                features::usage_features(day_usage),
                                                features::activity_features(day_apps, day_locks, prev_day_apps),
                                                day_gps));
        prev_day_apps = day_apps;
    }
    return days;
}

} // namespace

std::map<SubjectId, std::vector<features::DailyFeatures>>
extract_features(const ingest::Cohort& cohort, geo::ClusterAlgorithm algorithm,
                 const geo::ClusterParams& params) {
    std::vector<GpsFix> all_fixes;
    for (const auto& log : cohort.logs) {
        all_fixes.insert(all_fixes.end(), log.gps.begin(), log.gps.end());
    }
    std::optional<double> cutoff;
    if (!all_fixes.empty()) cutoff = geo::cohort_accuracy_cutoff(all_fixes);

    // Subjects are independent; fan the work out over the available cores.
    const std::size_t n = cohort.logs.size();
    std::vector<std::vector<features::DailyFeatures>> results(n);
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), std::max<std::size_t>(1, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += workers) {
                results[i] = extract_subject(cohort.logs[i], cohort.phq, cutoff, algorithm, params);
            }
        });
    }
    for (auto& t : pool) t.join();

    std::map<SubjectId, std::vector<features::DailyFeatures>> out;
    for (std::size_t i = 0; i < n; ++i) {
        out[cohort.logs[i].subject] = std::move(results[i]);
    }
    return out;
}

namespace {

nlohmann::json cluster_params_json(const geo::ClusterParams& p) {
    return {{"d_time_m", p.d_time_m},     {"t_time_s", p.t_time_s},         {"d_kmeans_m", p.d_kmeans_m},
            {"eps_m", p.eps_m},           {"min_samples", p.min_samples},   {"seed", p.seed},
            {"max_lloyd_iterations", p.max_lloyd_iterations}};
}

void write_meta(const std::filesystem::path& path, const std::string& command, const nlohmann::json& fields) {
    nlohmann::json j = fields;
    j["command"] = command;
    j["version"] = kVersion;
    std::ofstream out(path);
    if (!out.is_open()) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<dataset::Task> selected_tasks(TaskSelection sel) {
    switch (sel) {
    case TaskSelection::diagnosis: return {dataset::Task::diagnosis};
    case TaskSelection::forecast: return {dataset::Task::forecast};
    case TaskSelection::both: return {dataset::Task::diagnosis, dataset::Task::forecast};
    }
    return {};
}

} // namespace

void cmd_synth(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    synth::SynthConfig sc = config.synth;
    (void)synth::generate(sc, config.out_dir);
    write_meta(config.out_dir / "synth_meta.json", "synth",
               {{"n_subjects", sc.n_subjects},
                {"n_weeks", sc.n_weeks},
                {"seed", sc.seed},
                {"activity_effect", sc.activity_effect},
                {"call_effect", sc.call_effect},
                {"usage_effect", sc.usage_effect},
                {"gps_effect", sc.gps_effect},
                {"noise", sc.noise},
                {"weekly_step", sc.weekly_step}});
}

void cmd_extract(const RunConfig& config) {
    if (config.manifest_path.empty()) throw UsageError("extract: --manifest is required");
    std::filesystem::create_directories(config.out_dir);

    const auto manifest = ingest::read_manifest(config.manifest_path);
    if (manifest.subjects.empty()) throw DataError("extract: manifest lists no subjects");
    const auto cohort = ingest::load_cohort(manifest);

    const auto daily = extract_features(cohort, config.algorithm, config.cluster_params);
    features::write_features_csv(config.out_dir / "features.csv", daily);

    // Consolidated questionnaire file for the run stage.
    ingest::write_phq(config.out_dir / "phq.csv", cohort.phq);

    if (!cohort.rejects.empty()) {
        csv::TableWriter w(config.out_dir / "rejects.csv", {"file", "line", "reason", "raw"});
        for (const auto& r : cohort.rejects) {
            std::string raw = r.raw;
            std::replace(raw.begin(), raw.end(), ',', ';');
            w.row({r.file, std::to_string(r.line), r.reason, raw});
        }
    }

    if (config.emit_places) {
        std::vector<GpsFix> all_fixes;
        for (const auto& log : cohort.logs) all_fixes.insert(all_fixes.end(), log.gps.begin(), log.gps.end());
        if (!all_fixes.empty()) {
            const double cutoff = geo::cohort_accuracy_cutoff(all_fixes);
            for (const auto& log : cohort.logs) {
                const auto gps = geo::preprocess(log.gps, cutoff);
                const auto places = geo::cluster(config.algorithm, gps.stationary, config.cluster_params);
                geo::write_places_csv(config.out_dir / ("places_" + log.subject.value + ".csv"), places);
            }
        }
    }

    std::ofstream log_out(config.out_dir / "extract_log.txt");
    log_out << ingest::format_summary(cohort);

    write_meta(config.out_dir / "extract_meta.json", "extract",
               {{"manifest", config.manifest_path.string()},
                {"algorithm", geo::to_string(config.algorithm)},
                {"cluster_params", cluster_params_json(config.cluster_params)},
                {"subjects", manifest.subjects.size()},
                {"rejected_rows", cohort.rejects.size()}});
}

void cmd_run(const RunConfig& config) {
    if (config.features_path.empty()) throw UsageError("run: --features is required");
    if (config.phq_path.empty()) throw UsageError("run: --phq is required");
    std::filesystem::create_directories(config.out_dir);

    const auto daily = features::read_features_csv(config.features_path);
    if (daily.empty()) throw DataError("run: no feature rows in " + config.features_path.string());

    std::vector<csv::RejectedRow> rejects;
    const auto phq = ingest::parse_phq(config.phq_path, rejects);
    if (phq.empty()) throw DataError("run: no questionnaire scores in " + config.phq_path.string());

    std::vector<SubjectId> subjects;
    for (const auto& [subject, rows] : daily) subjects.push_back(subject);
    const auto plan = dataset::subject_kfold(subjects, config.folds, config.seed);

    const std::string label = config.model_label.empty() ? geo::to_string(config.algorithm) : config.model_label;

    std::vector<eval::EvalReport> reports;
    std::vector<eval::EvalReport> ablation_reports;
    for (const auto task : selected_tasks(config.task)) {
        const auto samples = dataset::build_samples(daily, phq, task);
        if (samples.empty()) throw DataError("run: no usable samples for task " + std::string(to_string(task)));

        eval::CvConfig cv;
        cv.train = config.train;
        cv.train.seed = config.seed;
        cv.feature_set = config.feature_set;
        cv.model_label = label;
        if (config.save_models) cv.fold_artifacts_dir = config.out_dir / "models";
        reports.push_back(eval::evaluate_cv(samples, plan, cv));

        if (config.ablation) {
            const features::FeatureGroup sets[] = {features::FeatureGroup::calls, features::FeatureGroup::usage,
                                                   features::FeatureGroup::activity, features::FeatureGroup::gps,
                                                   features::FeatureGroup::all};
            auto per_set = eval::feature_ablation(samples, plan, sets, cv);
            ablation_reports.insert(ablation_reports.end(), per_set.begin(), per_set.end());
        }

        if (config.emit_samples) {
            const auto stats = dataset::compute_stats(samples);
            const auto prepared = dataset::prepare(samples, stats);
            dataset::write_samples_csv(config.out_dir /
                                           (std::string("samples_") + to_string(task) + ".csv"),
                                       prepared);
        }
    }

    eval::write_report_csv(config.out_dir / "report.csv", reports);
    if (!ablation_reports.empty()) {
        eval::write_ablation_csv(config.out_dir / "ablation.csv", ablation_reports);
    }
    if (config.emit_samples) {
        dataset::write_folds_json(config.out_dir / "folds.json", plan);
    }
    std::cout << eval::format_table(reports);

    write_meta(config.out_dir / "run_meta.json", "run",
               {{"features", config.features_path.string()},
                {"phq", config.phq_path.string()},
                {"model_label", label},
                {"task", config.task == TaskSelection::both
                             ? "both"
                             : to_string(selected_tasks(config.task).front())},
                {"folds", config.folds},
                {"seed", config.seed},
                {"feature_set", features::to_string(config.feature_set)},
                {"ablation", config.ablation},
                {"epochs", config.train.epochs},
                {"batch_size", config.train.batch_size},
                {"hidden", config.train.hidden},
                {"lr", config.train.lr},
                {"prefix_augmentation", config.train.prefix_augmentation},
                {"relu_before_head", config.train.relu_before_head},
                {"emit_samples", config.emit_samples},
                {"save_models", config.save_models}});
}

std::size_t cmd_verify(const RunConfig& config) {
    if (config.manifest_path.empty()) throw UsageError("verify: --manifest is required");
    if (config.truth_features_path.empty()) throw UsageError("verify: --truth is required");

    const auto report =
        synth::verify_pipeline(config.manifest_path, config.truth_features_path, config.algorithm,
                               config.cluster_params);
    std::cout << report.summary() << '\n';
    for (std::size_t i = 0; i < report.diffs.size() && i < 50; ++i) {
        const auto& d = report.diffs[i];
        std::cout << "  " << d.subject.value << " day " << d.day_index << ' ' << d.field << ": expected "
                  << d.expected << ", got " << d.actual << '\n';
    }
    return report.diffs.size() + report.rows_missing;
}

} // namespace moodcast::pipeline
