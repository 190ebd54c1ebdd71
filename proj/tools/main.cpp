#include "moodcast/errors.hpp"
#include "moodcast/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct AlgorithmFlag {
    std::string name = "kmeans";

    moodcast::geo::ClusterAlgorithm resolve() const {
        const auto a = moodcast::geo::parse_cluster_algorithm(name);
        if (!a) throw moodcast::UsageError("unknown clustering algorithm: " + name);
        return *a;
    }
};

void add_cluster_options(CLI::App* cmd, moodcast::pipeline::RunConfig& config, AlgorithmFlag& algo) {
    cmd->add_option("--cluster", algo.name, "Clustering algorithm: time_based, kmeans, or dbscan")
        ->default_val("kmeans");
    cmd->add_option("--d-time", config.cluster_params.d_time_m, "Time-based join radius, metres")
        ->default_val(40.0);
    cmd->add_option("--t-time", config.cluster_params.t_time_s, "Time-based minimum stay, seconds")
        ->default_val(900.0);
    cmd->add_option("--d-kmeans", config.cluster_params.d_kmeans_m, "K-means maximum cluster radius, metres")
        ->default_val(500.0);
    cmd->add_option("--eps", config.cluster_params.eps_m, "DBSCAN neighbourhood radius, metres")
        ->default_val(30.0);
    cmd->add_option("--min-samples", config.cluster_params.min_samples, "DBSCAN core point density")
        ->default_val(3);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Daily-behaviour feature extraction and weekly score modelling from phone sensor logs"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI file (flags win)");

    moodcast::pipeline::RunConfig config;
    AlgorithmFlag algo;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort with known ground truth");
    synth->add_option("--subjects", config.synth.n_subjects, "Cohort size")->default_val(48);
    synth->add_option("--weeks", config.synth.n_weeks, "Study length in weeks")->default_val(8);
    synth->add_option("--seed", config.synth.seed, "Generator seed")->default_val(7);
    synth->add_option("--activity-effect", config.synth.activity_effect)->default_val(1.0);
    synth->add_option("--call-effect", config.synth.call_effect)->default_val(0.25);
    synth->add_option("--usage-effect", config.synth.usage_effect)->default_val(0.6);
    synth->add_option("--gps-effect", config.synth.gps_effect)->default_val(0.6);
    synth->add_option("--noise", config.synth.noise)->default_val(1.0);
    synth->add_option("--weekly-step", config.synth.weekly_step)->default_val(0.6);
    synth->add_option("--out", config.out_dir, "Output directory")->default_val("synth_out");

    auto* extract = app.add_subcommand("extract", "Ingest raw logs and write the daily feature matrix");
    extract->add_option("--manifest", config.manifest_path, "Cohort manifest CSV")->required();
    extract->add_option("--out", config.out_dir, "Output directory")->default_val("extract_out");
    extract->add_flag("--places", config.emit_places, "Also write per-subject place CSVs");
    add_cluster_options(extract, config, algo);

    auto* run = app.add_subcommand("run", "Build weekly samples and run the cross-validated evaluation");
    run->add_option("--features", config.features_path, "features.csv from extract")->required();
    run->add_option("--phq", config.phq_path, "Questionnaire scores CSV")->required();
    run->add_option("--out", config.out_dir, "Output directory")->default_val("run_out");
    std::string task_name = "both";
    run->add_option("--task", task_name, "diagnosis, forecast, or both")->default_val("both");
    run->add_option("--folds", config.folds, "Cross-validation folds")->default_val(10);
    run->add_option("--seed", config.seed, "Fold shuffle and training seed")->default_val(1);
    run->add_option("--epochs", config.train.epochs)->default_val(200);
    run->add_option("--batch", config.train.batch_size)->default_val(16);
    run->add_option("--hidden", config.train.hidden)->default_val(4);
    run->add_option("--lr", config.train.lr)->default_val(0.001);
    std::string feature_set = "all";
    run->add_option("--features-set", feature_set, "calls, usage, activity, gps, or all")->default_val("all");
    run->add_flag("--ablation", config.ablation, "Evaluate every feature set");
    bool no_augment = false;
    run->add_flag("--no-prefix-augmentation", no_augment, "Train on full weeks only");
    run->add_flag("--relu-before-head", config.train.relu_before_head,
                  "Rectify the last hidden state instead of the output");
    run->add_flag("--emit-samples", config.emit_samples, "Write samples.csv and folds.json");
    run->add_flag("--save-models", config.save_models, "Write per-fold checkpoints and loss traces");
    std::string label;
    run->add_option("--cluster", label, "Feature provenance label for report rows");

    auto* verify = app.add_subcommand("verify", "Re-extract a synthetic cohort and diff against its truth");
    verify->add_option("--manifest", config.manifest_path, "Cohort manifest CSV")->required();
    verify->add_option("--truth", config.truth_features_path, "truth_features.csv")->required();
    add_cluster_options(verify, config, algo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            moodcast::pipeline::cmd_synth(config);
        } else if (extract->parsed()) {
            config.algorithm = algo.resolve();
            moodcast::pipeline::cmd_extract(config);
        } else if (run->parsed()) {
            const auto task = task_name == "both" ? std::optional<moodcast::dataset::Task>{}
                                                  : moodcast::dataset::parse_task(task_name);
            if (task_name != "both" && !task) throw moodcast::UsageError("unknown task: " + task_name);
            config.task = task_name == "both" ? moodcast::pipeline::TaskSelection::both
                          : *task == moodcast::dataset::Task::diagnosis
                              ? moodcast::pipeline::TaskSelection::diagnosis
                              : moodcast::pipeline::TaskSelection::forecast;
            const auto set = moodcast::features::parse_feature_group(feature_set);
            if (!set) throw moodcast::UsageError("unknown feature set: " + feature_set);
            config.feature_set = *set;
            config.train.prefix_augmentation = !no_augment;
            config.model_label = label;
            moodcast::pipeline::cmd_run(config);
        } else if (verify->parsed()) {
            config.algorithm = algo.resolve();
            if (moodcast::pipeline::cmd_verify(config) != 0) return kExitData;
        }
    } catch (const moodcast::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const moodcast::TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const moodcast::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
