// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Thresholds are fixed here, not tuned at run time.

#include "moodcast/dataset.hpp"
#include "moodcast/eval.hpp"
#include "moodcast/features.hpp"
#include "moodcast/geo.hpp"
#include "moodcast/ingest.hpp"
#include "moodcast/model.hpp"
#include "moodcast/pipeline.hpp"
#include "moodcast/rng.hpp"
#include "moodcast/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace moodcast;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pre-registered cohort seed: margins below were calibrated against this
// seed once and then frozen.
constexpr std::uint64_t kCohortSeed = 20260808ULL;

struct Check {
    std::string name;
    std::function<bool(std::string&)> run;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "moodcast_acceptance";
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

GpsFix fix_at(std::int64_t t_ms, double lat, double lon, double speed = 0.0) {
    GpsFix f;
    f.t = Timestamp{t_ms, 0};
    f.lat = lat;
    f.lon = lon;
    f.accuracy_m = 10.0;
    f.speed_mps = speed;
    return f;
}

constexpr double kLatDegPerMeter = 1.0 / 111'194.9;

// ---------------------------------------------------------------- criterion 1

bool gradient_correctness(std::string& detail) {
    const auto start = Clock::now();
    Rng rng(404);
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
        model::ModelParams p = model::ModelParams::zeros(19, 4);
        for (auto& v : p.flat) v = rng.uniform(-0.8, 0.8);
        const int steps = static_cast<int>(rng.uniform_int(1, 7));
        std::vector<double> seq(static_cast<std::size_t>(steps) * 19);
        for (auto& v : seq) v = rng.uniform(-2.0, 2.0);
        const double target = rng.uniform(0.0, 27.0);

        model::ForwardCache cache;
        model::forward(p, seq, steps, &cache);
        if (std::abs(cache.head_pre) < 0.05) continue; // stay off the ReLU kink
        const auto analytic = model::backward(p, cache, target);

        constexpr double h = 1e-5;
        for (std::size_t i = 0; i < p.flat.size(); ++i) {
            const double saved = p.flat[i];
            p.flat[i] = saved + h;
            const double up = model::mse(model::forward(p, seq, steps), target);
            p.flat[i] = saved - h;
            const double down = model::mse(model::forward(p, seq, steps), target);
            p.flat[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
            worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
        }
        ++done;
    }
    const double elapsed = seconds_since(start);
    std::ostringstream os;
    os << "max relative error " << worst << " over 100 configs in " << elapsed << " s";
    detail = os.str();
    return worst < 1e-4 && elapsed < 30.0;
}

// ---------------------------------------------------------------- criterion 2

std::vector<GpsFix> blob(std::int64_t start_ms, int n, double lat, double lon, Rng& rng, double jitter_m = 4.0) {
    std::vector<GpsFix> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(fix_at(start_ms + i * 300'000, lat + rng.uniform(-jitter_m, jitter_m) * kLatDegPerMeter,
                             lon + rng.uniform(-jitter_m, jitter_m) * kLatDegPerMeter));
    }
    return out;
}

bool time_based_oracle(std::string& detail) {
    Rng rng(11);
    std::vector<GpsFix> fixes;
    auto add = [&](std::vector<GpsFix> v) { fixes.insert(fixes.end(), v.begin(), v.end()); };

    // Stay A: 25 min. Stay B: 3 km away, 20 min. Stay A': 9 m from A, 18 min
    // (merges). Stay C: 10 min only (dropped).
    add(blob(0, 6, 10.0, 10.0, rng, 2.0));
    add(blob(40 * 60'000, 5, 10.0 + 3000.0 * kLatDegPerMeter, 10.0, rng, 2.0));
    add(blob(80 * 60'000, 4, 10.0 + 9.0 * kLatDegPerMeter, 10.0, rng, 0.5));
    fixes.back().t.instant_ms = 80 * 60'000 + 18 * 60'000; // stretch span to 18 min
    add(blob(120 * 60'000, 3, 10.0 + 6000.0 * kLatDegPerMeter, 10.0, rng, 2.0));

    const auto places = geo::cluster_time_based(fixes);
    std::vector<std::size_t> sizes;
    for (const auto& p : places.places) sizes.push_back(p.member_fixes.size());
    std::sort(sizes.begin(), sizes.end());

    std::ostringstream os;
    os << places.places.size() << " places, member counts";
    for (auto s : sizes) os << ' ' << s;
    detail = os.str();
    // Exactly two significant places: B with 5 fixes, A+A' merged with 10.
    return places.places.size() == 2 && sizes == std::vector<std::size_t>{5, 10};
}

// Exact maximum independent set over the conflict graph (edges join fixes
// within 2 * d_kmeans). Any set of pairwise-far fixes needs that many
// clusters, so this is a certified lower bound on the feasible k.
int max_pairwise_far(const std::vector<GpsFix>& fixes, double min_distance_m) {
    const int n = static_cast<int>(fixes.size());
    std::vector<std::uint64_t> far(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j &&
                geo::haversine_m(geo::point_of(fixes[static_cast<std::size_t>(i)]),
                                 geo::point_of(fixes[static_cast<std::size_t>(j)])) > min_distance_m) {
                far[static_cast<std::size_t>(i)] |= 1ULL << j;
            }
        }
    }
    std::function<int(std::uint64_t)> best = [&](std::uint64_t remaining) -> int {
        if (remaining == 0) return 0;
        const int v = std::countr_zero(remaining);
        const std::uint64_t without = remaining & ~(1ULL << v);
        // take v: keep only fixes far from v
        const int with_v = 1 + best(without & far[static_cast<std::size_t>(v)]);
        const int skip_v = best(without);
        return std::max(with_v, skip_v);
    };
    return best(n >= 64 ? ~0ULL : (1ULL << n) - 1);
}

bool kmeans_oracle(std::string& detail) {
    Rng rng(12);
    std::ostringstream os;
    bool ok = true;
    for (int blobs = 1; blobs <= 4; ++blobs) {
        std::vector<GpsFix> fixes;
        for (int b = 0; b < blobs; ++b) {
            // pairwise separations all > 1.2 km > 2 * 500 m
            const auto v = blob(b * 3'600'000, 7, 20.0 + 1.3 * b * 1000.0 * kLatDegPerMeter, 20.0, rng);
            fixes.insert(fixes.end(), v.begin(), v.end());
        }
        const auto places = geo::cluster_kmeans_adaptive(fixes);
        const int k = static_cast<int>(places.places.size());

        double max_radius = 0.0;
        for (const auto& p : places.places) {
            for (const auto& m : p.member_fixes) {
                max_radius = std::max(max_radius, geo::haversine_m(geo::point_of(m), p.centroid));
            }
        }
        const int lower_bound = max_pairwise_far(fixes, 2.0 * places.params.d_kmeans_m);
        os << "B=" << blobs << " k=" << k << " lb=" << lower_bound << " r=" << static_cast<int>(max_radius)
           << "m; ";
        ok = ok && k == blobs && lower_bound == blobs && max_radius < places.params.d_kmeans_m;
    }
    detail = os.str();
    return ok;
}

// Independent density-reachability computation (quadratic, label-free).
struct BruteDbscan {
    std::vector<std::vector<int>> clusters; // sorted member indices
    std::set<int> noise;
};

BruteDbscan brute_dbscan(const std::vector<GpsFix>& fixes, double eps, int min_samples) {
    const int n = static_cast<int>(fixes.size());
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (geo::haversine_m(geo::point_of(fixes[static_cast<std::size_t>(i)]),
                                 geo::point_of(fixes[static_cast<std::size_t>(j)])) <= eps) {
                nb[static_cast<std::size_t>(i)].push_back(j);
            }
        }
    }
    std::vector<bool> core(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) core[static_cast<std::size_t>(i)] = static_cast<int>(nb[static_cast<std::size_t>(i)].size()) >= min_samples;

    BruteDbscan out;
    std::vector<int> cluster_of(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (!core[static_cast<std::size_t>(i)] || cluster_of[static_cast<std::size_t>(i)] >= 0) continue;
        // flood over cores
        std::vector<int> stack = {i};
        cluster_of[static_cast<std::size_t>(i)] = next;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : nb[static_cast<std::size_t>(v)]) {
                if (core[static_cast<std::size_t>(w)] && cluster_of[static_cast<std::size_t>(w)] < 0) {
                    cluster_of[static_cast<std::size_t>(w)] = next;
                    stack.push_back(w);
                }
            }
        }
        ++next;
    }
    // borders: non-core within eps of a core
    for (int i = 0; i < n; ++i) {
        if (core[static_cast<std::size_t>(i)]) continue;
        for (int w : nb[static_cast<std::size_t>(i)]) {
            if (core[static_cast<std::size_t>(w)]) {
                cluster_of[static_cast<std::size_t>(i)] = cluster_of[static_cast<std::size_t>(w)];
                break;
            }
        }
    }
    out.clusters.resize(static_cast<std::size_t>(next));
    for (int i = 0; i < n; ++i) {
        if (cluster_of[static_cast<std::size_t>(i)] >= 0) {
            out.clusters[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(i)])].push_back(i);
        } else {
            out.noise.insert(i);
        }
    }
    for (auto& c : out.clusters) std::sort(c.begin(), c.end());
    std::sort(out.clusters.begin(), out.clusters.end());
    return out;
}

bool dbscan_oracle(std::string& detail) {
    Rng rng(13);
    bool ok = true;
    std::ostringstream os;
    for (int trial = 0; trial < 10; ++trial) {
        // 1-3 blobs well over 2*eps apart plus isolated scatter
        std::vector<GpsFix> fixes;
        const int blobs = static_cast<int>(rng.uniform_int(1, 3));
        for (int b = 0; b < blobs; ++b) {
            const auto v = blob(b * 3'600'000, static_cast<int>(rng.uniform_int(3, 12)),
                                30.0 + b * 500.0 * kLatDegPerMeter, 30.0, rng, 8.0);
            fixes.insert(fixes.end(), v.begin(), v.end());
        }
        const int scatter = static_cast<int>(rng.uniform_int(0, 6));
        for (int s = 0; s < scatter; ++s) {
            fixes.push_back(fix_at(7'000'000 + s * 1000, 30.0 + (3000.0 + 250.0 * s) * kLatDegPerMeter, 30.02));
        }
        while (fixes.size() > 50) fixes.pop_back();
        // unique timestamps map members back to indices
        for (std::size_t i = 0; i < fixes.size(); ++i) fixes[i].t.instant_ms = static_cast<std::int64_t>(i) * 300'000;

        const auto expected = brute_dbscan(fixes, 30.0, 3);
        const auto places = geo::cluster_dbscan(fixes);

        std::vector<std::vector<int>> got;
        std::set<int> clustered;
        for (const auto& p : places.places) {
            std::vector<int> ids;
            for (const auto& m : p.member_fixes) {
                ids.push_back(static_cast<int>(m.t.instant_ms / 300'000));
                clustered.insert(ids.back());
            }
            std::sort(ids.begin(), ids.end());
            got.push_back(ids);
        }
        std::sort(got.begin(), got.end());

        std::set<int> got_noise;
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            if (!clustered.contains(static_cast<int>(i))) got_noise.insert(static_cast<int>(i));
        }

        if (got != expected.clusters || got_noise != expected.noise) {
            ok = false;
            os << "trial " << trial << " mismatch (" << got.size() << " vs " << expected.clusters.size()
               << " clusters); ";
        }
    }
    if (ok) os << "10 instances match the brute-force labels exactly";
    detail = os.str();
    return ok;
}

// ---------------------------------------------------------------- criterion 3

bool analytic_features(std::string& detail) {
    bool ok = true;
    std::ostringstream os;

    // Uniform two-contact call entropy.
    std::vector<CallEvent> calls = {
        {Timestamp{9 * kMsPerHour, 0}, CallDirection::outgoing, 120.0, "a"},
        {Timestamp{10 * kMsPerHour, 0}, CallDirection::incoming, 120.0, "b"},
    };
    const auto cf = features::call_features(calls);
    ok = ok && std::abs(cf[6] - std::log(2.0)) < 1e-12 && std::abs(cf[7] - 1.0) < 1e-12;
    os << "call entropy err " << std::abs(cf[6] - std::log(2.0));

    // Uniform two-place location entropy.
    std::vector<GpsFix> fixes;
    for (int i = 0; i < 7; ++i) fixes.push_back(fix_at(i * 300'000, 60.0, 60.0));
    for (int i = 0; i < 7; ++i) {
        fixes.push_back(fix_at((10 + i) * 300'000, 60.0 + 3000.0 * kLatDegPerMeter, 60.0));
    }
    const auto places = geo::cluster_time_based(fixes);
    const auto gf = geo::gps_features(fixes, fixes, places, 0);
    ok = ok && places.places.size() == 2;
    ok = ok && std::abs(gf.location_entropy - std::log(2.0)) < 1e-12 &&
         std::abs(gf.normalized_location_entropy - 1.0) < 1e-12;
    os << ", location entropy err " << std::abs(gf.location_entropy - std::log(2.0));

    // One-degree arc.
    const double arc = geo::haversine_m({0.0, 0.0}, {0.0, 1.0});
    ok = ok && std::abs(arc - 111'194.9) < 0.1;
    os << ", arc " << arc;

    // Severity bins at all five boundaries.
    using eval::Severity;
    ok = ok && eval::severity_class(0) == Severity::minimal && eval::severity_class(4) == Severity::minimal;
    ok = ok && eval::severity_class(5) == Severity::mild && eval::severity_class(9) == Severity::mild;
    ok = ok && eval::severity_class(10) == Severity::moderate && eval::severity_class(14) == Severity::moderate;
    ok = ok && eval::severity_class(15) == Severity::moderately_severe &&
         eval::severity_class(19) == Severity::moderately_severe;
    ok = ok && eval::severity_class(20) == Severity::severe && eval::severity_class(27) == Severity::severe;

    detail = os.str();
    return ok;
}

// ------------------------------------------------------- shared 48 x 8 cohort

struct CohortArtifacts {
    fs::path dir;
    double generate_s = 0.0;
    double verify_s = 0.0;
    synth::VerifyReport verify;
    std::map<SubjectId, std::vector<features::DailyFeatures>> daily;
    std::vector<PhqObservation> phq;
};

CohortArtifacts build_cohort() {
    CohortArtifacts a;
    a.dir = work_dir() / "cohort48";
    fs::remove_all(a.dir);
    fs::create_directories(a.dir);

    synth::SynthConfig config;
    config.n_subjects = 48;
    config.n_weeks = 8;
    config.seed = kCohortSeed;

    auto t0 = Clock::now();
    (void)synth::generate(config, a.dir);
    a.generate_s = seconds_since(t0);

    t0 = Clock::now();
    a.verify = synth::verify_pipeline(a.dir / "manifest.csv", a.dir / "truth_features.csv",
                                      geo::ClusterAlgorithm::kmeans);
    a.verify_s = seconds_since(t0);

    const auto manifest = ingest::read_manifest(a.dir / "manifest.csv");
    const auto cohort = ingest::load_cohort(manifest);
    a.daily = pipeline::extract_features(cohort, geo::ClusterAlgorithm::kmeans, {});
    a.phq = cohort.phq;
    return a;
}

// ---------------------------------------------------------------- criterion 4

bool pipeline_oracle(const CohortArtifacts& cohort, std::string& detail) {
    std::ostringstream os;
    os << cohort.verify.summary() << "; generate " << cohort.generate_s << " s, verify " << cohort.verify_s
       << " s";
    detail = os.str();
    return cohort.verify.clean() && cohort.verify.rows_checked == 48u * 56u &&
           (cohort.generate_s + cohort.verify_s) < 300.0;
}

// ---------------------------------------------------------------- criterion 5

bool subject_independence(const CohortArtifacts& cohort, std::string& detail) {
    std::vector<SubjectId> subjects;
    for (const auto& [id, rows] : cohort.daily) subjects.push_back(id);

    bool ok = true;
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
        const auto plan = dataset::subject_kfold(subjects, 10, seed);
        std::set<std::string> seen;
        std::size_t total = 0;
        for (const auto& fold : plan.folds) {
            for (const auto& s : fold) {
                if (!seen.insert(s.value).second) ok = false;
                ++total;
            }
        }
        ok = ok && total == subjects.size();
    }

    // Leakage: perturbing a held-out subject leaves training statistics and
    // the baseline bit-identical.
    auto samples = dataset::build_samples(cohort.daily, cohort.phq, dataset::Task::diagnosis);
    const auto plan = dataset::subject_kfold(subjects, 10, 1);
    const std::set<SubjectId> test_set(plan.folds[0].begin(), plan.folds[0].end());

    auto train_view = [&](const std::vector<dataset::Sample>& all) {
        std::vector<dataset::Sample> out;
        for (const auto& s : all) {
            if (!test_set.contains(s.subject)) out.push_back(s);
        }
        return out;
    };
    auto baseline_of = [&](const std::vector<dataset::Sample>& train) {
        std::vector<double> targets;
        for (const auto& s : train) targets.push_back(s.target);
        return eval::baseline_predict(targets);
    };

    const auto stats_before = dataset::compute_stats(train_view(samples));
    const double base_before = baseline_of(train_view(samples));
    for (auto& s : samples) {
        if (test_set.contains(s.subject)) {
            s.target = 27.0;
            for (auto& d : s.seq) d.values.fill(12345.0);
        }
    }
    const auto stats_after = dataset::compute_stats(train_view(samples));
    const double base_after = baseline_of(train_view(samples));

    for (int i = 0; i < features::kFeatureCount; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        ok = ok && stats_before.mean[idx] == stats_after.mean[idx] &&
             stats_before.stddev[idx] == stats_after.stddev[idx];
    }
    ok = ok && base_before == base_after;

    detail = ok ? "partitions exact over 3 seeds; training stats and baseline bit-identical under test perturbation"
                : "violation found";
    return ok;
}

// ------------------------------------------------------- criteria 6 and 7

model::TrainConfig acceptance_train_config() {
    model::TrainConfig config;
    config.epochs = 120;
    config.batch_size = 16;
    config.hidden = 4;
    config.lr = 0.001;
    config.prefix_augmentation = true;
    return config;
}

bool learning_signal(const CohortArtifacts& cohort, std::string& detail,
                     std::map<std::string, eval::EvalReport>& cache) {
    std::vector<SubjectId> subjects;
    for (const auto& [id, rows] : cohort.daily) subjects.push_back(id);
    const auto plan = dataset::subject_kfold(subjects, 10, kCohortSeed);

    eval::CvConfig cv;
    cv.train = acceptance_train_config();
    cv.train.seed = kCohortSeed;
    cv.model_label = "kmeans";

    std::ostringstream os;
    bool ok = true;
    std::map<dataset::Task, eval::EvalReport> reports;
    for (const auto task : {dataset::Task::diagnosis, dataset::Task::forecast}) {
        const auto samples = dataset::build_samples(cohort.daily, cohort.phq, task);
        const auto report = eval::evaluate_cv(samples, plan, cv);

        int folds_won = 0;
        for (const auto& f : report.folds) {
            if (f.rmse < f.baseline_rmse) ++folds_won;
        }
        const double acc_gap = report.mean_binary_acc() - report.baseline_mean_binary_acc();
        os << to_string(task) << ": rmse " << report.mean_rmse() << " vs base " << report.baseline_mean_rmse()
           << ", folds won " << folds_won << "/10, binary acc +" << acc_gap << "pt; ";
        ok = ok && report.folds.size() == 10 && folds_won >= 9 && acc_gap >= 5.0;
        reports.emplace(task, report);
    }

    const double rmse_d = reports.at(dataset::Task::diagnosis).mean_rmse();
    const double rmse_f = reports.at(dataset::Task::forecast).mean_rmse();
    const double gap = std::abs(rmse_f - rmse_d);
    os << "task gap " << gap << " (< " << 0.25 * rmse_d << ")";
    ok = ok && gap < 0.25 * rmse_d;

    cache.emplace("diagnosis", reports.at(dataset::Task::diagnosis));
    detail = os.str();
    return ok;
}

bool ablation_ordering(const CohortArtifacts& cohort, std::string& detail) {
    std::vector<SubjectId> subjects;
    for (const auto& [id, rows] : cohort.daily) subjects.push_back(id);
    const auto plan = dataset::subject_kfold(subjects, 10, kCohortSeed);
    const auto samples = dataset::build_samples(cohort.daily, cohort.phq, dataset::Task::diagnosis);

    eval::CvConfig cv;
    cv.train = acceptance_train_config();
    cv.train.seed = kCohortSeed;
    cv.model_label = "kmeans";

    const features::FeatureGroup sets[] = {features::FeatureGroup::calls, features::FeatureGroup::usage,
                                           features::FeatureGroup::activity, features::FeatureGroup::gps,
                                           features::FeatureGroup::all};
    const auto reports = eval::feature_ablation(samples, plan, sets, cv);

    std::map<features::FeatureGroup, double> rmse;
    std::ostringstream os;
    for (const auto& r : reports) {
        rmse[r.feature_set] = r.mean_rmse();
        os << features::to_string(r.feature_set) << ' ' << r.mean_rmse() << "; ";
    }
    const double best_single = std::min({rmse.at(features::FeatureGroup::calls),
                                         rmse.at(features::FeatureGroup::usage),
                                         rmse.at(features::FeatureGroup::activity),
                                         rmse.at(features::FeatureGroup::gps)});
    const bool activity_beats_calls =
        rmse.at(features::FeatureGroup::activity) < rmse.at(features::FeatureGroup::calls);
    const bool all_close = rmse.at(features::FeatureGroup::all) <= best_single * 1.02;
    os << (activity_beats_calls ? "activity<calls ok" : "activity>=calls BAD") << ", all vs best single "
       << rmse.at(features::FeatureGroup::all) / best_single;
    detail = os.str();
    return activity_beats_calls && all_close;
}

// ---------------------------------------------------------------- criterion 8

bool determinism(std::string& detail) {
    const fs::path root = work_dir() / "determinism";
    fs::remove_all(root);

    // Identical flags both times, including destinations; the second pass
    // overwrites the first and must reproduce every byte.
    auto run_all = [&]() {
        pipeline::RunConfig synth_cfg;
        synth_cfg.synth.n_subjects = 12;
        synth_cfg.synth.n_weeks = 2;
        synth_cfg.synth.seed = 5150;
        synth_cfg.out_dir = root / "cohort";
        pipeline::cmd_synth(synth_cfg);

        pipeline::RunConfig extract_cfg;
        extract_cfg.manifest_path = root / "cohort" / "manifest.csv";
        extract_cfg.out_dir = root / "x";
        extract_cfg.algorithm = geo::ClusterAlgorithm::time_based;
        pipeline::cmd_extract(extract_cfg);

        pipeline::RunConfig run_cfg;
        run_cfg.features_path = root / "x" / "features.csv";
        run_cfg.phq_path = root / "x" / "phq.csv";
        run_cfg.out_dir = root / "r";
        run_cfg.task = pipeline::TaskSelection::both;
        run_cfg.seed = 777;
        run_cfg.train.epochs = 8;
        run_cfg.emit_samples = true;
        pipeline::cmd_run(run_cfg);

        std::map<std::string, std::string> bytes;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) bytes[fs::relative(e.path(), root).string()] = slurp(e.path());
        }
        return bytes;
    };

    const auto first = run_all();
    const auto second = run_all();

    bool ok = first.size() == second.size() && first.size() > 10;
    std::ostringstream os;
    for (const auto& [rel, content] : first) {
        const auto it = second.find(rel);
        if (it == second.end() || it->second != content) {
            ok = false;
            os << "differs: " << rel << "; ";
        }
    }
    os << first.size() << " files byte-compared";
    detail = os.str();
    return ok;
}

// ---------------------------------------------------------------- criterion 9

bool overfit_sanity(std::string& detail) {
    Rng rng(314);
    dataset::Sample s;
    s.target = 2.0;
    for (int t = 0; t < 7; ++t) {
        features::DailyFeatures d;
        d.day_index = t + 1;
        d.missing.fill(false);
        for (int i = 0; i < features::kFeatureCount; ++i) {
            d.values[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
        }
        s.seq.push_back(d);
    }

    model::TrainConfig config;
    config.epochs = 2000;
    config.batch_size = 1;
    config.seed = 2718;
    config.prefix_augmentation = false;
    const std::vector<dataset::Sample> samples = {s};
    const auto result = model::train(samples, config);

    double best = result.epoch_loss.back();
    int at = static_cast<int>(result.epoch_loss.size());
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        if (result.epoch_loss[e] < 1e-3) {
            best = result.epoch_loss[e];
            at = static_cast<int>(e) + 1;
            break;
        }
    }
    std::ostringstream os;
    os << "loss " << best << " reached by epoch " << at;
    detail = os.str();
    return best < 1e-3;
}

} // namespace

int main() {
    std::cout << "acceptance suite\n";

    int failures = 0;
    auto report = [&](int index, const std::string& name, bool pass, const std::string& detail) {
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << index << ": " << name;
        if (!detail.empty()) std::cout << "  [" << detail << "]";
        std::cout << '\n';
        std::cout.flush();
        if (!pass) ++failures;
    };

    std::string detail;

    report(1, "analytic gradients match central finite differences", gradient_correctness(detail), detail);

    const bool c2a = time_based_oracle(detail);
    std::string d2 = "time-based: " + detail;
    const bool c2b = kmeans_oracle(detail);
    d2 += " | k-means: " + detail;
    const bool c2c = dbscan_oracle(detail);
    d2 += " | dbscan: " + detail;
    report(2, "clustering matches independent oracles", c2a && c2b && c2c, d2);

    report(3, "analytic feature cases", analytic_features(detail), detail);

    const auto cohort = build_cohort();
    report(4, "synthetic cohort verifies end to end", pipeline_oracle(cohort, detail), detail);

    report(5, "subject independence and leakage freedom", subject_independence(cohort, detail), detail);

    std::map<std::string, eval::EvalReport> shared_reports;
    report(6, "model beats the mean baseline on both tasks", learning_signal(cohort, detail, shared_reports),
           detail);

    report(7, "feature-set ablation ordering", ablation_ordering(cohort, detail), detail);

    report(8, "rerun determinism", determinism(detail), detail);

    report(9, "single-sample overfit sanity", overfit_sanity(detail), detail);

    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures)) << '\n';
    return failures;
}
