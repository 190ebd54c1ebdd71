#include "moodcast/dataset.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace moodcast::dataset {

const char* to_string(Task t) {
    return t == Task::diagnosis ? "diagnosis" : "forecast";
}

std::optional<Task> parse_task(const std::string& s) {
    if (s == "diagnosis") return Task::diagnosis;
    if (s == "forecast") return Task::forecast;
    return std::nullopt;
}

std::map<int, double> weekly_targets(std::span<const PhqObservation> subject_observations) {
    // candidate per week: (distance to week end, day) — exact end day wins,
    // then the earlier observation.
    std::map<int, std::pair<int, const PhqObservation*>> best;
    for (const auto& obs : subject_observations) {
        const int nearest_week = (obs.day_index + kDaysPerWeek / 2) / kDaysPerWeek;
        if (nearest_week < 1) continue;
        const int dist = std::abs(obs.day_index - nearest_week * kDaysPerWeek);
        if (dist > 1) continue; // only end-of-week +- 1 day observations label a week
        auto it = best.find(nearest_week);
        if (it == best.end() || dist < it->second.first ||
            (dist == it->second.first && obs.day_index < it->second.second->day_index)) {
            best[nearest_week] = {dist, &obs};
        }
    }
    std::map<int, double> out;
    for (const auto& [week, entry] : best) {
        out[week] = static_cast<double>(entry.second->score);
    }
    return out;
}

std::vector<Sample> build_samples(const std::map<SubjectId, std::vector<features::DailyFeatures>>& daily,
                                  std::span<const PhqObservation> phq, Task task) {
    std::map<SubjectId, std::vector<PhqObservation>> by_subject;
    for (const auto& obs : phq) by_subject[obs.subject].push_back(obs);

    std::vector<Sample> out;
    for (const auto& [subject, days] : daily) {
        const auto it = by_subject.find(subject);
        if (it == by_subject.end()) continue; // no targets at all -> zero samples
        const auto targets = weekly_targets(it->second);
        if (targets.empty()) continue;

        std::map<int, const features::DailyFeatures*> by_day;
        for (const auto& d : days) by_day[d.day_index] = &d;

        const int max_week = targets.rbegin()->first;
        for (int week = 1; week <= max_week; ++week) {
            const int target_week = task == Task::diagnosis ? week : week + 1;
            const auto t = targets.find(target_week);
            if (t == targets.end()) continue;

            Sample s;
            s.subject = subject;
            s.week_index = week;
            s.task = task;
            s.target = t->second;
            s.seq.reserve(kDaysPerWeek);
            for (int d = 0; d < kDaysPerWeek; ++d) {
                const int day = (week - 1) * kDaysPerWeek + d + 1;
                const auto row = by_day.find(day);
                if (row != by_day.end()) {
                    s.seq.push_back(*row->second);
                } else {
                    s.seq.push_back(features::placeholder_day(subject, day));
                }
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

NormStats compute_stats(std::span<const Sample> training_samples) {
    NormStats stats;
    std::array<double, features::kFeatureCount> sum{};
    std::array<double, features::kFeatureCount> sum_sq{};
    std::array<std::size_t, features::kFeatureCount> count{};

    for (const auto& s : training_samples) {
        for (const auto& day : s.seq) {
            for (int i = 0; i < features::kFeatureCount; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                if (day.missing[idx]) continue;
                sum[idx] += day.values[idx];
                sum_sq[idx] += day.values[idx] * day.values[idx];
                ++count[idx];
            }
        }
    }

    for (int i = 0; i < features::kFeatureCount; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (count[idx] == 0) {
            stats.mean[idx] = 0.0;
            stats.stddev[idx] = 0.0;
            stats.constant[idx] = true;
            continue;
        }
        const double n = static_cast<double>(count[idx]);
        stats.mean[idx] = sum[idx] / n;
        const double var = std::max(0.0, sum_sq[idx] / n - stats.mean[idx] * stats.mean[idx]);
        stats.stddev[idx] = std::sqrt(var);
        stats.constant[idx] = stats.stddev[idx] <= 0.0;
    }
    return stats;
}

Sample impute(Sample s, const NormStats& stats) {
    for (auto& day : s.seq) {
        for (int i = 0; i < features::kFeatureCount; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (day.missing[idx]) day.values[idx] = stats.mean[idx];
        }
    }
    return s;
}

Sample normalize(Sample s, const NormStats& stats) {
    for (auto& day : s.seq) {
        for (int i = 0; i < features::kFeatureCount; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (stats.constant[idx]) {
                day.values[idx] = 0.0;
            } else {
                day.values[idx] = (day.values[idx] - stats.mean[idx]) / stats.stddev[idx];
            }
        }
    }
    return s;
}

std::vector<Sample> prepare(std::span<const Sample> samples, const NormStats& stats) {
    std::vector<Sample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(normalize(impute(s, stats), stats));
    }
    return out;
}

std::vector<Sample> augment_prefixes(std::span<const Sample> full_samples) {
    std::vector<Sample> out;
    out.reserve(full_samples.size() * kDaysPerWeek);
    for (const auto& s : full_samples) {
        for (int len = 1; len <= static_cast<int>(s.seq.size()); ++len) {
            Sample prefix = s;
            prefix.seq.assign(s.seq.begin(), s.seq.begin() + len);
            prefix.augmented = len != static_cast<int>(s.seq.size());
            out.push_back(std::move(prefix));
        }
    }
    return out;
}

void restrict_to_group(Sample& s, features::FeatureGroup group) {
    if (group == features::FeatureGroup::all) return;
    const auto [first, last] = features::group_span(group);
    for (auto& day : s.seq) {
        for (int i = 0; i < features::kFeatureCount; ++i) {
            if (i < first || i >= last) day.values[static_cast<std::size_t>(i)] = 0.0;
        }
    }
}

FoldPlan subject_kfold(std::vector<SubjectId> subjects, int k, std::uint64_t seed) {
    if (k < 1) throw DataError("fold count must be positive");
    if (static_cast<int>(subjects.size()) < k) {
        throw DataError("fewer subjects (" + std::to_string(subjects.size()) + ") than folds (" +
                        std::to_string(k) + ")");
    }
    std::sort(subjects.begin(), subjects.end());
    Rng rng = Rng::derive(seed, {0x666f6c64ULL});
    rng.shuffle(subjects);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.folds.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        plan.folds[i % static_cast<std::size_t>(k)].push_back(subjects[i]);
    }
    return plan;
}

void write_folds_json(const std::filesystem::path& path, const FoldPlan& plan) {
    nlohmann::json j;
    j["k"] = plan.k;
    j["seed"] = plan.seed;
    auto folds = nlohmann::json::array();
    for (const auto& fold : plan.folds) {
        auto arr = nlohmann::json::array();
        for (const auto& s : fold) arr.push_back(s.value);
        folds.push_back(arr);
    }
    j["folds"] = folds;
    std::ofstream out(path);
    if (!out.is_open()) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

void write_samples_csv(const std::filesystem::path& path, std::span<const Sample> samples) {
    std::vector<std::string> columns = {"subject", "week", "day", "task", "target"};
    for (const char* name : features::kFeatureNames) columns.emplace_back(name);
    csv::TableWriter w(path, columns);
    std::vector<std::string> row;
    for (const auto& s : samples) {
        for (const auto& day : s.seq) {
            row.clear();
            row.push_back(s.subject.value);
            row.push_back(std::to_string(s.week_index));
            row.push_back(std::to_string(day.day_index));
            row.push_back(to_string(s.task));
            row.push_back(csv::format_double(s.target));
            for (int i = 0; i < features::kFeatureCount; ++i) {
                row.push_back(csv::format_double(day.values[static_cast<std::size_t>(i)]));
            }
            w.row(row);
        }
    }
}

} // namespace moodcast::dataset
