#include "moodcast/geo.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"
#include "moodcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace moodcast::geo {

const char* to_string(ClusterAlgorithm a) {
    switch (a) {
    case ClusterAlgorithm::time_based: return "time_based";
    case ClusterAlgorithm::kmeans: return "kmeans";
    case ClusterAlgorithm::dbscan: return "dbscan";
    }
    return "?";
}

std::optional<ClusterAlgorithm> parse_cluster_algorithm(const std::string& s) {
    if (s == "time_based") return ClusterAlgorithm::time_based;
    if (s == "kmeans") return ClusterAlgorithm::kmeans;
    if (s == "dbscan") return ClusterAlgorithm::dbscan;
    return std::nullopt;
}

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

} // namespace

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = rad(a.lat);
    const double phi2 = rad(b.lat);
    const double dphi = rad(b.lat - a.lat);
    const double dlam = rad(b.lon - a.lon);
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("percentile of empty set");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values.front();
    const double rank = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double cohort_accuracy_cutoff(std::span<const GpsFix> all_fixes_all_subjects) {
    if (all_fixes_all_subjects.empty()) throw DataError("accuracy cutoff over empty cohort");
    std::vector<double> acc;
    acc.reserve(all_fixes_all_subjects.size());
    for (const auto& f : all_fixes_all_subjects) acc.push_back(f.accuracy_m);
    return percentile(std::move(acc), 0.80);
}

Preprocessed preprocess(std::span<const GpsFix> fixes, double accuracy_cutoff_m) {
    Preprocessed out;
    for (const auto& f : fixes) {
        if (f.accuracy_m > accuracy_cutoff_m) continue;
        if (f.speed_mps < 0.0) continue;
        out.all_valid.push_back(f);
        if (f.speed_mps <= kStationarySpeedMps) out.stationary.push_back(f);
    }
    return out;
}

namespace {

GeoPoint mean_point(std::span<const GpsFix> fixes) {
    double lat = 0.0;
    double lon = 0.0;
    for (const auto& f : fixes) {
        lat += f.lat;
        lon += f.lon;
    }
    const auto n = static_cast<double>(fixes.size());
    return {lat / n, lon / n};
}

// Attributed dwell per place over the whole input, split by local day so no
// interval crosses midnight.
void fill_dwell(std::span<const GpsFix> fixes, SignificantPlaces& sp) {
    for (auto& p : sp.places) p.dwell_s = 0.0;
    if (sp.places.empty()) return;
    const PlaceIndex index(sp);
    const auto dwell = dwell_by_place(fixes, index);
    for (std::size_t k = 0; k < dwell.size(); ++k) sp.places[k].dwell_s += dwell[k];
}

struct Run {
    std::vector<GpsFix> members;
    double lat_sum = 0.0;
    double lon_sum = 0.0;

    GeoPoint centroid() const {
        const auto n = static_cast<double>(members.size());
        return {lat_sum / n, lon_sum / n};
    }
    void add(const GpsFix& f) {
        members.push_back(f);
        lat_sum += f.lat;
        lon_sum += f.lon;
    }
    double span_s() const {
        return static_cast<double>(members.back().t.instant_ms - members.front().t.instant_ms) / 1000.0;
    }
};

} // namespace

SignificantPlaces cluster_time_based(std::span<const GpsFix> stationary, const ClusterParams& params) {
    SignificantPlaces out;
    out.algorithm = ClusterAlgorithm::time_based;
    out.params = params;

    const double merge_radius = params.d_time_m / 3.0;

    auto close_run = [&](Run& run) {
        if (run.members.empty()) return;
        if (run.span_s() >= params.t_time_s) {
            const GeoPoint c = run.centroid();
            // Merge into the nearest already-significant place within a third
            // of the join radius, otherwise open a new place.
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (const auto& p : out.places) {
                const double d = haversine_m(c, p.centroid);
                if (d <= merge_radius && d < best_d) {
                    best = p.id;
                    best_d = d;
                }
            }
            if (best >= 0) {
                auto& p = out.places[static_cast<std::size_t>(best)];
                p.member_fixes.insert(p.member_fixes.end(), run.members.begin(), run.members.end());
                p.centroid = mean_point(p.member_fixes);
            } else {
                PlaceCluster p;
                p.id = static_cast<int>(out.places.size());
                p.centroid = c;
                p.member_fixes = std::move(run.members);
                out.places.push_back(std::move(p));
            }
        }
        run = Run{};
    };

    Run run;
    for (const auto& f : stationary) {
        if (run.members.empty()) {
            run.add(f);
        } else if (haversine_m(point_of(f), run.centroid()) <= params.d_time_m) {
            run.add(f);
        } else {
            close_run(run);
            run.add(f);
        }
    }
    close_run(run);

    fill_dwell(stationary, out);
    return out;
}

namespace {

// Farthest-point initialisation: first centre is a seeded pick, each next
// centre is the fix farthest from its nearest chosen centre.
std::vector<GeoPoint> init_centers(std::span<const GpsFix> fixes, int k, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, {0x6b6d65616e73ULL});
    std::vector<GeoPoint> centers;
    centers.reserve(static_cast<std::size_t>(k));
    const auto first = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(fixes.size()) - 1));
    centers.push_back(point_of(fixes[first]));
    std::vector<double> nearest(fixes.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        std::size_t far_idx = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            nearest[i] = std::min(nearest[i], haversine_m(point_of(fixes[i]), centers.back()));
            if (nearest[i] > far_d) {
                far_d = nearest[i];
                far_idx = i;
            }
        }
        centers.push_back(point_of(fixes[far_idx]));
    }
    return centers;
}

struct LloydResult {
    std::vector<GeoPoint> centers;
    std::vector<int> assign;
    double max_radius = 0.0;
};

LloydResult lloyd(std::span<const GpsFix> fixes, int k, const ClusterParams& params) {
    LloydResult r;
    r.centers = init_centers(fixes, k, params.seed);
    r.assign.assign(fixes.size(), -1);

    for (int iter = 0; iter < params.max_lloyd_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = haversine_m(point_of(fixes[i]), r.centers[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (r.assign[i] != best) {
                r.assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<double> lat(static_cast<std::size_t>(k), 0.0);
        std::vector<double> lon(static_cast<std::size_t>(k), 0.0);
        std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            const auto c = static_cast<std::size_t>(r.assign[i]);
            lat[c] += fixes[i].lat;
            lon[c] += fixes[i].lon;
            ++count[c];
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (count[c] == 0) {
                // Re-seed an emptied cluster at the fix farthest from its
                // current centre.
                std::size_t far_idx = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < fixes.size(); ++i) {
                    const double d =
                        haversine_m(point_of(fixes[i]), r.centers[static_cast<std::size_t>(r.assign[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far_idx = i;
                    }
                }
                r.centers[c] = point_of(fixes[far_idx]);
            } else {
                r.centers[c] = {lat[c] / static_cast<double>(count[c]), lon[c] / static_cast<double>(count[c])};
            }
        }
    }

    r.max_radius = 0.0;
    for (std::size_t i = 0; i < fixes.size(); ++i) {
        r.max_radius = std::max(
            r.max_radius, haversine_m(point_of(fixes[i]), r.centers[static_cast<std::size_t>(r.assign[i])]));
    }
    return r;
}

} // namespace

SignificantPlaces cluster_kmeans_adaptive(std::span<const GpsFix> stationary, const ClusterParams& params) {
    SignificantPlaces out;
    out.algorithm = ClusterAlgorithm::kmeans;
    out.params = params;
    if (stationary.empty()) return out;

    const int n = static_cast<int>(stationary.size());
    for (int k = 1; k <= n; ++k) {
        LloydResult r = lloyd(stationary, k, params);
        if (r.max_radius < params.d_kmeans_m || k == n) {
            out.places.resize(static_cast<std::size_t>(k));
            for (int c = 0; c < k; ++c) {
                out.places[static_cast<std::size_t>(c)].id = c;
            }
            for (std::size_t i = 0; i < stationary.size(); ++i) {
                out.places[static_cast<std::size_t>(r.assign[i])].member_fixes.push_back(stationary[i]);
            }
            // Drop clusters that ended up empty (k == n fallback only).
            std::erase_if(out.places, [](const PlaceCluster& p) { return p.member_fixes.empty(); });
            for (std::size_t c = 0; c < out.places.size(); ++c) {
                out.places[c].id = static_cast<int>(c);
                out.places[c].centroid = mean_point(out.places[c].member_fixes);
            }
            break;
        }
    }

    fill_dwell(stationary, out);
    return out;
}

namespace {

// Grid over lat/lon for eps-neighbourhood queries; cells are sized to eps so
// a 5x5 window is a superset of the true neighbourhood at city scale.
class NeighborGrid {
public:
    NeighborGrid(std::span<const GpsFix> fixes, double eps_m) : fixes_(fixes), eps_m_(eps_m) {
        double mean_lat = 0.0;
        for (const auto& f : fixes) mean_lat += f.lat;
        mean_lat /= static_cast<double>(fixes.empty() ? 1 : fixes.size());
        lat_cell_ = eps_m / 111'320.0;
        const double coslat = std::max(0.01, std::cos(rad(mean_lat)));
        lon_cell_ = eps_m / (111'320.0 * coslat);
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            grid_[key(fixes[i])].push_back(i);
        }
    }

    // Indices within eps of fix i (including i itself), ascending.
    std::vector<std::size_t> neighbors(std::size_t i) const {
        std::vector<std::size_t> out;
        const auto [ci, cj] = key(fixes_[i]);
        for (std::int64_t di = -2; di <= 2; ++di) {
            for (std::int64_t dj = -2; dj <= 2; ++dj) {
                const auto it = grid_.find({ci + di, cj + dj});
                if (it == grid_.end()) continue;
                for (std::size_t j : it->second) {
                    if (haversine_m(point_of(fixes_[i]), point_of(fixes_[j])) <= eps_m_) {
                        out.push_back(j);
                    }
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::pair<std::int64_t, std::int64_t> key(const GpsFix& f) const {
        return {static_cast<std::int64_t>(std::floor(f.lat / lat_cell_)),
                static_cast<std::int64_t>(std::floor(f.lon / lon_cell_))};
    }

    std::span<const GpsFix> fixes_;
    double eps_m_;
    double lat_cell_ = 1.0;
    double lon_cell_ = 1.0;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> grid_;
};

} // namespace

SignificantPlaces cluster_dbscan(std::span<const GpsFix> stationary, const ClusterParams& params) {
    SignificantPlaces out;
    out.algorithm = ClusterAlgorithm::dbscan;
    out.params = params;
    if (stationary.empty()) return out;

    const NeighborGrid grid(stationary, params.eps_m);
    constexpr int kUnvisited = -2;
    constexpr int kNoise = -1;
    std::vector<int> label(stationary.size(), kUnvisited);
    int next_cluster = 0;

    for (std::size_t i = 0; i < stationary.size(); ++i) {
        if (label[i] != kUnvisited) continue;
        auto seeds = grid.neighbors(i);
        if (static_cast<int>(seeds.size()) < params.min_samples) {
            label[i] = kNoise;
            continue;
        }
        const int cluster = next_cluster++;
        label[i] = cluster;
        // Standard expansion: grow from every core point reachable from i.
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const std::size_t j = seeds[s];
            if (label[j] == kNoise) label[j] = cluster; // border point
            if (label[j] != kUnvisited) continue;
            label[j] = cluster;
            auto nb = grid.neighbors(j);
            if (static_cast<int>(nb.size()) >= params.min_samples) {
                seeds.insert(seeds.end(), nb.begin(), nb.end());
            }
        }
    }

    out.places.resize(static_cast<std::size_t>(next_cluster));
    for (int c = 0; c < next_cluster; ++c) out.places[static_cast<std::size_t>(c)].id = c;
    for (std::size_t i = 0; i < stationary.size(); ++i) {
        if (label[i] >= 0) {
            out.places[static_cast<std::size_t>(label[i])].member_fixes.push_back(stationary[i]);
        }
    }
    for (auto& p : out.places) p.centroid = mean_point(p.member_fixes);

    fill_dwell(stationary, out);
    return out;
}

SignificantPlaces cluster(ClusterAlgorithm algorithm, std::span<const GpsFix> stationary,
                          const ClusterParams& params) {
    switch (algorithm) {
    case ClusterAlgorithm::time_based: return cluster_time_based(stationary, params);
    case ClusterAlgorithm::kmeans: return cluster_kmeans_adaptive(stationary, params);
    case ClusterAlgorithm::dbscan: return cluster_dbscan(stationary, params);
    }
    throw DataError("unknown clustering algorithm");
}

PlaceIndex::PlaceIndex(const SignificantPlaces& places)
    : algorithm_(places.algorithm), n_places_(places.places.size()) {
    if (algorithm_ == ClusterAlgorithm::dbscan) {
        radius_m_ = places.params.eps_m;
        double mean_lat = 0.0;
        std::size_t n = 0;
        for (const auto& p : places.places) {
            for (const auto& m : p.member_fixes) {
                mean_lat += m.lat;
                ++n;
            }
        }
        mean_lat /= static_cast<double>(n == 0 ? 1 : n);
        lat_cell_ = radius_m_ / 111'320.0;
        lon_cell_ = radius_m_ / (111'320.0 * std::max(0.01, std::cos(rad(mean_lat))));
        for (const auto& p : places.places) {
            for (const auto& m : p.member_fixes) {
                grid_[cell_of(point_of(m))].push_back({point_of(m), p.id});
                members_.emplace(FixKey{m.t.instant_ms, m.lat, m.lon}, p.id);
            }
        }
    } else {
        radius_m_ = algorithm_ == ClusterAlgorithm::time_based ? places.params.d_time_m : places.params.d_kmeans_m;
        for (const auto& p : places.places) {
            centroids_.push_back({p.centroid, p.id});
        }
    }
}

PlaceIndex::Cell PlaceIndex::cell_of(const GeoPoint& p) const {
    return {static_cast<std::int64_t>(std::floor(p.lat / lat_cell_)),
            static_cast<std::int64_t>(std::floor(p.lon / lon_cell_))};
}

int PlaceIndex::membership(const GpsFix& fix) const {
    const GeoPoint p = point_of(fix);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    if (algorithm_ == ClusterAlgorithm::dbscan) {
        // A clustered fix is its own nearest member at distance zero.
        const auto exact = members_.find(FixKey{fix.t.instant_ms, fix.lat, fix.lon});
        if (exact != members_.end()) return exact->second;
        const Cell c = cell_of(p);
        for (std::int64_t di = -2; di <= 2; ++di) {
            for (std::int64_t dj = -2; dj <= 2; ++dj) {
                const auto it = grid_.find({c.i + di, c.j + dj});
                if (it == grid_.end()) continue;
                for (const auto& [point, id] : it->second) {
                    const double d = haversine_m(p, point);
                    if (d <= radius_m_ && (d < best_d || (d == best_d && id < best))) {
                        best = id;
                        best_d = d;
                    }
                }
            }
        }
        return best;
    }
    for (const auto& [centroid, id] : centroids_) {
        const double d = haversine_m(p, centroid);
        if (d <= radius_m_ && d < best_d) {
            best = id;
            best_d = d;
        }
    }
    return best;
}

int place_membership(const GpsFix& fix, const SignificantPlaces& places) {
    return PlaceIndex(places).membership(fix);
}

std::vector<double> dwell_by_place(std::span<const GpsFix> day_fixes, const PlaceIndex& index) {
    std::vector<double> dwell(index.place_count(), 0.0);
    if (day_fixes.size() < 2) return dwell;
    int prev = index.membership(day_fixes[0]);
    for (std::size_t i = 1; i < day_fixes.size(); ++i) {
        const int cur = index.membership(day_fixes[i]);
        if (prev >= 0 && prev == cur &&
            local_day_number(day_fixes[i - 1].t) == local_day_number(day_fixes[i].t)) {
            dwell[static_cast<std::size_t>(cur)] +=
                static_cast<double>(day_fixes[i].t.instant_ms - day_fixes[i - 1].t.instant_ms) / 1000.0;
        }
        prev = cur;
    }
    return dwell;
}

std::vector<double> dwell_by_place(std::span<const GpsFix> day_fixes, const SignificantPlaces& places) {
    return dwell_by_place(day_fixes, PlaceIndex(places));
}

std::optional<int> find_home(std::span<const GpsFix> stationary_all_days, const PlaceIndex& index) {
    if (index.place_count() == 0 || stationary_all_days.size() < 2) return std::nullopt;

    std::vector<double> night_dwell(index.place_count(), 0.0);
    int prev = index.membership(stationary_all_days[0]);
    for (std::size_t i = 1; i < stationary_all_days.size(); ++i) {
        const auto& a = stationary_all_days[i - 1];
        const auto& b = stationary_all_days[i];
        const int cur = index.membership(b);
        if (prev >= 0 && prev == cur && local_day_number(a.t) == local_day_number(b.t)) {
            // Overlap of [a, b] with the 0-6 am local window of that day.
            const std::int64_t day_start = local_day_number(a.t) * kMsPerDay;
            const std::int64_t night_end = day_start + 6 * kMsPerHour;
            const std::int64_t lo = std::max(a.t.local_ms(), day_start);
            const std::int64_t hi = std::min(b.t.local_ms(), night_end);
            if (hi > lo) {
                night_dwell[static_cast<std::size_t>(cur)] += static_cast<double>(hi - lo) / 1000.0;
            }
        }
        prev = cur;
    }

    int best = -1;
    double best_dwell = 0.0;
    for (std::size_t i = 0; i < night_dwell.size(); ++i) {
        if (night_dwell[i] > best_dwell) {
            best_dwell = night_dwell[i];
            best = static_cast<int>(i);
        }
    }
    if (best < 0) return std::nullopt;
    return best;
}

std::optional<int> find_home(std::span<const GpsFix> stationary_all_days, const SignificantPlaces& places) {
    return find_home(stationary_all_days, PlaceIndex(places));
}

GpsFeatures gps_features(std::span<const GpsFix> day_all_valid, std::span<const GpsFix> day_stationary,
                         const PlaceIndex& index, std::optional<int> home_id) {
    GpsFeatures out;

    if (day_all_valid.size() >= 2) {
        double lat_mean = 0.0;
        double lon_mean = 0.0;
        for (const auto& f : day_all_valid) {
            lat_mean += f.lat;
            lon_mean += f.lon;
        }
        const auto n = static_cast<double>(day_all_valid.size());
        lat_mean /= n;
        lon_mean /= n;
        double lat_var = 0.0;
        double lon_var = 0.0;
        for (const auto& f : day_all_valid) {
            lat_var += (f.lat - lat_mean) * (f.lat - lat_mean);
            lon_var += (f.lon - lon_mean) * (f.lon - lon_mean);
        }
        lat_var /= n;
        lon_var /= n;
        if (lat_var + lon_var > 0.0) {
            out.location_variance = std::log(lat_var + lon_var);
            out.variance_missing = false;
        }
    }

    const auto dwell = dwell_by_place(day_stationary, index);
    double total_dwell = 0.0;
    int visited = 0;
    for (double d : dwell) {
        total_dwell += d;
        if (d > 0.0) ++visited;
    }
    if (total_dwell > 0.0) {
        double entropy = 0.0;
        for (double d : dwell) {
            if (d <= 0.0) continue;
            const double p = d / total_dwell;
            entropy -= p * std::log(p);
        }
        out.location_entropy = entropy;
        out.normalized_location_entropy = visited > 1 ? entropy / std::log(static_cast<double>(visited)) : 0.0;
        if (home_id && *home_id >= 0 && static_cast<std::size_t>(*home_id) < dwell.size()) {
            out.time_at_home = dwell[static_cast<std::size_t>(*home_id)] / total_dwell;
        }
    }

    for (std::size_t i = 1; i < day_all_valid.size(); ++i) {
        out.total_distance_m += haversine_m(point_of(day_all_valid[i - 1]), point_of(day_all_valid[i]));
    }
    return out;
}

GpsFeatures gps_features(std::span<const GpsFix> day_all_valid, std::span<const GpsFix> day_stationary,
                         const SignificantPlaces& places, std::optional<int> home_id) {
    return gps_features(day_all_valid, day_stationary, PlaceIndex(places), home_id);
}

void write_places_csv(const std::filesystem::path& path, const SignificantPlaces& places) {
    csv::TableWriter w(path, {"place_id", "lat", "lon", "dwell_s", "algorithm"});
    for (const auto& p : places.places) {
        w.row({std::to_string(p.id), csv::format_double(p.centroid.lat), csv::format_double(p.centroid.lon),
               csv::format_double(p.dwell_s), to_string(places.algorithm)});
    }
}

} // namespace moodcast::geo
