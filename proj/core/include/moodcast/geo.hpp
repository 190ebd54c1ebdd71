#pragma once

#include "moodcast/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace moodcast::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;

// Fixes moving faster than this are in transit and excluded from place
// clustering.
inline constexpr double kStationarySpeedMps = 1.4;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

enum class ClusterAlgorithm { time_based, kmeans, dbscan };

const char* to_string(ClusterAlgorithm a);
std::optional<ClusterAlgorithm> parse_cluster_algorithm(const std::string& s);

struct ClusterParams {
    double d_time_m = 40.0;    // time-based: join radius; merge radius is a third of it
    double t_time_s = 900.0;   // time-based: minimum stay duration
    double d_kmeans_m = 500.0; // adaptive k-means: maximum member-to-centroid distance
    double eps_m = 30.0;       // dbscan: neighbourhood radius
    int min_samples = 3;       // dbscan: core-point density, point itself included
    std::uint64_t seed = 1;    // k-means initialisation
    int max_lloyd_iterations = 100;
};

struct PlaceCluster {
    int id = 0;
    GeoPoint centroid;               // arithmetic mean of member lat/lon
    std::vector<GpsFix> member_fixes;
    double dwell_s = 0.0;            // total attributed dwell over the input span
};

struct SignificantPlaces {
    ClusterAlgorithm algorithm = ClusterAlgorithm::time_based;
    ClusterParams params;
    std::vector<PlaceCluster> places;
};

// Great-circle distance in metres on the 6371 km sphere.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

inline GeoPoint point_of(const GpsFix& f) { return {f.lat, f.lon}; }

// 80th percentile of accuracy over the whole cohort, linear interpolation
// between order statistics. Throws DataError on empty input.
double cohort_accuracy_cutoff(std::span<const GpsFix> all_fixes_all_subjects);

// Linear-interpolation percentile of arbitrary values, p in [0, 1].
double percentile(std::vector<double> values, double p);

struct Preprocessed {
    std::vector<GpsFix> all_valid;   // accuracy <= cutoff and speed >= 0
    std::vector<GpsFix> stationary;  // all_valid with speed <= 1.4 m/s
};

// Input order is preserved in both outputs.
Preprocessed preprocess(std::span<const GpsFix> fixes, double accuracy_cutoff_m);

// Incremental stay clustering along the time axis. Fixes must be time-sorted.
SignificantPlaces cluster_time_based(std::span<const GpsFix> stationary, const ClusterParams& params = {});

// Lloyd's iterations at k = 1, 2, ... until every member lies strictly within
// d_kmeans_m of its centroid. Farthest-point initialisation from a seeded
// starting fix; assignment distances are haversine, means are taken in raw
// lat/lon.
SignificantPlaces cluster_kmeans_adaptive(std::span<const GpsFix> stationary, const ClusterParams& params = {});

// Classic density clustering with the haversine metric. Noise fixes belong to
// no place.
SignificantPlaces cluster_dbscan(std::span<const GpsFix> stationary, const ClusterParams& params = {});

SignificantPlaces cluster(ClusterAlgorithm algorithm, std::span<const GpsFix> stationary,
                          const ClusterParams& params = {});

// Fast membership lookups against a fixed set of places. Membership follows
// the algorithm's own radius rule: time-based / k-means assign to the nearest
// centroid within the radius, dbscan to the place of the nearest member fix
// within eps. Build once per subject; queries are O(1) at city scale.
class PlaceIndex {
public:
    explicit PlaceIndex(const SignificantPlaces& places);

    // Place id the fix belongs to, or -1 when it belongs to none.
    int membership(const GpsFix& fix) const;

    std::size_t place_count() const { return n_places_; }

private:
    struct Cell {
        std::int64_t i;
        std::int64_t j;
        auto operator<=>(const Cell&) const = default;
    };

    struct FixKey {
        std::int64_t instant_ms;
        double lat;
        double lon;
        auto operator<=>(const FixKey&) const = default;
    };

    ClusterAlgorithm algorithm_;
    double radius_m_ = 0.0;
    std::size_t n_places_ = 0;
    std::vector<std::pair<GeoPoint, int>> centroids_;            // centroid-based algorithms
    std::map<Cell, std::vector<std::pair<GeoPoint, int>>> grid_; // dbscan member fixes
    std::map<FixKey, int> members_;                              // dbscan exact-member shortcut
    double lat_cell_ = 1.0;
    double lon_cell_ = 1.0;

    Cell cell_of(const GeoPoint& p) const;
};

// Convenience wrapper over PlaceIndex for one-off queries.
int place_membership(const GpsFix& fix, const SignificantPlaces& places);

// Dwell seconds per place id for one day's time-sorted fixes. An inter-fix
// interval counts toward a place iff both endpoints belong to that place;
// intervals crossing a local-day boundary are not attributed.
std::vector<double> dwell_by_place(std::span<const GpsFix> day_fixes, const PlaceIndex& index);
std::vector<double> dwell_by_place(std::span<const GpsFix> day_fixes, const SignificantPlaces& places);

// The place with the most attributed dwell between 0 am and 6 am local time
// over the whole study; nullopt when there is no night-time dwell at all.
std::optional<int> find_home(std::span<const GpsFix> stationary_all_days, const PlaceIndex& index);
std::optional<int> find_home(std::span<const GpsFix> stationary_all_days, const SignificantPlaces& places);

struct GpsFeatures {
    double location_variance = 0.0;           // ln(var(lat) + var(lon))
    bool variance_missing = true;              // < 2 fixes or zero spread
    double location_entropy = 0.0;             // nats over per-place dwell shares
    double normalized_location_entropy = 0.0;  // entropy / ln(places visited), 0 when <= 1 place
    double time_at_home = 0.0;                 // dwell share of the home place
    double total_distance_m = 0.0;             // sum over consecutive valid fixes
};

GpsFeatures gps_features(std::span<const GpsFix> day_all_valid, std::span<const GpsFix> day_stationary,
                         const PlaceIndex& index, std::optional<int> home_id);
GpsFeatures gps_features(std::span<const GpsFix> day_all_valid, std::span<const GpsFix> day_stationary,
                         const SignificantPlaces& places, std::optional<int> home_id);

void write_places_csv(const std::filesystem::path& path, const SignificantPlaces& places);

} // namespace moodcast::geo
