#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace segsys::cftree {

// Radius^2 values in [-kRadiusFloor, 0] are cancellation noise and clamp to 0.
// Anything more negative means the CF is internally inconsistent.
inline constexpr double kRadiusFloor = 1e-9;

// Condensed summary (N, LS, SS) of a set of points. SS is the scalar sum of
// squared coordinates over all absorbed points.
class ClusterFeature {
public:
    // Singleton CF for one point.
    explicit ClusterFeature(std::span<const double> point);
    // Throws a contract violation when n == 0.
    ClusterFeature(std::size_t n, std::vector<double> linear_sum, double square_sum);

    std::size_t n() const noexcept { return n_; }
    const std::vector<double>& ls() const noexcept { return ls_; }
    double ss() const noexcept { return ss_; }
    std::size_t dimension() const noexcept { return ls_.size(); }

    // In-place variants used by the tree; the free functions below are the
    // value-returning forms.
    void absorb(std::span<const double> point);
    void absorb(const ClusterFeature& other);

    friend bool operator==(const ClusterFeature&, const ClusterFeature&) = default;

private:
    std::size_t n_;
    std::vector<double> ls_;
    double ss_;
};

ClusterFeature cf_add_point(const ClusterFeature& cf, std::span<const double> x);
ClusterFeature cf_merge(const ClusterFeature& a, const ClusterFeature& b);

// C = LS / N
std::vector<double> cf_centroid(const ClusterFeature& cf);

// R = sqrt((N*C^2 + SS - 2*C*LS) / N), clamped at zero below the floor.
double cf_radius(const ClusterFeature& cf);
double cf_radius_squared(const ClusterFeature& cf);

double distance_point_to_cluster(std::span<const double> x, const ClusterFeature& cf);
double distance_clusters(const ClusterFeature& a, const ClusterFeature& b);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace segsys::cftree
