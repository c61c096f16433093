#include "segsys/cluster_feature.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "segsys/errors.hpp"

namespace segsys::cftree {

namespace {

void check_dimension(std::size_t expected, std::size_t actual) {
    if (expected != actual) {
        contract_violation("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                           std::to_string(actual));
    }
}

double squared_norm(std::span<const double> v) {
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace

ClusterFeature::ClusterFeature(std::span<const double> point)
    : n_(1), ls_(point.begin(), point.end()), ss_(squared_norm(point)) {}

ClusterFeature::ClusterFeature(std::size_t n, std::vector<double> linear_sum, double square_sum)
    : n_(n), ls_(std::move(linear_sum)), ss_(square_sum) {
    require(n_ >= 1, "cluster feature needs n >= 1");
}

void ClusterFeature::absorb(std::span<const double> point) {
    check_dimension(ls_.size(), point.size());
    for (std::size_t i = 0; i < ls_.size(); ++i) ls_[i] += point[i];
    ss_ += squared_norm(point);
    ++n_;
}

void ClusterFeature::absorb(const ClusterFeature& other) {
    check_dimension(ls_.size(), other.ls_.size());
    for (std::size_t i = 0; i < ls_.size(); ++i) ls_[i] += other.ls_[i];
    ss_ += other.ss_;
    n_ += other.n_;
}

ClusterFeature cf_add_point(const ClusterFeature& cf, std::span<const double> x) {
    ClusterFeature out = cf;
    out.absorb(x);
    return out;
}

ClusterFeature cf_merge(const ClusterFeature& a, const ClusterFeature& b) {
    ClusterFeature out = a;
    out.absorb(b);
    return out;
}

std::vector<double> cf_centroid(const ClusterFeature& cf) {
    std::vector<double> c(cf.ls());
    const double n = static_cast<double>(cf.n());
    for (double& v : c) v /= n;
    return c;
}

double cf_radius_squared(const ClusterFeature& cf) {
    const double n = static_cast<double>(cf.n());
    const std::vector<double> c = cf_centroid(cf);
    const double c2 = squared_norm(c);
    const double c_dot_ls = std::inner_product(c.begin(), c.end(), cf.ls().begin(), 0.0);
    const double r2 = (n * c2 + cf.ss() - 2.0 * c_dot_ls) / n;
    if (r2 >= 0.0) return r2;
    if (r2 >= -kRadiusFloor) return 0.0;
    throw Error(ErrorKind::internal, "inconsistent_cluster_feature",
                "cluster feature has negative radius^2 " + std::to_string(r2));
}

double cf_radius(const ClusterFeature& cf) { return std::sqrt(cf_radius_squared(cf)); }

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    check_dimension(a.size(), b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double distance_point_to_cluster(std::span<const double> x, const ClusterFeature& cf) {
    check_dimension(cf.dimension(), x.size());
    const double n = static_cast<double>(cf.n());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - cf.ls()[i] / n;
        acc += d * d;
    }
    return std::sqrt(acc);
}

double distance_clusters(const ClusterFeature& a, const ClusterFeature& b) {
    check_dimension(a.dimension(), b.dimension());
    const double na = static_cast<double>(a.n());
    const double nb = static_cast<double>(b.n());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        const double d = a.ls()[i] / na - b.ls()[i] / nb;
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace segsys::cftree
