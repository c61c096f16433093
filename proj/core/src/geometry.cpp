#include "segsys/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

// Boost 1.74 snaps coordinates to an integer grid by default, which costs
// about 1e-8 relative area; exact floating-point predicates are enough here.
#define BOOST_GEOMETRY_NO_ROBUSTNESS
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "segsys/errors.hpp"

namespace segsys::geometry {

namespace bg = boost::geometry;

namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, /*ClockWise=*/false, /*Closed=*/true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

[[noreturn]] void invalid(const std::string& message) {
    throw Error(ErrorKind::invalid_geometry, "invalid_geometry", message);
}

void check_ring_shape(const Ring& ring, const char* which) {
    if (ring.size() < 4) invalid(std::string(which) + " ring needs at least 4 positions");
    if (!(ring.front() == ring.back())) invalid(std::string(which) + " ring is not closed");
    for (const GeoPoint& p : ring) validate(p);
}

BPolygon to_boost(const GeoPolygon& polygon) {
    BPolygon out;
    for (const GeoPoint& p : polygon.exterior) out.outer().emplace_back(p.lon, p.lat);
    for (const Ring& hole : polygon.holes) {
        out.inners().emplace_back();
        for (const GeoPoint& p : hole) out.inners().back().emplace_back(p.lon, p.lat);
    }
    return out;
}

GeoPolygon from_boost(const BPolygon& polygon) {
    GeoPolygon out;
    for (const BPoint& p : polygon.outer()) out.exterior.push_back({p.x(), p.y()});
    for (const auto& inner : polygon.inners()) {
        Ring hole;
        for (const BPoint& p : inner) hole.push_back({p.x(), p.y()});
        out.holes.push_back(std::move(hole));
    }
    return out;
}

MultiPolygon collect(BMulti multi) {
    MultiPolygon out;
    for (BPolygon& poly : multi) {
        bg::correct(poly);
        // Drop sliver holes as well as sliver parts.
        auto& inners = poly.inners();
        inners.erase(std::remove_if(inners.begin(), inners.end(),
                                    [](const auto& r) { return std::abs(bg::area(r)) < kSliverArea; }),
                     inners.end());
        if (bg::area(poly) < kSliverArea) continue;
        GeoPolygon result = from_boost(poly);
        validate(result);
        out.push_back(std::move(result));
    }
    return out;
}

BPolygon prepared(const GeoPolygon& polygon) {
    validate(polygon);
    BPolygon p = to_boost(polygon);
    bg::correct(p);
    return p;
}

// Point on segment [a, b] within a tolerance scaled by the segment length.
bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double dx = b.lon - a.lon;
    const double dy = b.lat - a.lat;
    const double cross = dx * (p.lat - a.lat) - dy * (p.lon - a.lon);
    const double len = std::hypot(dx, dy);
    if (std::abs(cross) > 1e-12 * std::max(1.0, len)) return false;
    const double eps = 1e-12;
    return p.lon >= std::min(a.lon, b.lon) - eps && p.lon <= std::max(a.lon, b.lon) + eps &&
           p.lat >= std::min(a.lat, b.lat) - eps && p.lat <= std::max(a.lat, b.lat) + eps;
}

bool on_boundary(const Ring& ring, const GeoPoint& p) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (on_segment(p, ring[i], ring[i + 1])) return true;
    }
    return false;
}

// Winding number; nonzero means strictly inside for a simple ring.
int winding(const Ring& ring, const GeoPoint& p) {
    int wn = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[i + 1];
        const double side = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
        if (a.lat <= p.lat) {
            if (b.lat > p.lat && side > 0) ++wn;
        } else if (b.lat <= p.lat && side < 0) {
            --wn;
        }
    }
    return wn;
}

}  // namespace

void validate(const GeoPoint& p) {
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) invalid("non-finite coordinate");
    if (p.lon < -180.0 || p.lon > 180.0) invalid("longitude out of range");
    if (p.lat < -90.0 || p.lat > 90.0) invalid("latitude out of range");
}

void validate(const GeoPolygon& polygon) {
    check_ring_shape(polygon.exterior, "exterior");
    for (const Ring& hole : polygon.holes) check_ring_shape(hole, "interior");

    BPolygon p = to_boost(polygon);
    bg::correct(p);  // orientation only; validity is judged below
    std::string reason;
    if (!bg::is_valid(p, reason)) invalid("polygon is not valid: " + reason);
    if (!(bg::area(p) > 0.0)) invalid("polygon has zero area");
}

GeoPolygon make_polygon(Ring exterior, std::vector<Ring> holes) {
    GeoPolygon polygon{std::move(exterior), std::move(holes)};
    return from_boost(prepared(polygon));
}

double area(const GeoPolygon& polygon) { return std::abs(bg::area(to_boost(polygon))); }

double area(const MultiPolygon& polygons) {
    double total = 0.0;
    for (const GeoPolygon& p : polygons) total += area(p);
    return total;
}

BoundingBox bounding_box(const GeoPolygon& polygon) {
    BoundingBox box{polygon.exterior.front().lon, polygon.exterior.front().lat, polygon.exterior.front().lon,
                    polygon.exterior.front().lat};
    for (const GeoPoint& p : polygon.exterior) {
        box.min_lon = std::min(box.min_lon, p.lon);
        box.max_lon = std::max(box.max_lon, p.lon);
        box.min_lat = std::min(box.min_lat, p.lat);
        box.max_lat = std::max(box.max_lat, p.lat);
    }
    return box;
}

MultiPolygon intersection(const GeoPolygon& a, const GeoPolygon& b) {
    BMulti out;
    bg::intersection(prepared(a), prepared(b), out);
    return collect(std::move(out));
}

MultiPolygon union_all(std::span<const GeoPolygon> polygons) {
    if (polygons.empty()) invalid("union needs at least one polygon");
    BMulti acc;
    acc.push_back(prepared(polygons.front()));
    for (std::size_t i = 1; i < polygons.size(); ++i) {
        BMulti next;
        bg::union_(acc, prepared(polygons[i]), next);
        acc = std::move(next);
    }
    return collect(std::move(acc));
}

MultiPolygon difference(const GeoPolygon& a, const GeoPolygon& b) {
    BMulti out;
    bg::difference(prepared(a), prepared(b), out);
    return collect(std::move(out));
}

bool contains(const GeoPolygon& polygon, const GeoPoint& p) {
    if (polygon.exterior.empty() || !bounding_box(polygon).contains(p)) return false;
    if (on_boundary(polygon.exterior, p)) return true;
    if (winding(polygon.exterior, p) == 0) return false;
    for (const Ring& hole : polygon.holes) {
        if (on_boundary(hole, p)) return true;
        if (winding(hole, p) != 0) return false;
    }
    return true;
}

bool equals(const GeoPoint& a, const GeoPoint& b) {
    return std::abs(a.lon - b.lon) <= kPointTolerance && std::abs(a.lat - b.lat) <= kPointTolerance;
}

}  // namespace segsys::geometry
