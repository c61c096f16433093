#pragma once

#include <span>
#include <vector>

namespace segsys::geometry {

// WGS84 lon/lat treated as planar Cartesian coordinates.
struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

using Ring = std::vector<GeoPoint>;

// A closed exterior ring (first == last, >= 4 points) plus optional holes.
// Instances produced by this module are valid and oriented per RFC 7946:
// exterior counter-clockwise, holes clockwise.
struct GeoPolygon {
    Ring exterior;
    std::vector<Ring> holes;
};

using MultiPolygon = std::vector<GeoPolygon>;

struct BoundingBox {
    double min_lon, min_lat, max_lon, max_lat;

    bool contains(const GeoPoint& p) const {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
};

// Parts smaller than this are dropped from boolean-operation results.
inline constexpr double kSliverArea = 1e-12;
inline constexpr double kPointTolerance = 1e-9;

// Throw Error{invalid_geometry} when the input breaks the type invariants.
void validate(const GeoPoint& p);
void validate(const GeoPolygon& polygon);

// Validates and returns the polygon with RFC 7946 ring orientation.
GeoPolygon make_polygon(Ring exterior, std::vector<Ring> holes = {});

double area(const GeoPolygon& polygon);
double area(const MultiPolygon& polygons);
BoundingBox bounding_box(const GeoPolygon& polygon);

// Shared region of a and b; empty when they are disjoint.
MultiPolygon intersection(const GeoPolygon& a, const GeoPolygon& b);
// Region covered by any input polygon.
MultiPolygon union_all(std::span<const GeoPolygon> polygons);
// Region of a not covered by b.
MultiPolygon difference(const GeoPolygon& a, const GeoPolygon& b);

// Boundary points (exterior or hole edges) count as contained.
bool contains(const GeoPolygon& polygon, const GeoPoint& p);

// Coordinates equal within kPointTolerance degrees.
bool equals(const GeoPoint& a, const GeoPoint& b);

}  // namespace segsys::geometry
