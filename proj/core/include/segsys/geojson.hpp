#pragma once

#include <nlohmann/json.hpp>

#include "segsys/geometry.hpp"

namespace segsys::geojson {

using nlohmann::json;

// Geometry objects (RFC 7946 section 3.1). Output rings follow the
// right-hand rule: exterior counter-clockwise, holes clockwise.
json to_geometry(const geometry::GeoPoint& p);
json to_geometry(const geometry::GeoPolygon& polygon);
json to_geometry(const geometry::MultiPolygon& polygons);

// Parsing throws Error{invalid_geometry} for structural problems and for
// geometries that break the polygon invariants.
geometry::GeoPoint parse_point(const json& geometry);
geometry::GeoPolygon parse_polygon(const json& geometry);
// Accepts Polygon or MultiPolygon.
geometry::MultiPolygon parse_multipolygon(const json& geometry);

json feature(json geometry, json properties, const json& id);
json feature_collection(json features);

}  // namespace segsys::geojson
