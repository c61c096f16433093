#include "segsys/geojson.hpp"

#include <string>

#include "segsys/errors.hpp"

namespace segsys::geojson {

using geometry::GeoPoint;
using geometry::GeoPolygon;
using geometry::MultiPolygon;
using geometry::Ring;

namespace {

[[noreturn]] void invalid(const std::string& message) {
    throw Error(ErrorKind::invalid_geometry, "invalid_geometry", message);
}

json position(const GeoPoint& p) { return json::array({p.lon, p.lat}); }

json ring_coordinates(const Ring& ring) {
    json out = json::array();
    for (const GeoPoint& p : ring) out.push_back(position(p));
    return out;
}

json polygon_coordinates(const GeoPolygon& polygon) {
    json rings = json::array();
    rings.push_back(ring_coordinates(polygon.exterior));
    for (const Ring& hole : polygon.holes) rings.push_back(ring_coordinates(hole));
    return rings;
}

GeoPoint parse_position(const json& j) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_number() || !j[1].is_number()) {
        invalid("position must be an array of at least two numbers");
    }
    GeoPoint p{j[0].get<double>(), j[1].get<double>()};
    geometry::validate(p);
    return p;
}

Ring parse_ring(const json& j) {
    if (!j.is_array()) invalid("linear ring must be an array of positions");
    Ring ring;
    ring.reserve(j.size());
    for (const json& pos : j) ring.push_back(parse_position(pos));
    return ring;
}

GeoPolygon parse_polygon_coordinates(const json& j) {
    if (!j.is_array() || j.empty()) invalid("polygon needs at least one ring");
    Ring exterior = parse_ring(j[0]);
    std::vector<Ring> holes;
    for (std::size_t i = 1; i < j.size(); ++i) holes.push_back(parse_ring(j[i]));
    return geometry::make_polygon(std::move(exterior), std::move(holes));
}

const json& coordinates_of(const json& geometry, const char* type) {
    if (!geometry.is_object() || !geometry.contains("type") || geometry["type"] != type) {
        invalid(std::string("expected a GeoJSON ") + type);
    }
    if (!geometry.contains("coordinates")) invalid("geometry has no coordinates");
    return geometry["coordinates"];
}

}  // namespace

json to_geometry(const GeoPoint& p) { return {{"type", "Point"}, {"coordinates", position(p)}}; }

json to_geometry(const GeoPolygon& polygon) {
    return {{"type", "Polygon"}, {"coordinates", polygon_coordinates(polygon)}};
}

json to_geometry(const MultiPolygon& polygons) {
    json coords = json::array();
    for (const GeoPolygon& p : polygons) coords.push_back(polygon_coordinates(p));
    return {{"type", "MultiPolygon"}, {"coordinates", std::move(coords)}};
}

GeoPoint parse_point(const json& geometry) { return parse_position(coordinates_of(geometry, "Point")); }

GeoPolygon parse_polygon(const json& geometry) {
    return parse_polygon_coordinates(coordinates_of(geometry, "Polygon"));
}

MultiPolygon parse_multipolygon(const json& geometry) {
    if (geometry.is_object() && geometry.value("type", "") == "Polygon") return {parse_polygon(geometry)};
    const json& coords = coordinates_of(geometry, "MultiPolygon");
    if (!coords.is_array()) invalid("MultiPolygon coordinates must be an array");
    MultiPolygon out;
    for (const json& poly : coords) out.push_back(parse_polygon_coordinates(poly));
    return out;
}

json feature(json geometry, json properties, const json& id) {
    return {{"type", "Feature"}, {"id", id}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

json feature_collection(json features) {
    return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace segsys::geojson
