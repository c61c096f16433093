#include "segsys/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "segsys/errors.hpp"
#include "segsys/geojson.hpp"

namespace segsys::geometry {
namespace {

GeoPolygon rect(double x0, double y0, double x1, double y1) {
    return make_polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}});
}

double signed_area(const Ring& r) {
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) a += r[i].lon * r[i + 1].lat - r[i + 1].lon * r[i].lat;
    return a / 2.0;
}

void expect_invalid(const Ring& ring, std::vector<Ring> holes = {}) {
    try {
        (void)make_polygon(ring, std::move(holes));
        FAIL() << "expected invalid geometry";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_geometry);
        EXPECT_EQ(e.code(), "invalid_geometry");
    }
}

TEST(GeometryValidationTest, RejectsBrokenPolygons) {
    expect_invalid({{0, 0}, {1, 1}, {1, 0}, {0, 1}, {0, 0}});  // bow-tie
    expect_invalid({{0, 0}, {1, 0}, {1, 1}, {0, 1}});          // open ring
    expect_invalid({{0, 0}, {1, 0}, {0, 0}});                  // too short
    expect_invalid({{0, 0}, {1, 0}, {2, 0}, {0, 0}});          // zero area
    expect_invalid({{0, 0}, {200, 0}, {200, 1}, {0, 0}});      // lon range
    expect_invalid({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}, {{{2, 2}, {3, 2}, {3, 3}, {2, 2}}});  // hole outside
    EXPECT_THROW(validate(GeoPoint{0, 91}), Error);
    EXPECT_THROW(validate(GeoPoint{std::nan(""), 0}), Error);
}

TEST(GeometryValidationTest, OrientsRingsPerRightHandRule) {
    // Clockwise exterior and counter-clockwise hole on input.
    const GeoPolygon p = make_polygon({{0, 0}, {0, 4}, {4, 4}, {4, 0}, {0, 0}},
                                      {{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}}});
    EXPECT_GT(signed_area(p.exterior), 0.0);
    ASSERT_EQ(p.holes.size(), 1u);
    EXPECT_LT(signed_area(p.holes[0]), 0.0);
    EXPECT_DOUBLE_EQ(area(p), 15.0);
}

TEST(IntersectionTest, Examples) {
    const GeoPolygon a = rect(0, 0, 1, 1);
    EXPECT_NEAR(area(intersection(a, a)), area(a), 1e-12 * area(a));
    EXPECT_NEAR(area(intersection(a, rect(0.5, 0.5, 1.5, 1.5))), 0.25, 1e-12);
    EXPECT_TRUE(intersection(a, rect(2, 2, 3, 3)).empty());
}

TEST(IntersectionTest, Commutative) {
    const GeoPolygon a = make_polygon({{0, 0}, {3, 0}, {3, 2}, {1, 3}, {0, 0}});
    const GeoPolygon b = rect(1, 1, 4, 4);
    EXPECT_NEAR(area(intersection(a, b)), area(intersection(b, a)), 1e-12);
}

TEST(UnionTest, Examples) {
    const GeoPolygon a = rect(0, 0, 1, 1);
    const GeoPolygon single[] = {a};
    EXPECT_NEAR(area(union_all(single)), 1.0, 1e-12);

    const GeoPolygon abutting[] = {a, rect(1, 0, 2, 1)};
    const MultiPolygon u = union_all(abutting);
    ASSERT_EQ(u.size(), 1u);
    EXPECT_NEAR(area(u), 2.0, 1e-12);

    const GeoPolygon twice[] = {a, a};
    EXPECT_NEAR(area(union_all(twice)), 1.0, 1e-12);
    EXPECT_THROW(union_all({}), Error);
}

TEST(DifferenceTest, Examples) {
    const GeoPolygon a = rect(0, 0, 1, 1);
    EXPECT_TRUE(difference(a, a).empty());
    EXPECT_NEAR(area(difference(a, rect(5, 5, 6, 6))), 1.0, 1e-12);
    // Punching a hole.
    const MultiPolygon holed = difference(rect(0, 0, 4, 4), rect(1, 1, 2, 2));
    ASSERT_EQ(holed.size(), 1u);
    EXPECT_EQ(holed[0].holes.size(), 1u);
    EXPECT_NEAR(area(holed), 15.0, 1e-12);
}

oracle::Rect random_rect(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> corner(-1.0, 1.0);
    std::uniform_real_distribution<double> extent(0.01, 1.0);
    const double x = corner(rng);
    const double y = corner(rng);
    return {x, y, x + extent(rng), y + extent(rng)};
}

TEST(BooleanOpsTest, AreaIdentitiesOnRandomRectangles) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto ra = random_rect(rng);
        const auto rb = random_rect(rng);
        const GeoPolygon a = rect(ra.x0, ra.y0, ra.x1, ra.y1);
        const GeoPolygon b = rect(rb.x0, rb.y0, rb.x1, rb.y1);
        const GeoPolygon pair[] = {a, b};
        const double inter = area(intersection(a, b));
        const double uni = area(union_all(pair));
        const double diff = area(difference(a, b));
        const double scale = ra.area() + rb.area();
        EXPECT_NEAR(inter, oracle::overlap_area(ra, rb), 1e-9 * scale);
        EXPECT_NEAR(uni + inter, ra.area() + rb.area(), 1e-9 * scale);
        EXPECT_NEAR(diff, ra.area() - inter, 1e-9 * scale);
        EXPECT_LE(uni, ra.area() + rb.area() + 1e-12);
    }
}

TEST(ContainsTest, Examples) {
    const GeoPolygon unit = rect(0, 0, 1, 1);
    EXPECT_TRUE(contains(unit, {0.5, 0.5}));
    EXPECT_FALSE(contains(unit, {2, 2}));
    EXPECT_TRUE(contains(unit, {1.0, 0.3}));  // edge
    EXPECT_TRUE(contains(unit, {0.0, 0.0}));  // vertex
    EXPECT_FALSE(contains(unit, {1.0 + 1e-9, 0.3}));
}

TEST(ContainsTest, HolesExcludeInteriorButKeepBoundary) {
    const GeoPolygon holed = make_polygon({{0, 0}, {4, 0}, {4, 4}, {0, 4}, {0, 0}},
                                          {{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}}});
    EXPECT_FALSE(contains(holed, {1.5, 1.5}));
    EXPECT_TRUE(contains(holed, {1.0, 1.5}));
    EXPECT_TRUE(contains(holed, {3, 3}));
}

TEST(ContainsTest, MatchesRayCastOracleOnConvexPolygons) {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    int disagreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> angles(3 + trial % 8);
        for (double& a : angles) a = angle(rng);
        std::sort(angles.begin(), angles.end());
        angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
        Ring ring;
        std::vector<std::pair<double, double>> raw;
        for (double a : angles) {
            ring.push_back({std::cos(a), std::sin(a)});
            raw.emplace_back(std::cos(a), std::sin(a));
        }
        ring.push_back(ring.front());
        GeoPolygon poly;
        try {
            poly = make_polygon(ring);
        } catch (const Error&) {
            continue;  // degenerate draw
        }
        const GeoPoint p{coord(rng), coord(rng)};
        if (contains(poly, p) != oracle::ray_cast_inside(raw, p.lon, p.lat)) ++disagreements;
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(ContainsTest, IntersectionMembershipImpliesBoth) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-1.0, 2.0);
    const GeoPolygon a = make_polygon({{0, 0}, {1.5, 0}, {1.2, 1.4}, {0, 1}, {0, 0}});
    const GeoPolygon b = rect(0.4, -0.5, 1.8, 0.9);
    const MultiPolygon ab = intersection(a, b);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint p{coord(rng), coord(rng)};
        for (const GeoPolygon& part : ab) {
            if (contains(part, p)) {
                EXPECT_TRUE(contains(a, p));
                EXPECT_TRUE(contains(b, p));
            }
        }
    }
}

TEST(EqualsTest, Tolerance) {
    const GeoPoint a{12.5, 55.7};
    EXPECT_TRUE(equals(a, a));
    EXPECT_TRUE(equals(a, {12.5 + 1e-12, 55.7}));
    EXPECT_FALSE(equals(a, {12.5 + 1e-3, 55.7}));
}

TEST(GeoJsonTest, PolygonRoundTrip) {
    const GeoPolygon p = make_polygon({{12.5, 55.6}, {12.6, 55.6}, {12.6, 55.7}, {12.5, 55.7}, {12.5, 55.6}});
    const auto j = geojson::to_geometry(p);
    EXPECT_EQ(j["type"], "Polygon");
    const GeoPolygon back = geojson::parse_polygon(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back.exterior.size(), p.exterior.size());
    for (std::size_t i = 0; i < p.exterior.size(); ++i) {
        EXPECT_NEAR(back.exterior[i].lon, p.exterior[i].lon, 1e-12);
        EXPECT_NEAR(back.exterior[i].lat, p.exterior[i].lat, 1e-12);
    }
}

TEST(GeoJsonTest, ParsesPointAndRejectsGarbage) {
    const auto pt = geojson::parse_point(nlohmann::json::parse(R"({"type":"Point","coordinates":[1.5,2.5]})"));
    EXPECT_EQ(pt, (GeoPoint{1.5, 2.5}));
    EXPECT_THROW(geojson::parse_point(nlohmann::json::parse(R"({"type":"Point","coordinates":["a",1]})")), Error);
    EXPECT_THROW(geojson::parse_polygon(nlohmann::json::parse(R"({"type":"Point","coordinates":[1,1]})")), Error);
    const auto mp = geojson::parse_multipolygon(geojson::to_geometry(MultiPolygon{rect(0, 0, 1, 1), rect(2, 2, 3, 3)}));
    EXPECT_EQ(mp.size(), 2u);
}

}  // namespace
}  // namespace segsys::geometry
