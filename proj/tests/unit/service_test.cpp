#include "segsys/service.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <httplib.h>

#include "segsys/synth.hpp"

namespace segsys::service {
namespace {

using nlohmann::json;

struct Response {
    int status = 0;
    json body;
    std::string raw;
};

json square(double x0, double y0, double side) {
    return json::array({json::array({json::array({x0, y0}), json::array({x0 + side, y0}),
                                     json::array({x0 + side, y0 + side}), json::array({x0, y0 + side}),
                                     json::array({x0, y0})})});
}

json polygon_feature(const std::string& name, json rings) {
    return {{"type", "Feature"},
            {"properties", {{"name", name}}},
            {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}}};
}

class ServiceTest : public ::testing::Test {
protected:
    warehouse::Warehouse w;
    std::unique_ptr<Service> svc;
    std::unique_ptr<httplib::Client> client;

    void SetUp() override { boot({}); }

    void boot(ServiceConfig cfg) {
        client.reset();
        svc.reset();
        svc = std::make_unique<Service>(w, std::move(cfg));
        const int port = svc->start("127.0.0.1", 0);
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(60, 0);
    }

    static Response wrap(const httplib::Result& r) {
        if (!r) return {};
        Response out{r->status, json::parse(r->body), r->body};
        return out;
    }
    Response get(const std::string& path) { return wrap(client->Get(path)); }
    Response post(const std::string& path, const json& body) {
        return wrap(client->Post(path, body.dump(), "application/json"));
    }
    Response post_raw(const std::string& path, const std::string& body) {
        return wrap(client->Post(path, body, "application/json"));
    }
    Response put(const std::string& path, const json& body) {
        return wrap(client->Put(path, body.dump(), "application/json"));
    }
    Response del(const std::string& path) { return wrap(client->Delete(path)); }

    void household(const std::string& id, double lon, double lat) {
        warehouse::HouseholdRecord h;
        h.household_id = id;
        h.location = {lon, lat};
        w.upsert_household(h);
    }

    // One day of hourly readings from value(hour).
    template <class F>
    std::vector<warehouse::ReadingRow> day(const std::string& meter, int d, F value) {
        std::vector<warehouse::ReadingRow> rows;
        for (int hr = 0; hr < 24; ++hr) {
            char ts[32];
            std::snprintf(ts, sizeof ts, "2024-06-%02dT%02d:00:00Z", d, hr);
            rows.push_back({meter, ts, "electricity", value(hr)});
        }
        return rows;
    }

    static json rows_json(const std::vector<warehouse::ReadingRow>& rows) {
        json out = json::array();
        for (const auto& r : rows) {
            out.push_back({{"meter_id", r.meter_id},
                           {"timestamp", r.timestamp},
                           {"energy_type", r.energy_type},
                           {"consumption_kwh", r.consumption_kwh}});
        }
        return out;
    }

    void load_synthetic(std::size_t households, std::size_t days) {
        synth::SyntheticSpec s;
        s.households = households;
        s.days = days;
        s.noise = 0.02;
        s.seed = 7;
        const auto data = synth::generate(s);
        std::stringstream hh, rd;
        synth::write_households_csv(hh, data.households);
        synth::write_readings_csv(rd, data.readings);
        w.ingest_households(hh);
        ASSERT_EQ(w.ingest_readings(rd).rejected, 0u);
    }
};

void expect_error(const Response& r, int status, const std::string& code) {
    EXPECT_EQ(r.status, status) << r.raw;
    EXPECT_TRUE(r.body["data"].is_null());
    EXPECT_EQ(r.body["error"]["code"], code) << r.raw;
    EXPECT_TRUE(r.body["error"]["message"].is_string());
}

TEST_F(ServiceTest, HealthUsesEnvelope) {
    const auto r = get("/api/health");
    EXPECT_EQ(r.status, 200);
    EXPECT_TRUE(r.body["error"].is_null());
    EXPECT_EQ(r.body["data"]["status"], "ok");
}

TEST_F(ServiceTest, EmptyStoreListsNoNeighborhoods) {
    const auto r = get("/api/neighborhoods");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["data"]["type"], "FeatureCollection");
    EXPECT_TRUE(r.body["data"]["features"].empty());
    EXPECT_EQ(r.body["data"]["properties"]["minzoom"], 10);
    EXPECT_EQ(r.body["data"]["properties"]["maxzoom"], 20);
}

TEST_F(ServiceTest, PostedSquareRoundTrips) {
    const auto rings = square(11.5, 48.1, 0.01);
    const auto created = post("/api/neighborhoods", polygon_feature("centre", rings));
    ASSERT_EQ(created.status, 201) << created.raw;
    const auto id = created.body["data"]["id"].get<std::int64_t>();
    EXPECT_EQ(created.body["data"]["properties"]["name"], "centre");

    const auto one = get("/api/neighborhoods/" + std::to_string(id));
    ASSERT_EQ(one.status, 200);
    EXPECT_EQ(one.body["data"]["geometry"]["coordinates"], rings);

    const auto all = get("/api/neighborhoods");
    ASSERT_EQ(all.body["data"]["features"].size(), 1u);
    EXPECT_EQ(all.body["data"]["features"][0]["geometry"]["coordinates"], rings);
}

TEST_F(ServiceTest, DuplicateNameIsRejectedNotDuplicated) {
    ASSERT_EQ(post("/api/neighborhoods", polygon_feature("a", square(0, 0, 1))).status, 201);
    expect_error(post("/api/neighborhoods", polygon_feature("a", square(5, 5, 1))), 409, "duplicate_name");
    EXPECT_EQ(get("/api/neighborhoods").body["data"]["features"].size(), 1u);
}

TEST_F(ServiceTest, SelfIntersectingRingIsInvalidGeometry) {
    const json bowtie = json::array({json::array({json::array({0, 0}), json::array({1, 1}), json::array({1, 0}),
                                                  json::array({0, 1}), json::array({0, 0})})});
    expect_error(post("/api/neighborhoods", polygon_feature("bow", bowtie)), 400, "invalid_geometry");
    EXPECT_TRUE(get("/api/neighborhoods").body["data"]["features"].empty());
}

TEST_F(ServiceTest, MalformedRequestsUseDistinctCodes) {
    expect_error(post_raw("/api/neighborhoods", "{not json"), 400, "invalid_json");
    expect_error(post("/api/neighborhoods", json{{"type", "Feature"}, {"geometry", nullptr}}), 400,
                 "invalid_request");
    expect_error(post("/api/neighborhoods", json::array()), 400, "invalid_request");
}

TEST_F(ServiceTest, UnknownIdsAreNotFound) {
    expect_error(get("/api/neighborhoods/99"), 404, "not_found");
    expect_error(del("/api/neighborhoods/99"), 404, "not_found");
    expect_error(get("/api/segmentations/5"), 404, "not_found");
    expect_error(get("/api/segmentations/5/features"), 404, "not_found");
    expect_error(get("/api/no/such/route"), 404, "not_found");
}

TEST_F(ServiceTest, UpdateAndDeleteNeighborhood) {
    const auto id = post("/api/neighborhoods", polygon_feature("old", square(0, 0, 1))).body["data"]["id"].get<int>();
    const auto path = "/api/neighborhoods/" + std::to_string(id);
    const auto renamed = put(path, {{"type", "Feature"}, {"properties", {{"name", "new"}}}, {"geometry", nullptr}});
    ASSERT_EQ(renamed.status, 200) << renamed.raw;
    EXPECT_EQ(renamed.body["data"]["properties"]["name"], "new");
    EXPECT_EQ(renamed.body["data"]["geometry"]["coordinates"], square(0, 0, 1));
    EXPECT_EQ(del(path).status, 200);
    expect_error(get(path), 404, "not_found");
}

TEST_F(ServiceTest, FeatureCollectionImportIsAllOrNothing) {
    json fc = {{"type", "FeatureCollection"},
               {"features", json::array({polygon_feature("x", square(0, 0, 1)), polygon_feature("x", square(2, 2, 1))})}};
    expect_error(post("/api/neighborhoods", fc), 409, "duplicate_name");
    EXPECT_TRUE(get("/api/neighborhoods").body["data"]["features"].empty());
    fc["features"][1]["properties"]["name"] = "y";
    const auto r = post("/api/neighborhoods", fc);
    ASSERT_EQ(r.status, 201);
    EXPECT_EQ(r.body["data"]["features"].size(), 2u);
}

TEST_F(ServiceTest, ProfileOfOneHouseholdIsItsMeanDay) {
    household("h1", 0.5, 0.5);
    w.ingest_reading_rows(day("h1", 1, [](int h) { return 1.0 + h; }));
    w.ingest_reading_rows(day("h1", 2, [](int h) { return 3.0 + h; }));
    const auto id = post("/api/neighborhoods", polygon_feature("n", square(0, 0, 1))).body["data"]["id"].get<int>();

    const auto r = get("/api/neighborhoods/profile?ids=" + std::to_string(id));
    ASSERT_EQ(r.status, 200) << r.raw;
    const auto& p = r.body["data"]["profiles"][std::to_string(id)];
    EXPECT_FALSE(p["empty"].get<bool>());
    EXPECT_EQ(p["household_count"], 1);
    ASSERT_EQ(p["profile"].size(), 24u);
    for (int h = 0; h < 24; ++h) EXPECT_DOUBLE_EQ(p["profile"][h].get<double>(), 2.0 + h);
}

TEST_F(ServiceTest, DisjointNeighborhoodsGiveIndependentSeries) {
    household("a", 0.5, 0.5);
    household("b", 5.5, 5.5);
    w.ingest_reading_rows(day("a", 1, [](int) { return 1.0; }));
    w.ingest_reading_rows(day("b", 1, [](int h) { return 0.1 * h; }));
    const auto na = post("/api/neighborhoods", polygon_feature("A", square(0, 0, 1))).body["data"]["id"].get<int>();
    const auto nb = post("/api/neighborhoods", polygon_feature("B", square(5, 5, 1))).body["data"]["id"].get<int>();
    const auto nc = post("/api/neighborhoods", polygon_feature("C", square(9, 9, 1))).body["data"]["id"].get<int>();

    const auto r = get("/api/neighborhoods/profile?ids=" + std::to_string(na) + "," + std::to_string(nb) + "," +
                       std::to_string(nc) + "&from=2024-06-01&to=2024-06-01");
    ASSERT_EQ(r.status, 200) << r.raw;
    const auto& profiles = r.body["data"]["profiles"];
    for (int h = 0; h < 24; ++h) {
        EXPECT_DOUBLE_EQ(profiles[std::to_string(na)]["profile"][h].get<double>(), 1.0);
        EXPECT_DOUBLE_EQ(profiles[std::to_string(nb)]["profile"][h].get<double>(), 0.1 * h);
    }
    const auto& empty = profiles[std::to_string(nc)];
    EXPECT_TRUE(empty["empty"].get<bool>());
    EXPECT_EQ(empty["household_count"], 0);
    for (const auto& v : empty["profile"]) EXPECT_TRUE(v.is_null());

    expect_error(get("/api/neighborhoods/profile?ids=" + std::to_string(na) + ",404"), 404, "not_found");
    expect_error(get("/api/neighborhoods/profile"), 400, "invalid_parameter");
    expect_error(get("/api/neighborhoods/profile?ids=" + std::to_string(na) + "&from=yesterday"), 400,
                 "invalid_parameter");
}

TEST_F(ServiceTest, ProfileEqualsWarehouseAggregateByHour) {
    load_synthetic(30, 4);
    const auto id =
        post("/api/neighborhoods", polygon_feature("half", square(11.50, 48.10, 0.05))).body["data"]["id"].get<int>();
    const auto r = get("/api/neighborhoods/profile?ids=" + std::to_string(id));
    ASSERT_EQ(r.status, 200);
    const auto& p = r.body["data"]["profiles"][std::to_string(id)];
    ASSERT_FALSE(p["empty"].get<bool>());

    const auto agg = w.aggregate_by_neighborhood(id, warehouse::Statistic{}, {});
    std::array<double, 24> sum{};
    std::array<int, 24> n{};
    for (const auto& b : agg.series) {
        const auto h = static_cast<std::size_t>(w.zone().to_local(b.time).hour);
        sum[h] += b.value;
        ++n[h];
    }
    for (std::size_t h = 0; h < 24; ++h) {
        ASSERT_GT(n[h], 0);
        const double expected = sum[h] / n[h];
        EXPECT_NEAR(p["profile"][h].get<double>(), expected, 1e-12 * std::abs(expected));
    }

    const auto a = get("/api/neighborhoods/" + std::to_string(id) + "/aggregate?stat=mean");
    ASSERT_EQ(a.status, 200);
    ASSERT_EQ(a.body["data"]["series"].size(), agg.series.size());
    for (std::size_t i = 0; i < agg.series.size(); ++i) {
        EXPECT_EQ(a.body["data"]["series"][i]["value"].get<double>(), agg.series[i].value);
    }
    expect_error(get("/api/neighborhoods/" + std::to_string(id) + "/aggregate?stat=mode"), 400, "invalid_statistic");
}

TEST_F(ServiceTest, HouseholdLayerHonoursBbox) {
    household("h1", 1, 1);
    household("h2", 2, 2);
    household("h3", 3, 3);
    EXPECT_TRUE(get("/api/households?bbox=10,10,11,11").body["data"]["features"].empty());
    const auto all = get("/api/households?bbox=-180,-90,180,90");
    EXPECT_EQ(all.body["data"]["features"].size(), 3u);
    const auto some = get("/api/households?bbox=1.5,1.5,3,3");
    ASSERT_EQ(some.body["data"]["features"].size(), 2u);
    EXPECT_EQ(some.body["data"]["features"][0]["id"], "h2");
    EXPECT_EQ(some.body["data"]["features"][0]["geometry"]["type"], "Point");
    EXPECT_EQ(some.body["data"]["features"][0]["properties"]["household_id"], "h2");

    expect_error(get("/api/households?bbox=1,2,3"), 400, "invalid_bbox");
    expect_error(get("/api/households?bbox=a,b,c,d"), 400, "invalid_bbox");
    expect_error(get("/api/households?bbox=3,3,1,1"), 400, "invalid_bbox");
}

TEST_F(ServiceTest, CursorPaginationVisitsEveryFeatureOnce) {
    for (int i = 0; i < 7; ++i) household("h" + std::to_string(i), i, i);
    std::vector<std::string> seen;
    std::string path = "/api/households?limit=3";
    for (int pages = 0; pages < 10; ++pages) {
        const auto r = get(path);
        ASSERT_EQ(r.status, 200) << r.raw;
        EXPECT_EQ(r.body["data"]["properties"]["total"], 7);
        for (const auto& f : r.body["data"]["features"]) seen.push_back(f["id"]);
        const auto& next = r.body["data"]["properties"]["next_cursor"];
        if (next.is_null()) break;
        path = "/api/households?limit=3&cursor=" + next.get<std::string>();
    }
    EXPECT_EQ(seen, (std::vector<std::string>{"h0", "h1", "h2", "h3", "h4", "h5", "h6"}));
    expect_error(get("/api/households?limit=0"), 400, "invalid_parameter");
}

TEST_F(ServiceTest, SegmentationOnEmptyWarehouseIsUnprocessable) {
    expect_error(post("/api/segmentations", json::object()), 422, "no_eligible_households");
    EXPECT_TRUE(get("/api/segmentations").body["data"].empty());
}

TEST_F(ServiceTest, SegmentationParametersAreValidated) {
    load_synthetic(6, 3);
    expect_error(post("/api/segmentations", {{"T", -1}}), 400, "invalid_threshold");
    expect_error(post("/api/segmentations", {{"T", "big"}}), 400, "invalid_parameter");
    expect_error(post("/api/segmentations", {{"bogus", 1}}), 400, "invalid_parameter");
    expect_error(post("/api/segmentations", {{"alpha1", 0}}), 400, "invalid_alpha");
    expect_error(post("/api/segmentations", {{"from", "2030-01-01"}}), 422, "no_eligible_households");
}

TEST_F(ServiceTest, FeatureClusterIdsJoinStoredMembership) {
    load_synthetic(24, 5);
    const auto run = post("/api/segmentations?wait=1", json::object());
    ASSERT_EQ(run.status, 201) << run.raw;
    const auto id = run.body["data"]["id"].get<warehouse::Key>();
    EXPECT_TRUE(run.body["data"]["metrics"].contains("entropy"));
    EXPECT_EQ(run.body["data"]["quality"]["eligible_households"], 24);

    const auto rec = w.fetch_segmentation(id);
    ASSERT_TRUE(rec.result);
    std::map<std::string, int> stored;
    for (const auto& c : rec.result->clusters) {
        for (const auto& m : c.members) stored[m] = c.cluster_id;
    }
    const auto r = get("/api/segmentations/" + std::to_string(id) + "/features");
    ASSERT_EQ(r.status, 200);
    ASSERT_EQ(r.body["data"]["features"].size(), stored.size());
    for (const auto& f : r.body["data"]["features"]) {
        const auto hid = f["properties"]["household_id"].get<std::string>();
        EXPECT_EQ(f["id"], hid);
        EXPECT_EQ(f["properties"]["cluster_id"].get<int>(), stored.at(hid));
        EXPECT_TRUE(f["properties"]["anomaly"].is_boolean());
    }

    const int cid = rec.result->clusters.front().cluster_id;
    const auto c = get("/api/segmentations/" + std::to_string(id) + "/clusters/" + std::to_string(cid));
    ASSERT_EQ(c.status, 200);
    EXPECT_EQ(c.body["data"]["members"], json(rec.result->clusters.front().members));

    const auto full = get("/api/segmentations/" + std::to_string(id));
    EXPECT_EQ(full.body["data"]["status"], "done");
    EXPECT_EQ(full.body["data"]["result"]["clusters"].size(), rec.result->clusters.size());
}

TEST_F(ServiceTest, AsyncRunIsPolledToCompletion) {
    load_synthetic(12, 3);
    const auto run = post("/api/segmentations", {{"T", 0.05}});
    ASSERT_EQ(run.status, 202) << run.raw;
    const auto id = std::to_string(run.body["data"]["id"].get<int>());
    EXPECT_EQ(run.body["data"]["status_url"], "/api/segmentations/" + id + "/status");
    svc->drain();
    const auto s = get("/api/segmentations/" + id + "/status");
    EXPECT_EQ(s.body["data"]["status"], "done");
    EXPECT_TRUE(s.body["data"]["error"].is_null());
    EXPECT_EQ(del("/api/segmentations/" + id).status, 200);
    expect_error(get("/api/segmentations/" + id + "/status"), 404, "not_found");
}

TEST_F(ServiceTest, RepeatedGetsAreByteIdentical) {
    load_synthetic(10, 3);
    const auto nid = post("/api/neighborhoods", polygon_feature("all", square(11.4, 48.0, 0.3))).body["data"]["id"];
    const auto sid = post("/api/segmentations?wait=1", json::object()).body["data"]["id"];
    for (const std::string& path : std::vector<std::string>{"/api/neighborhoods", "/api/households", "/api/segmentations",
          "/api/neighborhoods/profile?ids=" + nid.dump(), "/api/segmentations/" + sid.dump(),
          "/api/segmentations/" + sid.dump() + "/features", "/api/groups?factors=income_band",
          "/api/neighborhoods/" + nid.dump() + "/aggregate?stat=percentile&p=90"}) {
        const auto a = get(path);
        const auto b = get(path);
        EXPECT_EQ(a.status, 200) << path << " " << a.raw;
        EXPECT_EQ(a.raw, b.raw) << path;
    }
}

class StreamTest : public ServiceTest {
protected:
    std::array<double, 24> pattern{};
    void SetUp() override {
        ServiceTest::SetUp();
        household("h1", 0, 0);
        for (std::size_t h = 0; h < 24; ++h) pattern[h] = 0.5 + 0.1 * static_cast<double>(h % 6);
        for (int d = 1; d <= 10; ++d) {
            w.ingest_reading_rows(day("h1", d, [&](int h) { return pattern[h] * (1.0 + 0.01 * (d % 3)); }));
        }
    }
};

TEST_F(StreamTest, EstablishedDayIsNotFlagged) {
    const auto r = post("/api/readings", rows_json(day("h1", 11, [&](int h) { return pattern[h] * 1.01; })));
    ASSERT_EQ(r.status, 200) << r.raw;
    EXPECT_EQ(r.body["data"]["accepted"], 24);
    EXPECT_TRUE(r.body["data"]["anomalies"].empty());
}

TEST_F(StreamTest, ZeroDayIsFlaggedWithProbabilityOne) {
    const auto rows = rows_json(day("h1", 11, [](int) { return 0.0; }));
    const auto r = post("/api/readings", {{"readings", rows}});
    ASSERT_EQ(r.status, 200) << r.raw;
    ASSERT_EQ(r.body["data"]["anomalies"].size(), 1u);
    const auto& a = r.body["data"]["anomalies"][0];
    EXPECT_EQ(a["household_id"], "h1");
    EXPECT_EQ(a["date"], "2024-06-11");
    EXPECT_EQ(a["probability"].get<double>(), 1.0);
    EXPECT_GT(a["distance"].get<double>(), a["threshold"].get<double>());

    const auto before = w.fact_summary();
    const auto again = post("/api/readings", rows);
    ASSERT_EQ(again.status, 200);
    EXPECT_TRUE(again.body["data"]["anomalies"].empty());
    EXPECT_EQ(again.body["data"]["rejected"], 24);
    const auto after = w.fact_summary();
    EXPECT_EQ(after.count, before.count);
    EXPECT_EQ(after.checksum, before.checksum);
}

TEST_F(StreamTest, RejectedRowsReportRequestPositions) {
    json rows = rows_json(day("h1", 12, [&](int h) { return pattern[h]; }));
    rows[3]["consumption_kwh"] = -1.0;
    rows[5] = {{"meter_id", "h1"}};
    rows[7]["meter_id"] = "ghost";
    const auto r = post("/api/readings", rows);
    ASSERT_EQ(r.status, 200) << r.raw;
    EXPECT_EQ(r.body["data"]["accepted"], 21);
    EXPECT_EQ(r.body["data"]["rejected"], 3);
    const auto& reasons = r.body["data"]["reasons"];
    ASSERT_EQ(reasons.size(), 3u);
    EXPECT_EQ(reasons[0]["row"], 4);
    EXPECT_EQ(reasons[0]["reason"], "negative_consumption");
    EXPECT_EQ(reasons[1]["row"], 6);
    EXPECT_EQ(reasons[1]["reason"], "malformed_row");
    EXPECT_EQ(reasons[2]["row"], 8);
    EXPECT_EQ(reasons[2]["reason"], "unknown_meter");
    expect_error(post("/api/readings", json{{"rows", 1}}), 400, "invalid_request");
}

TEST_F(ServiceTest, GroupsEndpointMirrorsWarehouse) {
    load_synthetic(20, 3);
    const auto r = get("/api/groups?factors=income_band&stat=mean&min_size=1");
    ASSERT_EQ(r.status, 200) << r.raw;
    const auto direct = w.group_by_sociodemographic({"income_band"}, {}, warehouse::Statistic{}, 1);
    ASSERT_EQ(r.body["data"]["groups"].size(), direct.groups.size());
    for (std::size_t i = 0; i < direct.groups.size(); ++i) {
        const auto& g = r.body["data"]["groups"][i];
        EXPECT_EQ(g["key"], json(direct.groups[i].key));
        if (direct.groups[i].statistic) EXPECT_EQ(g["statistic"].get<double>(), *direct.groups[i].statistic);
    }
    expect_error(get("/api/groups?factors=shoe_size"), 400, "unknown_factor");
}

TEST_F(ServiceTest, CorsHeadersAndPreflight) {
    const auto r = client->Get("/api/health");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
    const auto pre = client->Options("/api/neighborhoods");
    ASSERT_TRUE(pre);
    EXPECT_EQ(pre->status, 204);
    EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);

    ServiceConfig cfg;
    cfg.cors_origin = "http://map.example";
    boot(cfg);
    EXPECT_EQ(client->Get("/api/health")->get_header_value("Access-Control-Allow-Origin"), "http://map.example");
}

TEST(HttpStatusTest, ErrorKindsMapToStatusClasses) {
    EXPECT_EQ(http_status(ErrorKind::invalid_argument), 400);
    EXPECT_EQ(http_status(ErrorKind::invalid_geometry), 400);
    EXPECT_EQ(http_status(ErrorKind::not_found), 404);
    EXPECT_EQ(http_status(ErrorKind::conflict), 409);
    EXPECT_EQ(http_status(ErrorKind::unprocessable), 422);
    EXPECT_EQ(http_status(ErrorKind::undefined_metric), 422);
    EXPECT_EQ(http_status(ErrorKind::internal), 500);
}

}  // namespace
}  // namespace segsys::service
