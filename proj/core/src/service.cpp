#include "segsys/service.hpp"

#include <charconv>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include <httplib.h>

#include "segsys/geojson.hpp"
#include "segsys/pipeline.hpp"
#include "segsys/serialization.hpp"
#include "segsys/timeutil.hpp"

namespace segsys::service {

using nlohmann::json;
using warehouse::Key;

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument:
        case ErrorKind::invalid_geometry: return 400;
        case ErrorKind::not_found: return 404;
        case ErrorKind::conflict: return 409;
        case ErrorKind::undefined_metric:
        case ErrorKind::unprocessable: return 422;
        case ErrorKind::storage: return 503;
        case ErrorKind::contract:
        case ErrorKind::io:
        case ErrorKind::internal: return 500;
    }
    return 500;
}

namespace {

struct Reply {
    int status = 200;
    json data;
};

[[noreturn]] void bad_parameter(const std::string& msg) {
    throw Error(ErrorKind::invalid_argument, "invalid_parameter", msg);
}

[[noreturn]] void bad_request(const std::string& msg) { throw Error(ErrorKind::invalid_argument, "invalid_request", msg); }

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

double parse_double(const std::string& text, const char* name) {
    double v{};
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
        bad_parameter(std::string(name) + " must be a number");
    }
    return v;
}

std::size_t parse_count(const std::string& text, const char* name) {
    std::size_t v{};
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
        bad_parameter(std::string(name) + " must be a non-negative integer");
    }
    return v;
}

Key path_key(const httplib::Request& req, std::size_t group = 1) {
    const std::string s = req.matches[static_cast<int>(group)];
    Key v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw Error(ErrorKind::not_found, "not_found", "unknown id '" + s + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(',', start);
        const auto end = pos == std::string::npos ? s.size() : pos;
        out.push_back(s.substr(start, end - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::invalid_argument, "invalid_json", e.what());
    }
}

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

json household_properties(const warehouse::HouseholdRecord& h) {
    return json{{"household_id", h.household_id},   {"family_size", optional_json(h.family_size)},
                {"income_band", optional_json(h.income_band)}, {"education", optional_json(h.education)},
                {"employment", optional_json(h.employment)},   {"dwelling_type", optional_json(h.dwelling_type)},
                {"area_m2", optional_json(h.area_m2)},         {"rooms", optional_json(h.rooms)},
                {"building_age", optional_json(h.building_age)}};
}

json neighborhood_feature(const warehouse::NeighborhoodRecord& n) {
    return geojson::feature(geojson::to_geometry(n.geometry),
                            json{{"neighborhood_id", n.id}, {"name", n.name}, {"created_at", n.created_at}}, n.id);
}

std::optional<geometry::BoundingBox> parse_bbox(const httplib::Request& req) {
    const auto text = param(req, "bbox");
    if (!text) return std::nullopt;
    const auto parts = split_list(*text);
    if (parts.size() != 4) throw Error(ErrorKind::invalid_argument, "invalid_bbox", "bbox needs four numbers");
    double v[4];
    for (std::size_t i = 0; i < 4; ++i) {
        try {
            v[i] = parse_double(parts[i], "bbox");
        } catch (const Error&) {
            throw Error(ErrorKind::invalid_argument, "invalid_bbox", "bbox values must be numbers");
        }
    }
    geometry::BoundingBox box{v[0], v[1], v[2], v[3]};
    if (!(box.min_lon <= box.max_lon && box.min_lat <= box.max_lat) || box.min_lon < -180 || box.max_lon > 180 ||
        box.min_lat < -90 || box.max_lat > 90) {
        throw Error(ErrorKind::invalid_argument, "invalid_bbox", "bbox must be min_lon,min_lat,max_lon,max_lat");
    }
    return box;
}

std::string format_time(std::chrono::sys_seconds t) { return timeutil::format_utc(t); }

}  // namespace

// ---- implementation -----------------------------------------------------------

struct Service::Impl {
    warehouse::Warehouse& store;
    ServiceConfig config;
    online::OnlineMonitor monitor;
    httplib::Server server;
    std::thread listener;

    // Segmentation runs execute one at a time off the request path.
    struct Job {
        Key id;
        pipeline::PipelineConfig config;
    };
    std::mutex jobs_mu;
    std::condition_variable jobs_cv;
    std::deque<Job> jobs;
    bool busy = false;
    bool stopping = false;
    std::thread worker;

    Impl(warehouse::Warehouse& w, ServiceConfig cfg)
        : store(w), config(std::move(cfg)), monitor(w, config.online) {
        worker = std::thread([this] { work(); });
        routes();
    }

    ~Impl() {
        server.stop();
        if (listener.joinable()) listener.join();
        std::deque<Job> abandoned;
        {
            std::lock_guard lk(jobs_mu);
            stopping = true;
            abandoned.swap(jobs);
        }
        jobs_cv.notify_all();
        worker.join();
        for (const auto& j : abandoned) {
            try {
                store.fail_segmentation(j.id, "cancelled", "service stopped before the run started");
            } catch (...) {
            }
        }
    }

    void work() {
        while (true) {
            Job job;
            {
                std::unique_lock lk(jobs_mu);
                jobs_cv.wait(lk, [&] { return stopping || !jobs.empty(); });
                if (jobs.empty()) return;
                job = std::move(jobs.front());
                jobs.pop_front();
                busy = true;
            }
            execute(job.id, job.config);
            {
                std::lock_guard lk(jobs_mu);
                busy = false;
            }
            jobs_cv.notify_all();
        }
    }

    void drain() {
        std::unique_lock lk(jobs_mu);
        jobs_cv.wait(lk, [&] { return jobs.empty() && !busy; });
    }

    // Runs and records one segmentation; rethrows nothing.
    std::optional<pipeline::PipelineOutput> execute(Key id, const pipeline::PipelineConfig& cfg,
                                                    std::optional<Error>* failure = nullptr) {
        try {
            store.mark_segmentation_running(id);
            auto out = pipeline::run_segmentation(store, cfg);
            store.complete_segmentation(id, out.result);
            return out;
        } catch (const Error& e) {
            if (failure) failure->emplace(e);
            try {
                store.fail_segmentation(id, e.code(), e.what());
            } catch (...) {
            }
        } catch (const std::exception& e) {
            if (failure) failure->emplace(ErrorKind::internal, "internal_error", e.what());
            try {
                store.fail_segmentation(id, "internal_error", e.what());
            } catch (...) {
            }
        }
        return std::nullopt;
    }

    // ---- plumbing

    static std::string envelope(const json& data) {
        return json{{"data", data}, {"error", nullptr}}.dump();
    }
    static std::string error_envelope(const std::string& code, const std::string& message) {
        return json{{"data", nullptr}, {"error", {{"code", code}, {"message", message}}}}.dump();
    }

    using Handler = std::function<Reply(const httplib::Request&)>;

    httplib::Server::Handler wrap(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                Reply r = h(req);
                res.status = r.status;
                res.set_content(envelope(r.data), "application/json");
            } catch (const Error& e) {
                res.status = http_status(e.kind());
                res.set_content(error_envelope(e.code(), e.what()), "application/json");
            } catch (const json::exception& e) {
                res.status = 400;
                res.set_content(error_envelope("invalid_request", e.what()), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(error_envelope("internal_error", e.what()), "application/json");
            }
        };
    }

    warehouse::TimeRange range_of(const httplib::Request& req) const {
        warehouse::TimeRange r;
        if (const auto from = param(req, "from")) {
            r.from = warehouse::parse_range_start(store.zone(), *from);
            if (!r.from) bad_parameter("from must be a date or an ISO-8601 timestamp with offset");
        }
        if (const auto to = param(req, "to")) {
            r.to = warehouse::parse_range_end(store.zone(), *to);
            if (!r.to) bad_parameter("to must be a date or an ISO-8601 timestamp with offset");
        }
        if (r.from && r.to && *r.to < *r.from) bad_parameter("to precedes from");
        return r;
    }

    json collection(json features, const char* layer, std::optional<std::string> next_cursor, std::size_t total) {
        json fc = geojson::feature_collection(std::move(features));
        fc["properties"] = json{{"layer", layer},
                                {"minzoom", config.min_zoom},
                                {"maxzoom", config.max_zoom},
                                {"next_cursor", optional_json(next_cursor)},
                                {"total", total}};
        return fc;
    }

    // Features sorted by string id; cursor = last id of the previous page.
    json paginate(std::vector<std::pair<std::string, json>> features, const httplib::Request& req,
                  const char* layer) {
        std::size_t limit = config.page_size;
        if (const auto l = param(req, "limit")) {
            limit = parse_count(*l, "limit");
            if (limit == 0 || limit > config.page_size) {
                bad_parameter("limit must lie in [1, " + std::to_string(config.page_size) + "]");
            }
        }
        const auto cursor = param(req, "cursor");
        const std::size_t total = features.size();
        json page = json::array();
        std::optional<std::string> next;
        for (auto& [id, f] : features) {
            if (cursor && id <= *cursor) continue;
            if (page.size() == limit) {
                next = page.back()["id"].get<std::string>();
                break;
            }
            page.push_back(std::move(f));
        }
        return collection(std::move(page), layer, next, total);
    }

    // ---- routes

    void routes() {
        server.set_payload_max_length(config.max_body_bytes);
        if (!config.cors_origin.empty()) {
            server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin}, {"Vary", "Origin"}});
        }
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.status = 204;
            res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return;
            const std::string code = res.status == 404 ? "not_found" : res.status == 413 ? "payload_too_large"
                                                                                          : "http_error";
            res.set_content(error_envelope(code, httplib::status_message(res.status)), "application/json");
        });

        server.Get("/api/health", wrap([](const httplib::Request&) { return Reply{200, {{"status", "ok"}}}; }));

        // neighborhoods
        server.Get("/api/neighborhoods", wrap([this](const httplib::Request&) {
                       json features = json::array();
                       for (const auto& n : store.neighborhoods()) features.push_back(neighborhood_feature(n));
                       const auto n = features.size();
                       return Reply{200, collection(std::move(features), "neighborhoods", std::nullopt, n)};
                   }));
        server.Post("/api/neighborhoods", wrap([this](const httplib::Request& req) { return create_neighborhoods(req); }));
        server.Get("/api/neighborhoods/profile", wrap([this](const httplib::Request& req) { return profiles(req); }));
        server.Get(R"(/api/neighborhoods/(\d+))", wrap([this](const httplib::Request& req) {
                       return Reply{200, neighborhood_feature(store.fetch_neighborhood(path_key(req)))};
                   }));
        server.Put(R"(/api/neighborhoods/(\d+))", wrap([this](const httplib::Request& req) {
                       return update_neighborhood(req);
                   }));
        server.Delete(R"(/api/neighborhoods/(\d+))", wrap([this](const httplib::Request& req) {
                          const Key id = path_key(req);
                          store.delete_neighborhood(id);
                          return Reply{200, {{"deleted", id}}};
                      }));
        server.Get(R"(/api/neighborhoods/(\d+)/aggregate)",
                   wrap([this](const httplib::Request& req) { return aggregate(req); }));

        // households and groups
        server.Get("/api/households", wrap([this](const httplib::Request& req) { return households(req); }));
        server.Get("/api/groups", wrap([this](const httplib::Request& req) { return groups(req); }));

        // segmentations
        server.Get("/api/segmentations", wrap([this](const httplib::Request&) {
                       json list = json::array();
                       for (const auto& s : store.segmentations()) {
                           list.push_back({{"id", s.id},
                                           {"status", warehouse::to_string(s.status)},
                                           {"created_at", s.created_at}});
                       }
                       return Reply{200, list};
                   }));
        server.Post("/api/segmentations", wrap([this](const httplib::Request& req) { return run(req); }));
        server.Get(R"(/api/segmentations/(\d+))", wrap([this](const httplib::Request& req) {
                       return Reply{200, record_json(store.fetch_segmentation(path_key(req)))};
                   }));
        server.Get(R"(/api/segmentations/(\d+)/status)", wrap([this](const httplib::Request& req) {
                       const auto rec = store.fetch_segmentation(path_key(req));
                       return Reply{200, status_json(rec)};
                   }));
        server.Get(R"(/api/segmentations/(\d+)/clusters/(\d+))", wrap([this](const httplib::Request& req) {
                       const Key cid = path_key(req, 2);
                       if (cid > std::numeric_limits<int>::max()) {
                           throw Error(ErrorKind::not_found, "not_found", "unknown cluster");
                       }
                       return Reply{200, serialization::to_json(store.fetch_cluster(path_key(req), static_cast<int>(cid)))};
                   }));
        server.Get(R"(/api/segmentations/(\d+)/features)",
                   wrap([this](const httplib::Request& req) { return cluster_features(req); }));
        server.Delete(R"(/api/segmentations/(\d+))", wrap([this](const httplib::Request& req) {
                          const Key id = path_key(req);
                          store.delete_segmentation(id);
                          return Reply{200, {{"deleted", id}}};
                      }));

        // stream insert
        server.Post("/api/readings", wrap([this](const httplib::Request& req) { return readings(req); }));
    }

    // ---- neighborhoods

    static std::string feature_name(const json& f) {
        if (!f.contains("properties") || !f["properties"].is_object() || !f["properties"].contains("name") ||
            !f["properties"]["name"].is_string() || f["properties"]["name"].get<std::string>().empty()) {
            bad_request("feature needs a non-empty string property 'name'");
        }
        return f["properties"]["name"].get<std::string>();
    }

    static geometry::GeoPolygon feature_polygon(const json& f) {
        if (!f.contains("geometry") || !f["geometry"].is_object()) {
            throw Error(ErrorKind::invalid_geometry, "invalid_geometry", "feature has no geometry");
        }
        return geojson::parse_polygon(f["geometry"]);
    }

    Reply create_neighborhoods(const httplib::Request& req) {
        const json body = parse_body(req);
        const auto type = body.value("type", "");
        if (type == "Feature") {
            const auto name = feature_name(body);
            const Key id = store.store_neighborhood(name, feature_polygon(body));
            return Reply{201, neighborhood_feature(store.fetch_neighborhood(id))};
        }
        if (type == "FeatureCollection" && body.contains("features") && body["features"].is_array()) {
            // Validate everything before storing anything.
            std::vector<std::pair<std::string, geometry::GeoPolygon>> items;
            std::set<std::string> names;
            for (const auto& f : body["features"]) {
                auto name = feature_name(f);
                if (!names.insert(name).second) {
                    throw Error(ErrorKind::conflict, "duplicate_name", "name '" + name + "' repeats in the import");
                }
                items.emplace_back(std::move(name), feature_polygon(f));
            }
            json features = json::array();
            for (const auto& [name, poly] : items) {
                features.push_back(neighborhood_feature(store.fetch_neighborhood(store.store_neighborhood(name, poly))));
            }
            const auto n = features.size();
            return Reply{201, collection(std::move(features), "neighborhoods", std::nullopt, n)};
        }
        bad_request("body must be a GeoJSON Feature or FeatureCollection");
    }

    Reply update_neighborhood(const httplib::Request& req) {
        const Key id = path_key(req);
        const json body = parse_body(req);
        if (body.value("type", "") != "Feature") bad_request("body must be a GeoJSON Feature");
        std::optional<std::string> name;
        std::optional<geometry::GeoPolygon> polygon;
        if (body.contains("properties") && body["properties"].is_object() && body["properties"].contains("name")) {
            name = feature_name(body);
        }
        if (body.contains("geometry") && !body["geometry"].is_null()) polygon = feature_polygon(body);
        store.update_neighborhood(id, name, polygon);
        return Reply{200, neighborhood_feature(store.fetch_neighborhood(id))};
    }

    std::string energy_type(const httplib::Request& req) const {
        return param(req, "energy_type").value_or("electricity");
    }

    Reply profiles(const httplib::Request& req) {
        const auto ids_text = param(req, "ids");
        if (!ids_text || ids_text->empty()) bad_parameter("ids must list at least one neighborhood id");
        std::vector<Key> ids;
        for (const auto& s : split_list(*ids_text)) {
            Key v{};
            const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) bad_parameter("ids must be integers");
            ids.push_back(v);
        }
        const auto range = range_of(req);
        const auto energy = energy_type(req);
        json out = json::object();
        json order = json::array();
        for (const Key id : ids) {
            const auto p = store.neighborhood_profile(id, range, energy);
            json profile = json::array();
            for (const auto& v : p.profile) profile.push_back(optional_json(v));
            out[std::to_string(id)] = {{"neighborhood_id", id},
                                       {"name", p.name},
                                       {"empty", p.empty},
                                       {"household_count", p.household_count},
                                       {"profile", std::move(profile)}};
            order.push_back(id);
        }
        return Reply{200,
                     {{"ids", std::move(order)},
                      {"from", optional_json(range.from ? std::optional(format_time(*range.from)) : std::nullopt)},
                      {"to", optional_json(range.to ? std::optional(format_time(*range.to)) : std::nullopt)},
                      {"energy_type", energy},
                      {"profiles", std::move(out)}}};
    }

    Reply aggregate(const httplib::Request& req) {
        const Key id = path_key(req);
        std::optional<double> p;
        if (const auto pt = param(req, "p")) p = parse_double(*pt, "p");
        const auto stat = warehouse::Statistic::parse(param(req, "stat").value_or("mean"), p);
        const auto agg = store.aggregate_by_neighborhood(id, stat, range_of(req), energy_type(req));
        json series = json::array();
        for (const auto& b : agg.series) {
            series.push_back({{"time", format_time(b.time)}, {"value", b.value}, {"households", b.households}});
        }
        return Reply{200,
                     {{"neighborhood_id", id},
                      {"stat", stat.name()},
                      {"empty", agg.empty},
                      {"household_count", agg.household_ids.size()},
                      {"household_ids", agg.household_ids},
                      {"series", std::move(series)}}};
    }

    // ---- households and groups

    Reply households(const httplib::Request& req) {
        const auto box = parse_bbox(req);
        const auto list = box ? store.households_in(*box) : store.households();
        std::vector<std::pair<std::string, json>> features;
        for (const auto& h : list) {
            features.emplace_back(h.household_id, geojson::feature(geojson::to_geometry(h.location),
                                                                   household_properties(h), h.household_id));
        }
        return Reply{200, paginate(std::move(features), req, "households")};
    }

    Reply groups(const httplib::Request& req) {
        const auto factors_text = param(req, "factors");
        if (!factors_text || factors_text->empty()) bad_parameter("factors must list at least one attribute");
        std::optional<double> p;
        if (const auto pt = param(req, "p")) p = parse_double(*pt, "p");
        const auto stat = warehouse::Statistic::parse(param(req, "stat").value_or("mean"), p);
        std::size_t min_size = 3;
        if (const auto m = param(req, "min_size")) min_size = parse_count(*m, "min_size");
        const auto g =
            store.group_by_sociodemographic(split_list(*factors_text), range_of(req), stat, min_size, energy_type(req));
        json groups = json::array();
        for (const auto& grp : g.groups) {
            groups.push_back({{"key", grp.key},
                              {"household_count", grp.household_ids.size()},
                              {"households_with_data", grp.households_with_data},
                              {"too_small", grp.too_small},
                              {"statistic", optional_json(grp.statistic)},
                              {"mean_profile", optional_json(grp.mean_profile)}});
        }
        return Reply{200,
                     {{"factors", g.factors},
                      {"stat", stat.name()},
                      {"min_group_size", min_size},
                      {"excluded_null", g.excluded_null},
                      {"groups", std::move(groups)}}};
    }

    // ---- segmentations

    static json status_json(const warehouse::SegmentationRecord& rec) {
        json error = nullptr;
        if (rec.error_code) error = {{"code", *rec.error_code}, {"message", rec.error_message.value_or("")}};
        return {{"id", rec.id}, {"status", warehouse::to_string(rec.status)}, {"error", error}};
    }

    static json record_json(const warehouse::SegmentationRecord& rec) {
        json j = status_json(rec);
        j["created_at"] = rec.created_at;
        j["request"] = rec.request;
        j["result"] = rec.result ? serialization::to_json(*rec.result) : json(nullptr);
        return j;
    }

    pipeline::PipelineConfig run_config(const json& body) const {
        static const std::set<std::string> known{"T",           "intensity_T",   "alpha1", "alpha2",
                                                 "from",        "to",            "branch_factor",
                                                 "leaf_capacity", "flag_cut",    "entropy_form",
                                                 "energy_type", "wait"};
        if (!body.is_object()) bad_request("body must be a JSON object");
        for (const auto& [k, _] : body.items()) {
            if (!known.contains(k)) bad_parameter("unknown parameter '" + k + "'");
        }
        auto number = [&](const char* key) -> std::optional<double> {
            if (!body.contains(key) || body[key].is_null()) return std::nullopt;
            if (!body[key].is_number()) bad_parameter(std::string(key) + " must be a number");
            return body[key].get<double>();
        };
        auto count = [&](const char* key, std::size_t fallback) -> std::size_t {
            if (!body.contains(key)) return fallback;
            if (!body[key].is_number_unsigned()) bad_parameter(std::string(key) + " must be a positive integer");
            return body[key].get<std::size_t>();
        };
        auto text = [&](const char* key) -> std::optional<std::string> {
            if (!body.contains(key) || body[key].is_null()) return std::nullopt;
            if (!body[key].is_string()) bad_parameter(std::string(key) + " must be a string");
            return body[key].get<std::string>();
        };
        pipeline::PipelineConfig cfg;
        cfg.pattern_threshold = number("T");
        cfg.intensity_threshold = number("intensity_T");
        cfg.alphas.alpha1 = number("alpha1").value_or(cfg.alphas.alpha1);
        cfg.alphas.alpha2 = number("alpha2").value_or(cfg.alphas.alpha2);
        cfg.flag_cut = number("flag_cut").value_or(cfg.flag_cut);
        cfg.shape.branch_factor = count("branch_factor", config.default_shape.branch_factor);
        cfg.shape.leaf_capacity = count("leaf_capacity", config.default_shape.leaf_capacity);
        if (const auto e = text("entropy_form")) {
            if (*e == "standard") {
                cfg.entropy_form = segmentation::EntropyForm::standard;
            } else if (*e != "as_published") {
                bad_parameter("entropy_form must be as_published or standard");
            }
        }
        cfg.energy_type = text("energy_type").value_or("electricity");
        if (const auto from = text("from")) {
            cfg.range.from = warehouse::parse_range_start(store.zone(), *from);
            if (!cfg.range.from) bad_parameter("from must be a date or an ISO-8601 timestamp with offset");
        }
        if (const auto to = text("to")) {
            cfg.range.to = warehouse::parse_range_end(store.zone(), *to);
            if (!cfg.range.to) bad_parameter("to must be a date or an ISO-8601 timestamp with offset");
        }
        try {
            cfg.validate();
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::contract) bad_parameter(e.what());
            throw;
        }
        return cfg;
    }

    static json summary_json(Key id, const pipeline::PipelineOutput& out) {
        json sizes = json::array();
        for (const auto& c : out.result.clusters) sizes.push_back({{"cluster_id", c.cluster_id}, {"size", c.size()}});
        json skipped = json::object();
        for (const auto& [h, why] : out.quality.skipped) skipped[h] = why;
        return {{"id", id},
                {"status", "done"},
                {"clusters", std::move(sizes)},
                {"metrics", serialization::to_json(out.result.metrics)},
                {"config", serialization::to_json(out.result.config)},
                {"anomaly_count", out.result.anomalies.size()},
                {"quality",
                 {{"households", out.quality.households},
                  {"eligible_households", out.quality.eligible_households},
                  {"complete_days", out.quality.complete_days},
                  {"incomplete_days", out.quality.incomplete_days},
                  {"skipped", std::move(skipped)}}}};
    }

    Reply run(const httplib::Request& req) {
        json body = parse_body(req);
        const auto cfg = run_config(body);
        bool wait = param(req, "wait") == std::optional<std::string>("1") ||
                    param(req, "wait") == std::optional<std::string>("true");
        if (body.contains("wait")) {
            if (!body["wait"].is_boolean()) bad_parameter("wait must be a boolean");
            wait = wait || body["wait"].get<bool>();
        }
        if (store.count_facts(cfg.range, cfg.energy_type) == 0) {
            throw Error(ErrorKind::unprocessable, "no_eligible_households", "no consumption facts in the range");
        }
        body.erase("wait");
        const Key id = store.create_segmentation(body);
        if (wait) {
            std::optional<Error> failure;
            const auto out = execute(id, cfg, &failure);
            if (!out) throw *failure;
            return Reply{201, summary_json(id, *out)};
        }
        {
            std::lock_guard lk(jobs_mu);
            jobs.push_back({id, cfg});
        }
        jobs_cv.notify_all();
        return Reply{202,
                     {{"id", id},
                      {"status", "pending"},
                      {"status_url", "/api/segmentations/" + std::to_string(id) + "/status"}}};
    }

    Reply cluster_features(const httplib::Request& req) {
        const auto rec = store.fetch_segmentation(path_key(req));
        if (!rec.result) {
            throw Error(ErrorKind::conflict, "segmentation_not_ready",
                        "segmentation is " + warehouse::to_string(rec.status));
        }
        const auto box = parse_bbox(req);
        struct Flags {
            std::optional<int> cluster;
            double probability = 0.0;
            std::vector<std::string> dates;
            bool pattern = false;
            bool any = false;
        };
        std::map<std::string, Flags> by_household;
        for (const auto& c : rec.result->clusters) {
            for (const auto& m : c.members) by_household[m].cluster = c.cluster_id;
        }
        for (const auto& a : rec.result->anomalies) {
            auto& f = by_household[a.member];
            f.any = true;
            f.probability = std::max(f.probability, a.probability);
            if (a.date) f.dates.push_back(timeutil::format_date(*a.date));
            if (a.stage == segmentation::AnomalyStage::pattern) f.pattern = true;
        }
        std::vector<std::pair<std::string, json>> features;
        for (const auto& h : store.households()) {
            const auto it = by_household.find(h.household_id);
            if (it == by_household.end()) continue;
            if (box && !box->contains(h.location)) continue;
            const auto& f = it->second;
            features.emplace_back(
                h.household_id,
                geojson::feature(geojson::to_geometry(h.location),
                                 {{"household_id", h.household_id},
                                  {"cluster_id", optional_json(f.cluster)},
                                  {"anomaly", f.any},
                                  {"anomaly_probability", f.probability},
                                  {"pattern_anomaly", f.pattern},
                                  {"anomaly_dates", f.dates}},
                                 h.household_id));
        }
        return Reply{200, paginate(std::move(features), req, "clusters")};
    }

    // ---- stream insert

    Reply readings(const httplib::Request& req) {
        const json body = parse_body(req);
        const json* rows = &body;
        if (body.is_object() && body.contains("readings")) rows = &body["readings"];
        if (!rows->is_array()) bad_request("body must be an array of readings or {\"readings\": [...]}");

        std::vector<warehouse::ReadingRow> valid;
        std::vector<std::size_t> position;
        std::vector<warehouse::RejectedRow> malformed;
        for (std::size_t i = 0; i < rows->size(); ++i) {
            const json& r = (*rows)[i];
            const bool ok = r.is_object() && r.contains("meter_id") && r["meter_id"].is_string() &&
                            r.contains("timestamp") && r["timestamp"].is_string() && r.contains("energy_type") &&
                            r["energy_type"].is_string() && r.contains("consumption_kwh") &&
                            r["consumption_kwh"].is_number();
            if (!ok) {
                malformed.push_back({i + 1, "malformed_row", r.dump()});
                continue;
            }
            valid.push_back({r["meter_id"].get<std::string>(), r["timestamp"].get<std::string>(),
                             r["energy_type"].get<std::string>(), r["consumption_kwh"].get<double>()});
            position.push_back(i + 1);
        }
        auto report = store.ingest_reading_rows(valid, 0);
        for (auto& r : report.reasons) r.line = position[r.line];
        report.rejected += malformed.size();
        report.reasons.insert(report.reasons.end(), malformed.begin(), malformed.end());
        std::stable_sort(report.reasons.begin(), report.reasons.end(),
                         [](const auto& a, const auto& b) { return a.line < b.line; });

        const auto flagged = monitor.observe(report.facts);
        json reasons = json::array();
        for (const auto& r : report.reasons) reasons.push_back({{"row", r.line}, {"reason", r.reason}, {"detail", r.detail}});
        json anomalies = json::array();
        for (const auto& a : flagged) {
            anomalies.push_back({{"household_id", a.household_id},
                                 {"date", timeutil::format_date(a.date)},
                                 {"distance", a.distance},
                                 {"threshold", a.threshold},
                                 {"probability", a.probability}});
        }
        return Reply{200,
                     {{"accepted", report.accepted},
                      {"rejected", report.rejected},
                      {"updated", report.updated},
                      {"reasons", std::move(reasons)},
                      {"anomalies", std::move(anomalies)}}};
    }
};

Service::Service(warehouse::Warehouse& store, ServiceConfig config)
    : impl_(std::make_unique<Impl>(store, std::move(config))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw Error(ErrorKind::io, "io_error", "cannot listen on " + host + ":" + std::to_string(port));
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void Service::wait() {
    if (impl_->listener.joinable()) impl_->listener.join();
}

void Service::stop() { impl_->server.stop(); }

void Service::drain() { impl_->drain(); }

}  // namespace segsys::service
