// segsys: ingest, synthesize, cluster, serve.
// Exit codes: 0 ok, 1 I/O failure, 2 validation failure or nothing to process.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "segsys/errors.hpp"
#include "segsys/pipeline.hpp"
#include "segsys/serialization.hpp"
#include "segsys/service.hpp"
#include "segsys/synth.hpp"
#include "segsys/warehouse.hpp"

namespace fs = std::filesystem;
using namespace segsys;

namespace {

constexpr int kOk = 0;
constexpr int kIo = 1;
constexpr int kInvalid = 2;

constexpr const char* kDatabaseFile = "segsys.db";

struct Globals {
    std::string data_dir = ".";
    std::string tz = "UTC";
    std::size_t branch = 6;
    std::size_t leaf = 3;
};

int exit_code(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::io:
        case ErrorKind::storage: return kIo;
        case ErrorKind::contract:
        case ErrorKind::internal: return kIo;
        default: return kInvalid;
    }
}

warehouse::Warehouse open_store(const Globals& g) {
    std::error_code ec;
    fs::create_directories(g.data_dir, ec);
    if (ec) throw Error(ErrorKind::io, "io_error", "cannot create data directory " + g.data_dir + ": " + ec.message());
    warehouse::WarehouseOptions opt;
    opt.path = (fs::path(g.data_dir) / kDatabaseFile).string();
    opt.local_zone = g.tz;
    return warehouse::Warehouse(opt);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "io_error", "cannot open " + path);
    return in;
}

// Returns the number of rejected rows.
std::size_t print_report(const std::string& label, const warehouse::IngestReport& r) {
    std::cout << label << ": accepted " << r.accepted << ", updated " << r.updated << ", rejected " << r.rejected
              << "\n";
    for (const auto& [reason, n] : r.reason_counts()) std::cout << "  " << reason << ": " << n << "\n";
    constexpr std::size_t kShown = 20;
    for (std::size_t i = 0; i < r.reasons.size() && i < kShown; ++i) {
        const auto& row = r.reasons[i];
        std::cout << "  line " << row.line << ": " << row.reason;
        if (!row.detail.empty()) std::cout << " (" << row.detail << ")";
        std::cout << "\n";
    }
    if (r.reasons.size() > kShown) std::cout << "  ... " << r.reasons.size() - kShown << " more\n";
    return r.rejected;
}

struct IngestArgs {
    std::string readings, households, meters;
    bool lenient = false;
};

int ingest(const Globals& g, const IngestArgs& a) {
    if (a.readings.empty() && a.households.empty() && a.meters.empty()) {
        std::cerr << "ingest: nothing to do; pass --readings, --households or --meters\n";
        return kInvalid;
    }
    // Open every input before touching the store.
    std::optional<std::ifstream> hh, mt, rd;
    if (!a.households.empty()) hh = open_input(a.households);
    if (!a.meters.empty()) mt = open_input(a.meters);
    if (!a.readings.empty()) rd = open_input(a.readings);

    auto store = open_store(g);
    std::size_t rejected = 0;
    if (hh) rejected += print_report("households", store.ingest_households(*hh));
    if (mt) rejected += print_report("meters", store.ingest_meters(*mt));
    if (rd) rejected += print_report("readings", store.ingest_readings(*rd));
    const auto s = store.fact_summary();
    std::cout << "facts: " << s.count << ", total " << s.total_kwh << " kWh\n";
    return rejected > 0 && !a.lenient ? kInvalid : kOk;
}

struct SynthArgs {
    std::string spec;
    std::string out;
};

int synthesize(const SynthArgs& a) {
    synth::SyntheticSpec spec;
    if (!a.spec.empty()) {
        auto in = open_input(a.spec);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::invalid_argument, "invalid_spec", std::string("spec is not JSON: ") + e.what());
        }
        spec = synth::SyntheticSpec::from_json(j);
    }
    spec.validate();
    const auto data = synth::generate(spec);
    synth::write_dataset(data, a.out);
    std::cout << "households: " << data.households.size() << "\nreadings: " << data.readings.size()
              << "\ninjected anomalies: " << data.truth.anomalies.size() << "\nwrote " << a.out << "\n";
    return kOk;
}

struct ClusterArgs {
    std::optional<double> t, intensity_t, alpha1, alpha2, flag_cut;
    std::string from, to, entropy_form = "as_published", energy_type = "electricity";
    unsigned threads = 0;
    bool json = false;
};

int cluster(const Globals& g, const ClusterArgs& a) {
    auto store = open_store(g);
    pipeline::PipelineConfig cfg;
    cfg.shape = {g.branch, g.leaf};
    cfg.pattern_threshold = a.t;
    cfg.intensity_threshold = a.intensity_t;
    if (a.alpha1) cfg.alphas.alpha1 = *a.alpha1;
    if (a.alpha2) cfg.alphas.alpha2 = *a.alpha2;
    if (a.flag_cut) cfg.flag_cut = *a.flag_cut;
    cfg.entropy_form = a.entropy_form == "standard" ? segmentation::EntropyForm::standard
                                                    : segmentation::EntropyForm::as_published;
    cfg.energy_type = a.energy_type;
    cfg.threads = a.threads;
    if (!a.from.empty()) {
        cfg.range.from = warehouse::parse_range_start(store.zone(), a.from);
        if (!cfg.range.from) throw Error(ErrorKind::invalid_argument, "invalid_parameter", "bad --from " + a.from);
    }
    if (!a.to.empty()) {
        cfg.range.to = warehouse::parse_range_end(store.zone(), a.to);
        if (!cfg.range.to) throw Error(ErrorKind::invalid_argument, "invalid_parameter", "bad --to " + a.to);
    }
    cfg.validate();

    const auto out = pipeline::run_segmentation(store, cfg);
    const auto id = store.store_segmentation(out.result);
    const auto& r = out.result;
    if (a.json) {
        auto j = serialization::to_json(r);
        j["id"] = id;
        std::cout << j.dump(2) << "\n";
        return kOk;
    }
    std::cout << "segmentation " << id << "\n"
              << "households: " << out.quality.households << " (eligible " << out.quality.eligible_households
              << ")\ndays: " << out.quality.complete_days << " complete, " << out.quality.incomplete_days
              << " incomplete\n"
              << "pattern threshold: " << r.config.pattern_threshold << "\nclusters: " << r.clusters.size() << "\n";
    for (const auto& c : r.clusters) std::cout << "  cluster " << c.cluster_id << ": " << c.size() << "\n";
    auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("undefined"); };
    std::cout << "entropy: " << r.metrics.entropy << "\nsize stddev: " << show(r.metrics.size_stddev)
              << "\nestimated threshold: " << show(r.metrics.estimated_threshold) << "\n";
    std::size_t pattern = 0;
    for (const auto& an : r.anomalies) pattern += an.stage == segmentation::AnomalyStage::pattern;
    std::cout << "anomalies: " << r.anomalies.size() << " (" << r.anomalies.size() - pattern << " daily, " << pattern
              << " pattern)\n";
    for (const auto& [h, why] : out.quality.skipped) std::cout << "  skipped " << h << ": " << why << "\n";
    return kOk;
}

struct ServeArgs {
    std::string listen = "127.0.0.1:8080";
    std::string cors = "*";
};

int serve(const Globals& g, const ServeArgs& a) {
    const auto colon = a.listen.rfind(':');
    int port = -1;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            port = std::stoi(a.listen.substr(colon + 1), &used);
            if (used != a.listen.size() - colon - 1) port = -1;
        } catch (const std::exception&) {
            port = -1;
        }
    }
    if (port < 0 || port > 65535) {
        std::cerr << "serve: --listen must be HOST:PORT\n";
        return kInvalid;
    }
    const auto host = a.listen.substr(0, colon);

    // Signals are taken synchronously by one thread; the rest never see them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto store = open_store(g);
    service::ServiceConfig cfg;
    cfg.cors_origin = a.cors;
    cfg.default_shape = {g.branch, g.leaf};
    cfg.online.shape = cfg.default_shape;
    service::Service svc(store, cfg);
    const int bound = svc.start(host, port);
    std::cout << "listening on http://" << host << ":" << bound << std::endl;

    std::thread([&svc, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        svc.stop();
    }).detach();
    svc.wait();
    std::cout << "stopped" << std::endl;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart-meter customer segmentation: ingest, synthesize, cluster, serve"};
    app.set_config("--config", "", "Key-value file mirroring the command-line flags");
    app.require_subcommand(1);

    Globals g;
    app.add_option("--data", g.data_dir, "Data directory holding the warehouse")->envname("SEGSYS_DATA");
    app.add_option("--tz", g.tz, "Local time zone as a POSIX TZ string, e.g. CET-1CEST,M3.5.0,M10.5.0/3")
        ->envname("SEGSYS_TZ");
    app.add_option("--branch", g.branch, "CF-tree branching factor B")->check(CLI::Range(2, 1 << 16));
    app.add_option("--leaf", g.leaf, "CF-tree leaf capacity L")->check(CLI::Range(1, 1 << 16));

    IngestArgs ia;
    auto* ingest_cmd = app.add_subcommand("ingest", "Load households, meters and readings CSV files");
    ingest_cmd->add_option("--readings", ia.readings, "Readings CSV");
    ingest_cmd->add_option("--households", ia.households, "Households CSV");
    ingest_cmd->add_option("--meters", ia.meters, "Meters CSV");
    ingest_cmd->add_flag("--lenient", ia.lenient, "Exit 0 even when rows are rejected");

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
    synth_cmd->add_option("--spec", sa.spec, "SyntheticSpec JSON file (defaults when omitted)");
    synth_cmd->add_option("--out", sa.out, "Output directory")->required();

    ClusterArgs ca;
    auto* cluster_cmd = app.add_subcommand("cluster", "Run the two-step segmentation and store the result");
    cluster_cmd->add_option("--t", ca.t, "Pattern threshold T (default: data-driven)");
    cluster_cmd->add_option("--intensity-t", ca.intensity_t, "Daily-vector threshold (default: data-driven)");
    cluster_cmd->add_option("--alpha1", ca.alpha1, "Anomaly ramp start, multiples of T");
    cluster_cmd->add_option("--alpha2", ca.alpha2, "Anomaly ramp end, multiples of T");
    cluster_cmd->add_option("--flag-cut", ca.flag_cut, "Probability at which a day is anomalous");
    cluster_cmd->add_option("--from", ca.from, "First local date or timestamp");
    cluster_cmd->add_option("--to", ca.to, "Last local date (inclusive) or end timestamp (exclusive)");
    cluster_cmd->add_option("--entropy-form", ca.entropy_form, "Cluster entropy form")
        ->check(CLI::IsMember({"as_published", "standard"}));
    cluster_cmd->add_option("--energy-type", ca.energy_type, "Energy type to segment");
    cluster_cmd->add_option("--threads", ca.threads, "Worker threads for step 1 (0: all cores)");
    cluster_cmd->add_flag("--json", ca.json, "Print the stored result as JSON");

    ServeArgs va;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--listen", va.listen, "HOST:PORT (port 0 picks a free port)")->envname("SEGSYS_LISTEN");
    serve_cmd->add_option("--cors", va.cors, "Access-Control-Allow-Origin value (empty disables)")
        ->envname("SEGSYS_CORS");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    try {
        if (*ingest_cmd) return ingest(g, ia);
        if (*synth_cmd) return synthesize(sa);
        if (*cluster_cmd) return cluster(g, ca);
        if (*serve_cmd) return serve(g, va);
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kInvalid;
}
