#pragma once

#include <memory>
#include <string>

#include "segsys/cftree.hpp"
#include "segsys/errors.hpp"
#include "segsys/online.hpp"
#include "segsys/warehouse.hpp"

namespace segsys::service {

struct ServiceConfig {
    std::string cors_origin = "*";  // empty: no CORS headers
    cftree::TreeShape default_shape{};
    std::size_t page_size = 10000;  // feature collections above this paginate
    int min_zoom = 10;
    int max_zoom = 20;
    online::OnlineConfig online{};
    std::size_t max_body_bytes = 64u << 20;
};

// JSON/GeoJSON API over a warehouse. Every response body is
// {"data": ..., "error": null} or {"data": null, "error": {"code", "message"}}.
class Service {
public:
    explicit Service(warehouse::Warehouse& store, ServiceConfig config = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread. Port 0 picks a free port;
    // returns the bound port. Throws io on bind failure.
    int start(const std::string& host, int port);
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();
    // Finishes queued segmentation runs.
    void drain();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Status for an ErrorKind.
int http_status(ErrorKind kind);

}  // namespace segsys::service
