#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "segsys/cftree.hpp"
#include "segsys/segmentation.hpp"
#include "segsys/warehouse.hpp"

namespace segsys::online {

struct OnlineConfig {
    cftree::TreeShape shape{};
    segmentation::AnomalyConfig alphas{};
    double flag_cut = segmentation::kDefaultFlagCut;
    std::optional<double> threshold;  // unset: default helper over each household's history
    std::string energy_type = "electricity";
};

struct OnlineAnomaly {
    std::string household_id;
    segmentation::Date date;
    double distance;
    double threshold;
    double probability;
};

// Per-household intensity trees fed as days complete. A household's tree is
// built lazily from its complete history (at least two days, or one with an
// explicit threshold); each later day is scored against the tree and then
// inserted, exactly once.
class OnlineMonitor {
public:
    OnlineMonitor(const warehouse::Warehouse& store, OnlineConfig config = {});

    // Call after the facts are committed. Returns the newly completed days
    // scored at or above the flag cut, ordered by (household, date).
    std::vector<OnlineAnomaly> observe(std::span<const warehouse::AcceptedFact> facts);

    bool established(const std::string& household_id) const;
    // Drops all trees, e.g. after a bulk load.
    void reset();

private:
    struct Household {
        std::optional<cftree::CFTree> tree;
        std::set<std::chrono::sys_days> inserted;
    };

    void bootstrap(const std::string& household_id, Household& state,
                   const std::set<std::chrono::sys_days>& excluded);

    const warehouse::Warehouse& store_;
    OnlineConfig config_;
    mutable std::mutex mu_;
    std::map<std::string, Household> households_;
};

}  // namespace segsys::online
