#include "segsys/online.hpp"

#include "segsys/errors.hpp"

namespace segsys::online {

using std::chrono::sys_days;

OnlineMonitor::OnlineMonitor(const warehouse::Warehouse& store, OnlineConfig config)
    : store_(store), config_(std::move(config)) {
    config_.alphas.validate();
    if (config_.threshold && !(*config_.threshold > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "invalid_threshold", "threshold must be > 0");
    }
}

bool OnlineMonitor::established(const std::string& household_id) const {
    std::lock_guard lk(mu_);
    const auto it = households_.find(household_id);
    return it != households_.end() && it->second.tree.has_value();
}

void OnlineMonitor::reset() {
    std::lock_guard lk(mu_);
    households_.clear();
}

void OnlineMonitor::bootstrap(const std::string& household_id, Household& state,
                              const std::set<sys_days>& excluded) {
    warehouse::ConsumptionFilter filter;
    filter.household_ids = {household_id};
    filter.energy_type = config_.energy_type;
    std::vector<segmentation::HourlyVector> history;
    std::vector<sys_days> dates;
    for (const auto& d : store_.household_days(filter)) {
        if (!d.complete() || excluded.contains(sys_days{d.date})) continue;
        history.push_back(d.values);
        dates.push_back(sys_days{d.date});
    }
    const std::size_t needed = config_.threshold ? 1 : 2;
    if (history.size() < needed) return;
    const double t = config_.threshold ? *config_.threshold : segmentation::default_threshold(history);
    cftree::CFTree tree(segmentation::kHoursPerDay, t, config_.shape);
    for (std::size_t i = 0; i < history.size(); ++i) {
        tree.insert(history[i]);
        state.inserted.insert(dates[i]);
    }
    state.tree = std::move(tree);
}

std::vector<OnlineAnomaly> OnlineMonitor::observe(std::span<const warehouse::AcceptedFact> facts) {
    std::map<std::string, std::set<sys_days>> touched;
    for (const auto& f : facts) touched[f.household_id].insert(sys_days{store_.zone().to_local(f.time).date});

    std::vector<OnlineAnomaly> out;
    std::lock_guard lk(mu_);
    for (const auto& [household_id, dates] : touched) {
        auto& state = households_[household_id];
        if (!state.tree) {
            bootstrap(household_id, state, dates);
            if (!state.tree) continue;
        }
        warehouse::ConsumptionFilter filter;
        filter.household_ids = {household_id};
        filter.energy_type = config_.energy_type;
        filter.range = warehouse::local_day_range(store_.zone(), segmentation::Date{*dates.begin()},
                                                  segmentation::Date{*dates.rbegin()});
        for (const auto& day : store_.household_days(filter)) {
            const sys_days key{day.date};
            if (!dates.contains(key) || !day.complete() || state.inserted.contains(key)) continue;
            auto& tree = *state.tree;
            const double t = tree.threshold();
            const auto outcome = tree.insert(day.values);
            state.inserted.insert(key);
            const double p = segmentation::anomaly_probability(outcome.distance, t, config_.alphas);
            if (p >= config_.flag_cut) out.push_back({household_id, day.date, outcome.distance, t, p});
        }
    }
    return out;
}

}  // namespace segsys::online
