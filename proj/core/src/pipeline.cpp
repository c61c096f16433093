#include "segsys/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "segsys/errors.hpp"

namespace segsys::pipeline {

using namespace segmentation;

void PipelineConfig::validate() const {
    auto positive = [](const std::optional<double>& t, const char* name) {
        if (t && !(*t > 0.0 && std::isfinite(*t))) {
            throw Error(ErrorKind::invalid_argument, "invalid_threshold", std::string(name) + " must be > 0");
        }
    };
    positive(pattern_threshold, "pattern threshold");
    positive(intensity_threshold, "intensity threshold");
    alphas.validate();
    for (const auto& [_, a] : household_alphas) a.validate();
    if (shape.branch_factor < 2 || shape.leaf_capacity < 1) {
        throw Error(ErrorKind::invalid_argument, "invalid_shape", "branch factor must be >= 2 and leaf capacity >= 1");
    }
    if (!(flag_cut > 0.0 && flag_cut <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "invalid_flag_cut", "flag cut must lie in (0, 1]");
    }
}

namespace {

constexpr double kLoneThreshold = 1e-9;

struct HouseholdInput {
    std::string id;
    std::vector<LoadProfile> days;
};

struct HouseholdOutcome {
    std::optional<IntensityResult> intensity;
    std::optional<NormalizedProfile> representative;
    std::string skip_reason;
};

HouseholdOutcome step_one(const HouseholdInput& in, const PipelineConfig& config) {
    HouseholdOutcome out;
    std::vector<HourlyVector> vectors;
    for (const auto& d : in.days) vectors.push_back(d.values);
    double t;
    if (config.intensity_threshold) {
        t = *config.intensity_threshold;
    } else if (vectors.size() >= 2) {
        t = default_threshold(vectors);
    } else {
        out.skip_reason = "insufficient_days";
        return out;
    }
    SegmentationParams params;
    params.shape = config.shape;
    const auto custom = config.household_alphas.find(in.id);
    params.alphas = custom == config.household_alphas.end() ? config.alphas : custom->second;
    params.flag_cut = config.flag_cut;
    out.intensity = segment_intensity(in.days, t, params);
    try {
        out.representative = normalize_profile(representative_profile(*out.intensity));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::unprocessable) {
            out.skip_reason = "all_days_anomalous";
        } else if (e.kind() == ErrorKind::invalid_argument) {
            out.skip_reason = "zero_consumption";
        } else {
            throw;
        }
    }
    return out;
}

}  // namespace

PipelineOutput run_segmentation(const warehouse::Warehouse& store, const PipelineConfig& config) {
    config.validate();
    warehouse::ConsumptionFilter filter;
    filter.range = config.range;
    filter.energy_type = config.energy_type;
    const auto days = store.household_days(filter);

    PipelineOutput output;
    auto& quality = output.quality;
    std::vector<HouseholdInput> inputs;
    for (const auto& d : days) {
        if (inputs.empty() || inputs.back().id != d.id) {
            inputs.push_back({d.id, {}});
            ++quality.households;
        }
        if (!d.complete()) {
            ++quality.incomplete_days;
            continue;
        }
        ++quality.complete_days;
        inputs.back().days.push_back(LoadProfile{d.id, d.date, d.values});
    }
    std::erase_if(inputs, [&](const HouseholdInput& h) {
        if (!h.days.empty()) return false;
        quality.skipped[h.id] = "no_complete_days";
        return true;
    });

    // Households are independent; results land in input order.
    std::vector<HouseholdOutcome> outcomes(inputs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            try {
                outcomes[i] = step_one(inputs[i], config);
            } catch (...) {
                std::lock_guard lk(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned hw = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    const auto n_threads = static_cast<unsigned>(std::min<std::size_t>(hw, inputs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<CustomerProfile> representatives;
    std::vector<Anomaly> intensity_anomalies;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.intensity) {
            for (const auto& day : o.intensity->days) {
                if (day.anomalous) {
                    intensity_anomalies.push_back({inputs[i].id, day.date, day.probability, AnomalyStage::intensity});
                }
            }
        }
        if (o.representative) {
            representatives.push_back({inputs[i].id, *o.representative});
        } else {
            quality.skipped[inputs[i].id] = o.skip_reason;
        }
    }
    quality.eligible_households = representatives.size();
    if (representatives.empty()) {
        throw Error(ErrorKind::unprocessable, "no_eligible_households",
                    "no household has enough complete, non-anomalous days in range");
    }

    double t;
    if (config.pattern_threshold) {
        t = *config.pattern_threshold;
    } else if (representatives.size() >= 2) {
        std::vector<HourlyVector> shares;
        for (const auto& r : representatives) shares.push_back(r.profile.shares);
        t = default_threshold(shares);
    } else {
        t = kLoneThreshold;  // one representative forms one cluster for any T
    }
    SegmentationParams params;
    params.shape = config.shape;
    params.alphas = config.alphas;
    params.flag_cut = config.flag_cut;
    params.entropy_form = config.entropy_form;
    output.result = segment_patterns(representatives, t, params);
    output.result.config.intensity_threshold = config.intensity_threshold;
    output.result.anomalies.insert(output.result.anomalies.begin(), intensity_anomalies.begin(),
                                   intensity_anomalies.end());
    return output;
}

}  // namespace segsys::pipeline
