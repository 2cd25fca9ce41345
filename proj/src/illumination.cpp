#include "cavity/illumination.hpp"

#include <algorithm>
#include <cmath>

namespace cavity {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const char* to_string(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::Static: return "static";
        case ScheduleMode::PeriodicCycle: return "periodic_cycle";
        case ScheduleMode::RandomSwitch: return "random_switch";
    }
    return "unknown";
}

const char* to_string(SwitchTrigger t) {
    return t == SwitchTrigger::Stationarity ? "stationarity" : "fixed_interval";
}

void Schedule::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::Validation, msg); };
    if (patterns.empty()) fail("schedule needs at least one pattern");
    if (max_switches < 1) fail("schedule max_switches must be >= 1");
    if (trigger == SwitchTrigger::FixedInterval && !(interval > 0.0)) {
        fail("fixed_interval trigger needs interval > 0");
    }
    if (!(stall_timeout >= 0.0)) fail("stall_timeout must be >= 0");
    if (!(stationarity.tol_v > 0.0) || !(stationarity.tol_f > 0.0)) {
        fail("stationarity tolerances must be > 0");
    }
    if (stationarity.window < 2) fail("stationarity window must hold >= 2 samples");
    if (stationarity.check_stride < 1) fail("stationarity check_stride must be >= 1");
}

const IlluminationPattern& next_pattern(const Schedule& schedule, std::size_t switch_index, Rng& rng) {
    if (switch_index >= schedule.max_switches) {
        throw Error(ErrorCode::ScheduleExhausted,
                    "switch index " + std::to_string(switch_index) + " past max_switches");
    }
    if (schedule.patterns.empty()) throw Error(ErrorCode::Validation, "schedule has no patterns");
    switch (schedule.mode) {
        case ScheduleMode::Static: return schedule.patterns.front();
        case ScheduleMode::PeriodicCycle:
            return schedule.patterns[switch_index % schedule.patterns.size()];
        case ScheduleMode::RandomSwitch: {
            std::uniform_int_distribution<std::size_t> pick(0, schedule.patterns.size() - 1);
            return schedule.patterns[pick(rng)];
        }
    }
    return schedule.patterns.front();
}

IlluminationPattern make_binary_pattern(std::span<const int> mask, double eta, std::string id) {
    if (mask.empty()) throw Error(ErrorCode::Validation, "pattern mask must be non-empty");
    std::vector<ModeDrive> entries;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] != 0) entries.push_back({static_cast<int>(i) + 1, eta});
    }
    return IlluminationPattern(std::move(entries), std::move(id));
}

std::vector<int> comb_master_set(const CombSpec& spec) {
    std::vector<int> orders(static_cast<std::size_t>(std::max(spec.master_count, 0)));
    for (int i = 0; i < spec.master_count; ++i) orders[i] = spec.first_order + i * spec.spacing;
    return orders;
}

std::vector<IlluminationPattern> make_comb_patterns(const CombSpec& spec, Rng& rng) {
    if (spec.first_order < 1 || spec.spacing < 1 || spec.master_count < 1) {
        throw Error(ErrorCode::Validation, "comb needs first_order, spacing, master_count >= 1");
    }
    if (spec.modes_per_pattern < 1 || spec.modes_per_pattern > spec.master_count) {
        throw Error(ErrorCode::Validation, "modes_per_pattern must lie in [1, master_count]");
    }
    const std::vector<int> master = comb_master_set(spec);
    std::vector<IlluminationPattern> patterns;
    for (int p = 0; p < spec.pattern_count; ++p) {
        // partial Fisher-Yates: the first modes_per_pattern slots form the subset
        std::vector<int> pool = master;
        for (int i = 0; i < spec.modes_per_pattern; ++i) {
            std::uniform_int_distribution<int> pick(i, spec.master_count - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        std::vector<ModeDrive> entries;
        for (int i = 0; i < spec.modes_per_pattern; ++i) entries.push_back({pool[i], spec.eta});
        patterns.emplace_back(std::move(entries), "comb" + std::to_string(p + 1));
    }
    return patterns;
}

}  // namespace cavity
