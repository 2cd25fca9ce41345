/**
 * @file illumination.hpp
 * @brief Illumination pattern construction and piecewise-constant sequencing.
 */
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cavity/model.hpp"

namespace cavity {

using Rng = std::mt19937_64;

/// Independent, reproducible stream seed derived from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

enum class ScheduleMode { Static, PeriodicCycle, RandomSwitch };
enum class SwitchTrigger { Stationarity, FixedInterval };

const char* to_string(ScheduleMode m);
const char* to_string(SwitchTrigger t);

/// Thresholds for declaring a configuration stationary.
struct StationarityCriteria {
    double tol_v = 1e-6;    // max particle speed
    double tol_f = 1e-6;    // max light-force component
    std::size_t window = 5; // consecutive checks that must all pass
    std::size_t check_stride = 10;  // integration steps between checks
};

struct Schedule {
    ScheduleMode mode = ScheduleMode::Static;
    std::vector<IlluminationPattern> patterns;
    SwitchTrigger trigger = SwitchTrigger::Stationarity;
    double interval = 0.0;          // fixed_interval trigger
    std::size_t max_switches = 1;   // number of illumination phases
    std::uint64_t seed = 0;         // random_switch draws
    double stall_timeout = 0.0;     // 0 = no timeout; otherwise max phase duration
    StationarityCriteria stationarity;

    /// Throws Error(Validation) on an empty pattern list or inconsistent options.
    void validate() const;
};

/// Pattern for illumination phase `switch_index`. Only random_switch consumes `rng`.
const IlluminationPattern& next_pattern(const Schedule& schedule, std::size_t switch_index, Rng& rng);

/// Mode i+1 pumped at `eta` wherever mask[i] is set.
IlluminationPattern make_binary_pattern(std::span<const int> mask, double eta, std::string id = {});

struct CombSpec {
    int first_order = 1003;
    int spacing = 7;
    int master_count = 100;
    int pattern_count = 5;
    int modes_per_pattern = 50;
    double eta = 0.0;
};

std::vector<int> comb_master_set(const CombSpec& spec);

/// Uniform random subsets of the arithmetic master comb, all at strength eta.
std::vector<IlluminationPattern> make_comb_patterns(const CombSpec& spec, Rng& rng);

}  // namespace cavity
