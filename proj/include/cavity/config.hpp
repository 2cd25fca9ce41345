/**
 * @file config.hpp
 * @brief JSON run configuration: parsing, validation and built-in presets.
 *
 * Top-level keys: unit, system, patterns, comb, schedule, integrator, noise,
 * seed, initial, equilibria, diagnostics, runs. Any other key, at any level,
 * is rejected.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavity/dynamics.hpp"
#include "cavity/equilibria.hpp"
#include "cavity/illumination.hpp"
#include "cavity/model.hpp"

namespace cavity {

struct RunConfig {
    std::string unit = "kappa";
    SystemParams params;
    SystemState initial;
    Schedule schedule;
    RunOptions run;
    EquilibriaOptions equilibria;
    std::uint64_t seed = 0;
    int runs = 1;
    /// Fully explicit configuration: generated patterns expanded, derived
    /// seeds filled in. Feeding it back to build_system reproduces this config.
    nlohmann::json resolved;
};

/// Validates and resolves a configuration document. Throws Error(Validation).
RunConfig build_system(const nlohmann::json& config);

/// Names accepted by preset().
std::vector<std::string> preset_names();

/// Built-in parameter sets; throws Error(Validation) for unknown names.
nlohmann::json preset(const std::string& name);

/// RFC 7386 merge of `overrides` onto `base`.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overrides);

}  // namespace cavity
