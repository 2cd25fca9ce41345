/**
 * @file cli.hpp
 * @brief The `cavity-adapt` commands as library functions.
 *
 * Each command writes its data files into an output directory and finishes
 * with `manifest.json` (keys: config, seed, version, outputs, duration_s).
 * The manifest is written last and the exit status is 0 iff it was written.
 * Failures print {"error": CODE, "message": TEXT} to the error stream.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavity/config.hpp"

namespace cavity {

struct CommandLine {
    std::string command;
    std::optional<std::filesystem::path> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
    std::optional<int> runs;
};

/// Preset (if any), then the config file merged on top, then --seed.
nlohmann::json load_config(const CommandLine& cl);

int cmd_equilibria(const nlohmann::json& config, const std::filesystem::path& out_dir, std::ostream& err);
int cmd_run(const nlohmann::json& config, const std::filesystem::path& out_dir, std::ostream& err);
int cmd_ensemble(const nlohmann::json& config, const std::filesystem::path& out_dir, int n_runs,
                 std::ostream& err);

/// Parses argv and dispatches. Returns the process exit status.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

struct RunSummary {
    std::uint64_t seed = 0;
    double final_p_tot = 0.0;
    double final_theta_tot = 0.0;
    int final_n0 = 0;
    /// Means of the time-averaged phase P_tot over the first and last 10% of phases
    /// (over samples when there are fewer than 10 phases).
    double first_decile_p_tot = 0.0;
    double last_decile_p_tot = 0.0;
    /// Relaxed P_tot under the first pattern, starting from the initial and
    /// from the final configuration (overdamped switching runs only).
    std::optional<double> memory_first_application;
    std::optional<double> memory_reapplication;
};

RunSummary summarize_run(const RunConfig& rc, const Trajectory& traj);

/// Config for realization `index` of an ensemble: seed derived from the
/// master seed; initial positions and switch draws follow from it.
nlohmann::json realization_config(const nlohmann::json& resolved, std::size_t index);

struct EnsembleResult {
    std::vector<RunConfig> configs;
    std::vector<Trajectory> trajectories;
    std::vector<RunSummary> summaries;
    std::vector<std::string> errors;  // empty string for completed runs
    nlohmann::json aggregate;
};

/// Runs n_runs realizations on up to `threads` worker threads. The result
/// does not depend on the thread count or completion order.
EnsembleResult run_ensemble(const nlohmann::json& config, int n_runs, unsigned threads);

/// CAVITY_ADAPT_THREADS if set and positive, otherwise hardware concurrency.
unsigned thread_budget();

}  // namespace cavity
