#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cavity/equilibria.hpp"
#include "cavity/illumination.hpp"
#include "cavity/model.hpp"

namespace cavity {

/// CSV conventions: comma separated, header row, 17 significant digits.
void write_equilibria_csv(std::ostream& os, std::span<const Equilibrium> equilibria, int n_particles);
void write_landscape_csv(std::ostream& os, const LandscapeGrid& grid);

/// One row per sample: t, x_*, p_*, P_tot, Theta_tot, N0, N0_pairs,
/// Theta_n{order} for every mode in the schedule, pattern_id.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Schedule& schedule);
void write_events_csv(std::ostream& os, const Trajectory& traj);

/// One row per completed illumination phase: index, end time, pattern, P_tot
/// at the phase end and its time average over the phase.
void write_phases_csv(std::ostream& os, const Trajectory& traj);

/// Opens `path` for writing; throws Error(Io) on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace cavity
