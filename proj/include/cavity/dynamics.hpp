/**
 * @file dynamics.hpp
 * @brief Time evolution of the coupled particle-field system.
 *
 * Two schemes are provided:
 *  - full: positions, momenta and complex field amplitudes are co-integrated
 *    with linear friction -mu p on the momenta;
 *  - overdamped: fields follow the positions adiabatically and positions move
 *    with velocity F / mu.
 *
 * Momentum noise is applied as discrete Gaussian kicks at a fixed
 * simulated-time interval.
 */
#pragma once

#include <cstdint>
#include <span>

#include "cavity/illumination.hpp"
#include "cavity/model.hpp"

namespace cavity {

enum class Scheme { Full, Overdamped };

const char* to_string(Scheme s);

struct IntegratorOptions {
    Scheme scheme = Scheme::Full;
    double dt = 0.01;
    double max_time = 1.0;
    std::size_t sample_stride = 100;
    int order = 4;  // full scheme only: 2 (Strang) or 4 (triple-jump composition)

    void validate(const SystemParams& params) const;
};

/// min(0.02 / kappa, 0.02 / omega_R)
double default_time_step(const SystemParams& params);

struct NoiseOptions {
    bool enabled = false;
    double kick_interval = 1.0;
    double kick_sigma = 0.0;

    void validate() const;
};

/// One step of the coupled particle-field equations.
///
/// The order-2 step is a Strang splitting: half drift of the positions, exact evolution of
/// (fields, momenta) at frozen positions over dt, half drift. At frozen
/// positions the field equation is linear with constant coefficients, so the
/// field and the momentum impulse it produces are evaluated in closed form.
/// Friction enters as exact exp(-mu dt / 2) factors on either side of that
/// flow. The step is symmetric in time, so composing three of them with
/// weights w, 1 - 2w, w (w = 1 / (2 - 2^(1/3))) gives the order-4 step.
/// Throws Error(NonFinite) if the state leaves the finite range.
SystemState step_full(const SystemState& state, const IlluminationPattern& pattern,
                      const SystemParams& params, double dt, int order = 4);

/// Explicit Euler step x <- x + F(x) / mu * dt with adiabatic fields. Requires mu > 0.
std::vector<double> step_overdamped(std::span<const double> positions,
                                   const IlluminationPattern& pattern, const SystemParams& params,
                                   double dt);

/// Adds an independent N(0, sigma^2) increment to every momentum.
SystemState apply_kicks(const SystemState& state, const NoiseOptions& noise, Rng& rng);

/// True iff, over every state in the window, the particle speed (from momenta
/// and from position differences between consecutive states) stays below
/// tol_v and every adiabatic force component stays below tol_f.
bool detect_stationary(std::span<const SystemState> window, const IlluminationPattern& pattern,
                       const SystemParams& params, double tol_v, double tol_f);

struct RunOptions {
    IntegratorOptions integrator;
    NoiseOptions noise;
    std::uint64_t seed = 0;
    double cluster_epsilon = 0.0;  // 0 selects 1e-2 of the shortest scheduled wavelength
};

/// Runs one trajectory: integration steps interleaved with kicks every
/// kick_interval of simulated time, schedule switching and diagnostic
/// sampling every sample_stride steps. Stops at max_time or once the
/// schedule's phases are used up (static schedules run to max_time).
///
/// Throws Error(NonFinite) or Error(ScheduleStall) when a stationarity-gated
/// phase outlives the schedule's stall_timeout.
Trajectory run_trajectory(const SystemState& initial, const Schedule& schedule,
                          const SystemParams& params, const RunOptions& options);

/// Overdamped relaxation under a single pattern until stationary per `criteria`;
/// returns the relaxed positions. Throws Error(ScheduleStall) after max_time.
std::vector<double> relax(std::span<const double> positions, const IlluminationPattern& pattern,
                          const SystemParams& params, double dt, const StationarityCriteria& criteria,
                          double max_time);

}  // namespace cavity
