/**
 * @file optics.hpp
 * @brief Cavity field amplitudes, light forces and scattered intensity.
 *
 * Every function here is pure. Friction and momentum noise are not part of
 * the light force; they are added by the integrators in dynamics.hpp.
 */
#pragma once

#include <span>
#include <vector>

#include "cavity/model.hpp"

namespace cavity {

struct FieldSolution {
    std::vector<ModeAmplitude> amplitudes;  // pattern order
    double intensity = 0.0;                 // sum of |alpha_n|^2
};

/// sin(n x) and cos(n x) with x reduced modulo 2*pi first, so that the phase
/// error does not grow with |x| for high mode orders.
struct Phase {
    double sin = 0.0;
    double cos = 1.0;
};
Phase mode_phase(double x, int order);

/// Steady-state field of every pumped mode for frozen positions:
/// alpha_n = eta_n S_n / (delta_c - U0 sum_j sin^2(n x_j) + i kappa),
/// with S_n = sum_j sin(n x_j).
FieldSolution adiabatic_field(std::span<const double> positions, const IlluminationPattern& pattern,
                              const SystemParams& params);

/// Right-hand side of the field equation (field noise omitted). The state's
/// fields must be keyed to `pattern`.
std::vector<Complex> field_derivative(const SystemState& state, const IlluminationPattern& pattern,
                                      const SystemParams& params);

/// Light force on every particle for the given field amplitudes.
std::vector<double> force(std::span<const double> positions, std::span<const ModeAmplitude> fields,
                          const IlluminationPattern& pattern, const SystemParams& params);

/// force() evaluated at the adiabatic field; a function of positions only.
std::vector<double> adiabatic_force(std::span<const double> positions,
                                    const IlluminationPattern& pattern, const SystemParams& params);

/// Classical Hamiltonian generating the coupled particle-field equations.
/// Conserved by the full dynamics for kappa = 0, no friction, no noise.
double energy(const SystemState& state, const IlluminationPattern& pattern,
              const SystemParams& params);

/// energy() with momenta zero and fields at their adiabatic values.
double adiabatic_energy(std::span<const double> positions, const IlluminationPattern& pattern,
                        const SystemParams& params);

/// Throws Error(Validation) unless `fields` carries exactly the pattern's modes in order.
void check_fields_match(std::span<const ModeAmplitude> fields, const IlluminationPattern& pattern);

}  // namespace cavity
