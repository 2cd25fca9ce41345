/**
 * @file equilibria.hpp
 * @brief Zero-force configurations of the adiabatic system and their stability.
 *
 * Stability follows the strongly damped linearisation x' ~ F(x): a point is
 * stable when every eigenvalue of dF/dx has a negative real part.
 */
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "cavity/model.hpp"

namespace cavity {

struct EquilibriaOptions {
    int resolution = 100;             // grid points per dimension
    double tol_force = 1e-10;         // Newton convergence, max-norm
    double tol_dedup = 1e-6 * kTwoPi; // same point, modulo 2pi and permutation
    double eps_eig = 1e-8;            // marginal band for eigenvalue real parts
    double jacobian_step = 0.0;       // 0 selects 1e-5 / n_max
    int max_newton_iterations = 60;

    void validate() const;
};

/// Reduces every coordinate into [0, 2pi) and sorts ascending.
std::vector<double> canonical_configuration(std::span<const double> positions);

/// Distance between two configurations modulo 2pi per particle and modulo
/// particle relabelling: min over permutations of the max circular distance.
double configuration_distance(std::span<const double> a, std::span<const double> b);

double default_jacobian_step(const IlluminationPattern& pattern);

/// Central finite-difference Jacobian, entry (i, j) = dF_i / dx_j.
Eigen::MatrixXd jacobian(std::span<const double> positions, const IlluminationPattern& pattern,
                         const SystemParams& params, double step);

struct StabilityResult {
    Stability classification = Stability::Marginal;
    std::vector<double> eigen_real_parts;  // ascending
};

/// Classifies an equilibrium. Throws Error(NotAnEquilibrium) when the max
/// force component exceeds `tol_force`.
StabilityResult stability(std::span<const double> positions, const IlluminationPattern& pattern,
                          const SystemParams& params, double eps_eig = 1e-8,
                          double tol_force = 1e-10, double step = 0.0);

/// All distinct equilibria reachable by Newton polishing from grid cells in
/// which every force component changes sign. N <= 4. Results are canonical
/// representatives sorted lexicographically.
///
/// Throws Error(DegenerateLandscape) when the force vanishes on the whole grid.
std::vector<Equilibrium> find_equilibria(const IlluminationPattern& pattern, const SystemParams& params,
                                         const EquilibriaOptions& options = {});

/// Intensity and force channels sampled on the uniform grid over [0, 2pi)^N.
struct LandscapeGrid {
    int resolution = 0;
    int dims = 0;
    std::vector<int> mode_orders;
    std::vector<double> p_tot;                        // flat, first coordinate fastest
    std::vector<std::vector<double>> mode_intensity;  // [mode][point]
    std::vector<std::vector<double>> force;           // [particle][point]

    std::size_t size() const { return p_tot.size(); }
    double coordinate(int index) const { return kTwoPi * index / resolution; }
    std::vector<double> point(std::size_t flat_index) const;
};

/// N in {1, 2, 3}, resolution >= 8.
LandscapeGrid landscape(const IlluminationPattern& pattern, const SystemParams& params, int resolution);

}  // namespace cavity
