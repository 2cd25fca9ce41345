#pragma once

#include <span>
#include <vector>

#include "cavity/model.hpp"

namespace cavity {

struct DiagnosticsSample {
    double time = 0.0;
    double p_tot = 0.0;
    double theta_tot = 0.0;
    std::vector<double> theta;  // signed Theta_n, pattern order
    int n0 = 0;
};

/// Theta_n = (1/N) sum_j sin(n x_j), in [-1, 1].
double order_parameter(std::span<const double> positions, int order);

/// Sum of |Theta_n| over the pumped modes of `pattern`.
double total_order(std::span<const double> positions, const IlluminationPattern& pattern);

/// Number of particles that belong to an epsilon-cluster of at least two
/// particles. Clusters are connected components of the graph joining pairs
/// closer than epsilon, with distances taken modulo the fundamental wavelength.
int cluster_count(std::span<const double> positions, double epsilon);

/// Number of particle pairs closer than epsilon (modulo 2pi).
int cluster_pair_count(std::span<const double> positions, double epsilon);

/// 1e-2 of the shortest pumped wavelength; 1e-2 * 2pi for an empty pattern.
double default_cluster_epsilon(const IlluminationPattern& pattern);

double total_intensity(std::span<const ModeAmplitude> fields);

DiagnosticsSample diagnose(std::span<const double> positions, std::span<const ModeAmplitude> fields,
                           const IlluminationPattern& pattern, double cluster_epsilon, double time);

}  // namespace cavity
