#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <vector>

#include "cavity/model.hpp"

namespace testing {

using cavity::IlluminationPattern;
using cavity::SystemParams;

/// Two-particle atlas parameters: kappa = 1, eta = 5/8, N U0 = -1/10, delta_c = N U0 - 1.
inline SystemParams atlas_params(int n = 2) {
    SystemParams p;
    p.n_particles = n;
    p.kappa = 1.0;
    p.u0 = -0.1 / n;
    p.delta_c = -0.1 - 1.0;
    p.friction = 1.0;
    return p;
}

inline IlluminationPattern single_mode(int order, double eta = 5.0 / 8.0) {
    return IlluminationPattern({{order, eta}});
}

/// Field of one mode written out directly from the steady-state formula.
inline std::complex<double> oracle_alpha(std::span<const double> x, int n, double eta, const SystemParams& p) {
    double s = 0.0, s2 = 0.0;
    for (double xi : x) {
        s += std::sin(n * xi);
        s2 += std::sin(n * xi) * std::sin(n * xi);
    }
    return eta * s / std::complex<double>(p.delta_c - p.u0 * s2, p.kappa);
}

/// Light force on particle j for given amplitudes, term by term.
inline double oracle_force(std::span<const double> x, std::size_t j, const IlluminationPattern& pattern,
                           std::span<const std::complex<double>> alpha, const SystemParams& p) {
    double f = 0.0;
    for (std::size_t m = 0; m < pattern.size(); ++m) {
        const int n = pattern.entries()[m].order;
        const double eta = pattern.entries()[m].eta;
        f -= n * (p.u0 * std::norm(alpha[m]) * std::sin(2.0 * n * x[j]) +
                  2.0 * eta * alpha[m].real() * std::cos(n * x[j]));
    }
    return f;
}

inline std::vector<double> uniform_positions(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, cavity::kTwoPi);
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    return x;
}

}  // namespace testing
