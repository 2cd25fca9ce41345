#include "cavity/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "cavity/optics.hpp"

namespace cavity {

double order_parameter(std::span<const double> positions, int order) {
    if (positions.empty()) return 0.0;
    double sum = 0.0;
    for (double x : positions) sum += mode_phase(x, order).sin;
    return sum / static_cast<double>(positions.size());
}

double total_order(std::span<const double> positions, const IlluminationPattern& pattern) {
    double total = 0.0;
    for (const auto& e : pattern.entries()) total += std::abs(order_parameter(positions, e.order));
    return total;
}

namespace {

std::vector<double> wrapped_sorted(std::span<const double> positions) {
    std::vector<double> w;
    w.reserve(positions.size());
    for (double x : positions) {
        double r = std::fmod(x, kTwoPi);
        if (r < 0.0) r += kTwoPi;
        w.push_back(r);
    }
    std::sort(w.begin(), w.end());
    return w;
}

}  // namespace

int cluster_count(std::span<const double> positions, double epsilon) {
    const std::vector<double> w = wrapped_sorted(positions);
    const std::size_t n = w.size();
    if (n < 2) return 0;
    // On the circle the connected components are maximal runs of sub-epsilon
    // gaps; start the sweep just after a gap that separates two components.
    auto gap = [&](std::size_t i) { return i + 1 < n ? w[i + 1] - w[i] : w[0] + kTwoPi - w[n - 1]; };
    std::size_t cut = n;
    for (std::size_t i = 0; i < n && cut == n; ++i) {
        if (gap(i) >= epsilon) cut = i;
    }
    if (cut == n) return static_cast<int>(n);
    int count = 0;
    std::size_t run = 1;
    for (std::size_t k = 1; k <= n; ++k) {
        const std::size_t prev = (cut + k) % n;
        if (k < n && gap(prev) < epsilon) {
            ++run;
            continue;
        }
        if (run >= 2) count += static_cast<int>(run);
        run = 1;
    }
    return count;
}

int cluster_pair_count(std::span<const double> positions, double epsilon) {
    const std::vector<double> w = wrapped_sorted(positions);
    int pairs = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = i + 1; j < w.size(); ++j) {
            const double d = w[j] - w[i];
            if (std::min(d, kTwoPi - d) < epsilon) ++pairs;
        }
    }
    return pairs;
}

double default_cluster_epsilon(const IlluminationPattern& pattern) {
    const int n_max = std::max(pattern.max_order(), 1);
    return 1e-2 * kTwoPi / n_max;
}

double total_intensity(std::span<const ModeAmplitude> fields) {
    double sum = 0.0;
    for (const auto& f : fields) sum += std::norm(f.alpha);
    return sum;
}

DiagnosticsSample diagnose(std::span<const double> positions, std::span<const ModeAmplitude> fields,
                           const IlluminationPattern& pattern, double cluster_epsilon, double time) {
    DiagnosticsSample d;
    d.time = time;
    d.p_tot = total_intensity(fields);
    for (const auto& e : pattern.entries()) {
        const double theta = order_parameter(positions, e.order);
        d.theta.push_back(theta);
        d.theta_tot += std::abs(theta);
    }
    d.n0 = cluster_count(positions, cluster_epsilon);
    return d;
}

}  // namespace cavity
