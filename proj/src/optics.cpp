#include "cavity/optics.hpp"

#include <cmath>

namespace cavity {

namespace {

struct ModeSums {
    double sum_sin = 0.0;
    double sum_sin2 = 0.0;
};

ModeSums mode_sums(std::span<const double> positions, int order) {
    ModeSums m;
    for (double x : positions) {
        const double s = mode_phase(x, order).sin;
        m.sum_sin += s;
        m.sum_sin2 += s * s;
    }
    return m;
}

}  // namespace

Phase mode_phase(double x, int order) {
    const double arg = static_cast<double>(order) * std::fmod(x, kTwoPi);
    return {std::sin(arg), std::cos(arg)};
}

void check_fields_match(std::span<const ModeAmplitude> fields, const IlluminationPattern& pattern) {
    const auto& entries = pattern.entries();
    bool ok = fields.size() == entries.size();
    for (std::size_t i = 0; ok && i < entries.size(); ++i) ok = fields[i].order == entries[i].order;
    if (!ok) throw Error(ErrorCode::Validation, "field amplitudes are not keyed to the pattern");
}

FieldSolution adiabatic_field(std::span<const double> positions, const IlluminationPattern& pattern,
                              const SystemParams& params) {
    FieldSolution out;
    out.amplitudes.reserve(pattern.size());
    for (const auto& e : pattern.entries()) {
        const ModeSums m = mode_sums(positions, e.order);
        const Complex denom{params.delta_c - params.u0 * m.sum_sin2, params.kappa};
        const Complex alpha = e.eta * m.sum_sin / denom;
        out.amplitudes.push_back({e.order, alpha});
        out.intensity += std::norm(alpha);
    }
    return out;
}

std::vector<Complex> field_derivative(const SystemState& state, const IlluminationPattern& pattern,
                                      const SystemParams& params) {
    check_fields_match(state.fields, pattern);
    std::vector<Complex> out;
    out.reserve(pattern.size());
    const auto& entries = pattern.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const ModeSums m = mode_sums(state.positions, entries[i].order);
        const Complex alpha = state.fields[i].alpha;
        const Complex rate{-params.kappa, params.delta_c - params.u0 * m.sum_sin2};
        out.push_back(rate * alpha - Complex{0.0, entries[i].eta * m.sum_sin});
    }
    return out;
}

std::vector<double> force(std::span<const double> positions, std::span<const ModeAmplitude> fields,
                          const IlluminationPattern& pattern, const SystemParams& params) {
    check_fields_match(fields, pattern);
    std::vector<double> f(positions.size(), 0.0);
    const auto& entries = pattern.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double k = entries[i].order;
        const double shift = params.u0 * std::norm(fields[i].alpha);
        const double drive = 2.0 * entries[i].eta * fields[i].alpha.real();
        for (std::size_t j = 0; j < positions.size(); ++j) {
            const Phase ph = mode_phase(positions[j], entries[i].order);
            f[j] -= k * (shift * 2.0 * ph.sin * ph.cos + drive * ph.cos);
        }
    }
    return f;
}

std::vector<double> adiabatic_force(std::span<const double> positions,
                                    const IlluminationPattern& pattern, const SystemParams& params) {
    // Same result as force(positions, adiabatic_field(...)), with one trig
    // evaluation per particle and mode.
    const std::size_t n = positions.size();
    std::vector<double> f(n, 0.0);
    std::vector<Phase> phases(n);
    for (const auto& e : pattern.entries()) {
        double sum_sin = 0.0;
        double sum_sin2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            phases[j] = mode_phase(positions[j], e.order);
            sum_sin += phases[j].sin;
            sum_sin2 += phases[j].sin * phases[j].sin;
        }
        const Complex denom{params.delta_c - params.u0 * sum_sin2, params.kappa};
        const Complex alpha = e.eta * sum_sin / denom;
        const double k = e.order;
        const double shift = params.u0 * std::norm(alpha);
        const double drive = 2.0 * e.eta * alpha.real();
        for (std::size_t j = 0; j < n; ++j) {
            f[j] -= k * (shift * 2.0 * phases[j].sin * phases[j].cos + drive * phases[j].cos);
        }
    }
    return f;
}

double energy(const SystemState& state, const IlluminationPattern& pattern,
              const SystemParams& params) {
    check_fields_match(state.fields, pattern);
    double h = 0.0;
    const double inv_2m = 1.0 / (2.0 * params.mass());
    for (double p : state.momenta) h += p * p * inv_2m;
    const auto& entries = pattern.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const ModeSums m = mode_sums(state.positions, entries[i].order);
        const Complex alpha = state.fields[i].alpha;
        const double detuning = params.delta_c - params.u0 * m.sum_sin2;
        h -= detuning * std::norm(alpha) - entries[i].eta * m.sum_sin * 2.0 * alpha.real();
    }
    return h;
}

double adiabatic_energy(std::span<const double> positions, const IlluminationPattern& pattern,
                        const SystemParams& params) {
    SystemState s;
    s.positions.assign(positions.begin(), positions.end());
    s.fields = adiabatic_field(positions, pattern, params).amplitudes;
    return energy(s, pattern, params);
}

}  // namespace cavity
