#include "cavity/model.hpp"

#include <algorithm>
#include <cmath>

namespace cavity {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Validation: return "ValidationError";
        case ErrorCode::DegenerateLandscape: return "DegenerateLandscape";
        case ErrorCode::NotAnEquilibrium: return "NotAnEquilibrium";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::ScheduleStall: return "ScheduleStall";
        case ErrorCode::ScheduleExhausted: return "ScheduleExhausted";
        case ErrorCode::Io: return "IoError";
    }
    return "Unknown";
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "unknown";
}

void SystemParams::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::Validation, msg); };
    if (n_particles < 1) fail("n_particles must be >= 1");
    for (double v : {recoil_frequency, kappa, u0, delta_c, friction}) {
        if (!std::isfinite(v)) fail("system rates must be finite");
    }
    if (!(recoil_frequency > 0.0)) fail("recoil_frequency must be > 0");
    if (!(kappa > 0.0)) fail("kappa must be > 0");
    if (friction < 0.0) fail("friction must be >= 0");
}

IlluminationPattern::IlluminationPattern(std::vector<ModeDrive> entries, std::string id)
    : id_(std::move(id)) {
    for (const auto& e : entries) {
        if (e.order < 1) throw Error(ErrorCode::Validation, "mode order must be >= 1");
        if (!std::isfinite(e.eta) || e.eta < 0.0) {
            throw Error(ErrorCode::Validation, "pump strength must be finite and >= 0");
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const ModeDrive& a, const ModeDrive& b) { return a.order < b.order; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].order == entries[i - 1].order) {
            throw Error(ErrorCode::Validation,
                        "duplicate mode order " + std::to_string(entries[i].order));
        }
    }
    std::erase_if(entries, [](const ModeDrive& e) { return e.eta == 0.0; });
    entries_ = std::move(entries);
}

SystemState make_state(std::vector<double> positions, const IlluminationPattern& pattern) {
    SystemState s;
    s.momenta.assign(positions.size(), 0.0);
    s.positions = std::move(positions);
    for (const auto& e : pattern.entries()) s.fields.push_back({e.order, Complex{}});
    return s;
}

void rekey_fields(SystemState& state, const IlluminationPattern& pattern) {
    std::vector<ModeAmplitude> next;
    next.reserve(pattern.size());
    for (const auto& e : pattern.entries()) {
        auto it = std::find_if(state.fields.begin(), state.fields.end(),
                               [&](const ModeAmplitude& m) { return m.order == e.order; });
        next.push_back({e.order, it == state.fields.end() ? Complex{} : it->alpha});
    }
    state.fields = std::move(next);
}

}  // namespace cavity
