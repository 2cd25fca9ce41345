/**
 * @file model.hpp
 * @brief Shared domain types for the multimode cavity self-ordering engine.
 *
 * Unit convention: hbar = 1 and the fundamental wavenumber k = 1, so the
 * fundamental wavelength is 2*pi and mode n has wavenumber n. Rates (kappa,
 * U0, delta_c, eta, friction, omega_R) share one declared rate unit and the
 * particle mass follows from the recoil frequency as m = 1 / (2 omega_R).
 */
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavity {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

enum class ErrorCode {
    Validation,
    DegenerateLandscape,
    NotAnEquilibrium,
    NonFinite,
    ScheduleStall,
    ScheduleExhausted,
    Io,
};

const char* to_string(ErrorCode code);

/// All failures raised by the library carry a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct SystemParams {
    int n_particles = 1;
    double recoil_frequency = 1.0;
    double kappa = 1.0;
    double u0 = 0.0;
    double delta_c = 0.0;
    double friction = 0.0;

    double mass() const { return 0.5 / recoil_frequency; }

    /// Throws Error(Validation) unless N >= 1, omega_R > 0, kappa > 0 and
    /// every rate is finite. kappa = 0 is only reachable by building the
    /// struct directly (conservative-limit checks).
    void validate() const;
};

struct ModeDrive {
    int order = 1;
    double eta = 0.0;

    friend bool operator==(const ModeDrive&, const ModeDrive&) = default;
};

/// A set of pumped cavity modes with per-mode pump strengths.
///
/// Entries are kept canonical: sorted by mode order, orders distinct, and
/// zero-strength entries dropped.
class IlluminationPattern {
public:
    IlluminationPattern() = default;

    /// Throws Error(Validation) on duplicate orders, order < 1, or eta < 0.
    explicit IlluminationPattern(std::vector<ModeDrive> entries, std::string id = {});

    const std::vector<ModeDrive>& entries() const { return entries_; }
    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    int max_order() const { return entries_.empty() ? 0 : entries_.back().order; }

    friend bool operator==(const IlluminationPattern& a, const IlluminationPattern& b) {
        return a.entries_ == b.entries_;
    }

private:
    std::vector<ModeDrive> entries_;
    std::string id_;
};

struct ModeAmplitude {
    int order = 1;
    Complex alpha{};
};

struct SystemState {
    std::vector<double> positions;  // unwrapped
    std::vector<double> momenta;
    std::vector<ModeAmplitude> fields;  // one per pumped mode, pattern order
    double time = 0.0;
};

/// Zero-field state for `pattern` at the given positions.
SystemState make_state(std::vector<double> positions, const IlluminationPattern& pattern);

/// Re-keys the field amplitudes to `pattern`: modes that stay pumped keep their
/// amplitude, newly pumped modes start at zero.
void rekey_fields(SystemState& state, const IlluminationPattern& pattern);

enum class Stability { Stable, Unstable, Marginal };

const char* to_string(Stability s);

struct Equilibrium {
    std::vector<double> positions;
    Stability classification = Stability::Marginal;
    double intensity = 0.0;
    std::vector<double> eigen_real_parts;
};

struct TrajectorySample {
    double time = 0.0;
    std::vector<double> positions;
    std::vector<double> momenta;
    std::vector<double> mode_intensities;  // |alpha_n|^2 in pattern order
    double p_tot = 0.0;
    double theta_tot = 0.0;
    int n0 = 0;
    int n0_pairs = 0;
    std::size_t phase = 0;  // index into the trajectory's event list
};

struct ScheduleEvent {
    double time = 0.0;
    std::size_t switch_index = 0;
    std::string pattern_id;
    /// Configuration at the moment the pattern took effect.
    std::vector<double> positions;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<ScheduleEvent> events;
    /// Configuration and adiabatic P_tot at the end of every completed phase.
    std::vector<std::vector<double>> phase_end_positions;
    std::vector<double> phase_end_intensity;
    /// Time average of P_tot over each completed phase.
    std::vector<double> phase_mean_intensity;
    std::uint64_t seed = 0;
    SystemState final_state;
};

}  // namespace cavity
