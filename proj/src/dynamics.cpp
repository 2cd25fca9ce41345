#include "cavity/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cavity/diagnostics.hpp"
#include "cavity/optics.hpp"

namespace cavity {

namespace {

// (e^z - 1) / z and (e^z - 1 - z) / z^2, series near the origin.
Complex phi1(Complex z) {
    if (std::abs(z) < 1.0) {
        Complex term{1.0, 0.0};
        Complex sum = term;
        for (int k = 2; k <= 19; ++k) {
            term *= z / static_cast<double>(k);
            sum += term;
        }
        return sum;
    }
    return (std::exp(z) - 1.0) / z;
}

Complex phi2(Complex z) {
    if (std::abs(z) < 1.0) {
        Complex term{0.5, 0.0};
        Complex sum = term;
        for (int k = 3; k <= 20; ++k) {
            term *= z / static_cast<double>(k);
            sum += term;
        }
        return sum;
    }
    return (std::exp(z) - 1.0 - z) / (z * z);
}

struct FieldFlow {
    Complex alpha_end;
    Complex alpha_integral;  // int_0^h alpha dt
    double norm_integral;    // int_0^h |alpha|^2 dt
};

// Exact solution of d(alpha)/dt = lambda alpha + b over [0, h].
FieldFlow linear_field_flow(Complex alpha0, Complex lambda, Complex b, double h) {
    const Complex z = lambda * h;
    FieldFlow out;
    if (std::abs(z) >= 0.5) {
        out.alpha_end = alpha0 * std::exp(z) + b * h * phi1(z);
        out.alpha_integral = alpha0 * h * phi1(z) + b * h * h * phi2(z);
        const Complex steady = -b / lambda;
        const Complex c0 = alpha0 - steady;
        const double decay = 2.0 * lambda.real() * h;
        out.norm_integral = std::norm(steady) * h +
                            2.0 * (std::conj(steady) * c0 * h * phi1(z)).real() +
                            std::norm(c0) * h * phi1(Complex{decay, 0.0}).real();
        return out;
    }
    // Taylor series in s = t / h: alpha = sum_k c_k s^k with
    // c_{k+1} = (z c_k + [k == 0] b h) / (k + 1); |z| < 1/2 bounds the tail.
    constexpr int kMaxTerms = 24;
    std::array<Complex, kMaxTerms> c{};
    c[0] = alpha0;
    const double scale = std::abs(alpha0) + std::abs(b) * h + 1e-300;
    int terms = 1;
    for (; terms < kMaxTerms; ++terms) {
        const int k = terms - 1;
        c[terms] = (z * c[k] + (k == 0 ? b * h : Complex{})) / static_cast<double>(terms);
        if (std::abs(c[terms]) < 1e-18 * scale && k > 0) {
            ++terms;
            break;
        }
    }
    Complex end{};
    Complex integral{};
    for (int k = 0; k < terms; ++k) {
        end += c[k];
        integral += c[k] / static_cast<double>(k + 1);
    }
    double norm = 0.0;
    for (int k = 0; k < terms; ++k) {
        norm += std::norm(c[k]) / static_cast<double>(2 * k + 1);
        for (int l = k + 1; l < terms; ++l) norm += 2.0 * (c[k] * std::conj(c[l])).real() / static_cast<double>(k + l + 1);
    }
    out.alpha_end = end;
    out.alpha_integral = integral * h;
    out.norm_integral = norm * h;
    return out;
}

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, std::string(what) + " became non-finite");
    }
}

void require_finite(const SystemState& s) {
    require_finite(s.positions, "position");
    require_finite(s.momenta, "momentum");
    for (const auto& f : s.fields) {
        if (!std::isfinite(f.alpha.real()) || !std::isfinite(f.alpha.imag())) {
            throw Error(ErrorCode::NonFinite, "field amplitude became non-finite");
        }
    }
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Single-state part of the stationarity test; `prev` may be null.
bool stationary_point(const SystemState* prev, const SystemState& cur,
                      const IlluminationPattern& pattern, const SystemParams& params, double tol_v,
                      double tol_f) {
    if (max_abs(cur.momenta) / params.mass() >= tol_v) return false;
    if (prev != nullptr) {
        const double dt = cur.time - prev->time;
        if (dt > 0.0) {
            for (std::size_t j = 0; j < cur.positions.size(); ++j) {
                if (std::abs(cur.positions[j] - prev->positions[j]) / dt >= tol_v) return false;
            }
        }
    }
    return max_abs(adiabatic_force(cur.positions, pattern, params)) < tol_f;
}

double schedule_cluster_epsilon(const Schedule& schedule) {
    int n_max = 1;
    for (const auto& p : schedule.patterns) n_max = std::max(n_max, p.max_order());
    return 1e-2 * kTwoPi / n_max;
}

TrajectorySample make_sample(const SystemState& state, const IlluminationPattern& pattern,
                             const SystemParams& params, Scheme scheme, double cluster_epsilon,
                             std::size_t phase) {
    TrajectorySample s;
    s.time = state.time;
    s.positions = state.positions;
    s.momenta = state.momenta;
    std::vector<ModeAmplitude> fields = scheme == Scheme::Full
                                            ? state.fields
                                            : adiabatic_field(state.positions, pattern, params).amplitudes;
    for (const auto& f : fields) s.mode_intensities.push_back(std::norm(f.alpha));
    s.p_tot = total_intensity(fields);
    s.theta_tot = total_order(state.positions, pattern);
    s.n0 = cluster_count(state.positions, cluster_epsilon);
    s.n0_pairs = cluster_pair_count(state.positions, cluster_epsilon);
    s.phase = phase;
    return s;
}

}  // namespace

const char* to_string(Scheme s) { return s == Scheme::Full ? "full" : "overdamped"; }

double default_time_step(const SystemParams& params) {
    return std::min(0.02 / params.kappa, 0.02 / params.recoil_frequency);
}

void IntegratorOptions::validate(const SystemParams& params) const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::Validation, msg); };
    if (!(dt > 0.0) || !std::isfinite(dt)) fail("integrator dt must be > 0");
    if (!(max_time > 0.0) || !std::isfinite(max_time)) fail("integrator max_time must be > 0");
    if (sample_stride < 1) fail("integrator sample_stride must be >= 1");
    if (order != 2 && order != 4) fail("integrator order must be 2 or 4");
    if (scheme == Scheme::Overdamped && !(params.friction > 0.0)) {
        fail("overdamped scheme needs friction > 0");
    }
}

void NoiseOptions::validate() const {
    if (!enabled) return;
    if (!(kick_interval > 0.0)) throw Error(ErrorCode::Validation, "kick_interval must be > 0");
    if (!(kick_sigma >= 0.0)) throw Error(ErrorCode::Validation, "kick_sigma must be >= 0");
}

namespace {

void advance_full(SystemState& state, const IlluminationPattern& pattern, const SystemParams& params,
                  double dt, std::vector<Phase>& phases) {
    const double half = 0.5 * dt;
    const double inv_m = 1.0 / params.mass();
    const double damping = params.friction > 0.0 ? std::exp(-params.friction * half) : 1.0;
    const std::size_t n = state.positions.size();

    for (std::size_t j = 0; j < n; ++j) state.positions[j] += state.momenta[j] * inv_m * half;
    for (double& p : state.momenta) p *= damping;

    phases.resize(n);
    const auto& entries = pattern.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double sum_sin = 0.0;
        double sum_sin2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            phases[j] = mode_phase(state.positions[j], entries[i].order);
            sum_sin += phases[j].sin;
            sum_sin2 += phases[j].sin * phases[j].sin;
        }
        const Complex lambda{-params.kappa, params.delta_c - params.u0 * sum_sin2};
        const Complex source{0.0, -entries[i].eta * sum_sin};
        const FieldFlow flow = linear_field_flow(state.fields[i].alpha, lambda, source, dt);
        state.fields[i].alpha = flow.alpha_end;

        const double k = entries[i].order;
        const double shift = params.u0 * flow.norm_integral;
        const double drive = 2.0 * entries[i].eta * flow.alpha_integral.real();
        for (std::size_t j = 0; j < n; ++j) {
            state.momenta[j] -= k * (shift * 2.0 * phases[j].sin * phases[j].cos + drive * phases[j].cos);
        }
    }

    for (double& p : state.momenta) p *= damping;
    for (std::size_t j = 0; j < n; ++j) state.positions[j] += state.momenta[j] * inv_m * half;
    state.time += dt;
    require_finite(state);
}

void advance_full(SystemState& state, const IlluminationPattern& pattern, const SystemParams& params,
                  double dt, int order, std::vector<Phase>& phases) {
    if (order == 2) {
        advance_full(state, pattern, params, dt, phases);
        return;
    }
    // Triple-jump composition of the symmetric second-order step.
    static const double cube_root_2 = std::cbrt(2.0);
    static const double outer = 1.0 / (2.0 - cube_root_2);
    static const double inner = -cube_root_2 / (2.0 - cube_root_2);
    const double t_end = state.time + dt;
    advance_full(state, pattern, params, outer * dt, phases);
    advance_full(state, pattern, params, inner * dt, phases);
    advance_full(state, pattern, params, outer * dt, phases);
    state.time = t_end;
}

}  // namespace

SystemState step_full(const SystemState& state, const IlluminationPattern& pattern,
                      const SystemParams& params, double dt, int order) {
    if (order != 2 && order != 4) throw Error(ErrorCode::Validation, "integrator order must be 2 or 4");
    check_fields_match(state.fields, pattern);
    SystemState next = state;
    std::vector<Phase> phases;
    advance_full(next, pattern, params, dt, order, phases);
    return next;
}

std::vector<double> step_overdamped(std::span<const double> positions,
                                   const IlluminationPattern& pattern, const SystemParams& params,
                                   double dt) {
    if (!(params.friction > 0.0)) throw Error(ErrorCode::Validation, "overdamped step needs friction > 0");
    const std::vector<double> f = adiabatic_force(positions, pattern, params);
    std::vector<double> next(positions.begin(), positions.end());
    const double mobility = dt / params.friction;
    for (std::size_t j = 0; j < next.size(); ++j) next[j] += f[j] * mobility;
    require_finite(next, "position");
    return next;
}

SystemState apply_kicks(const SystemState& state, const NoiseOptions& noise, Rng& rng) {
    SystemState next = state;
    if (!noise.enabled || noise.kick_sigma == 0.0) return next;
    std::normal_distribution<double> kick(0.0, noise.kick_sigma);
    for (double& p : next.momenta) p += kick(rng);
    return next;
}

bool detect_stationary(std::span<const SystemState> window, const IlluminationPattern& pattern,
                       const SystemParams& params, double tol_v, double tol_f) {
    if (window.size() < 2) throw Error(ErrorCode::Validation, "stationarity window needs >= 2 samples");
    for (std::size_t i = 0; i < window.size(); ++i) {
        const SystemState* prev = i == 0 ? nullptr : &window[i - 1];
        if (!stationary_point(prev, window[i], pattern, params, tol_v, tol_f)) return false;
    }
    return true;
}

Trajectory run_trajectory(const SystemState& initial, const Schedule& schedule,
                          const SystemParams& params, const RunOptions& options) {
    schedule.validate();
    options.integrator.validate(params);
    options.noise.validate();
    if (options.noise.enabled && options.integrator.scheme == Scheme::Overdamped) {
        throw Error(ErrorCode::Validation, "momentum kicks need the full scheme");
    }
    if (initial.positions.size() != static_cast<std::size_t>(params.n_particles) ||
        initial.momenta.size() != initial.positions.size()) {
        throw Error(ErrorCode::Validation, "initial state does not match n_particles");
    }

    const IntegratorOptions& integ = options.integrator;
    const bool overdamped = integ.scheme == Scheme::Overdamped;
    const double eps_cluster =
        options.cluster_epsilon > 0.0 ? options.cluster_epsilon : schedule_cluster_epsilon(schedule);
    const double time_slack = 1e-9 * integ.dt;
    const double end_time = initial.time + integ.max_time;

    Rng schedule_rng(schedule.seed);
    Rng kick_rng(derive_seed(options.seed, 1));

    Trajectory traj;
    traj.seed = options.seed;

    SystemState state = initial;
    if (overdamped) std::fill(state.momenta.begin(), state.momenta.end(), 0.0);

    std::size_t phase = 0;
    const IlluminationPattern* pattern = &next_pattern(schedule, 0, schedule_rng);
    rekey_fields(state, *pattern);
    traj.events.push_back({state.time, 0, pattern->id(), state.positions});

    auto sample = [&] {
        if (!traj.samples.empty() && traj.samples.back().time >= state.time) return;
        traj.samples.push_back(make_sample(state, *pattern, params, integ.scheme, eps_cluster, phase));
    };
    sample();

    const bool gated = schedule.mode != ScheduleMode::Static;
    const StationarityCriteria& crit = schedule.stationarity;
    double phase_start = state.time;
    double next_kick = state.time + options.noise.kick_interval;
    std::size_t steps = 0;
    std::size_t passes = 0;
    SystemState last_check = state;
    std::vector<Phase> phases;

    auto intensity_now = [&] {
        if (!overdamped) return total_intensity(state.fields);
        return adiabatic_field(state.positions, *pattern, params).intensity;
    };
    double p_prev = gated ? intensity_now() : 0.0;
    double p_integral = 0.0;

    while (state.time < end_time - time_slack) {
        const double dt = std::min(integ.dt, end_time - state.time);
        if (overdamped) {
            state.positions = step_overdamped(state.positions, *pattern, params, dt);
            state.time += dt;
        } else {
            advance_full(state, *pattern, params, dt, integ.order, phases);
        }
        ++steps;
        if (gated) {
            const double p_now = intensity_now();
            p_integral += 0.5 * (p_prev + p_now) * dt;
            p_prev = p_now;
        }

        if (options.noise.enabled && state.time >= next_kick - time_slack) {
            if (options.noise.kick_sigma > 0.0) {
                std::normal_distribution<double> kick(0.0, options.noise.kick_sigma);
                for (double& p : state.momenta) p += kick(kick_rng);
            }
            next_kick += options.noise.kick_interval;
        }
        if (steps % integ.sample_stride == 0) sample();

        if (!gated) continue;

        bool phase_done = false;
        if (schedule.trigger == SwitchTrigger::FixedInterval) {
            phase_done = state.time - phase_start >= schedule.interval - time_slack;
        } else if (steps % crit.check_stride == 0) {
            passes = stationary_point(&last_check, state, *pattern, params, crit.tol_v, crit.tol_f)
                         ? passes + 1
                         : 0;
            last_check = state;
            phase_done = passes >= crit.window;
            if (!phase_done && schedule.stall_timeout > 0.0 &&
                state.time - phase_start > schedule.stall_timeout) {
                throw Error(ErrorCode::ScheduleStall,
                            "phase " + std::to_string(phase) + " not stationary after " +
                                std::to_string(schedule.stall_timeout) + " time units");
            }
        }
        if (!phase_done) continue;

        sample();
        traj.phase_end_positions.push_back(state.positions);
        traj.phase_end_intensity.push_back(adiabatic_field(state.positions, *pattern, params).intensity);
        traj.phase_mean_intensity.push_back(state.time > phase_start ? p_integral / (state.time - phase_start)
                                                                     : traj.phase_end_intensity.back());
        if (++phase >= schedule.max_switches) break;

        pattern = &next_pattern(schedule, phase, schedule_rng);
        rekey_fields(state, *pattern);
        traj.events.push_back({state.time, phase, pattern->id(), state.positions});
        phase_start = state.time;
        p_prev = intensity_now();
        p_integral = 0.0;
        passes = 0;
        last_check = state;
    }
    sample();
    if (overdamped) state.fields = adiabatic_field(state.positions, *pattern, params).amplitudes;
    traj.final_state = std::move(state);
    return traj;
}

std::vector<double> relax(std::span<const double> positions, const IlluminationPattern& pattern,
                          const SystemParams& params, double dt, const StationarityCriteria& criteria,
                          double max_time) {
    SystemState state;
    state.positions.assign(positions.begin(), positions.end());
    state.momenta.assign(positions.size(), 0.0);
    SystemState last = state;
    std::size_t passes = 0;
    for (std::size_t step = 1; state.time < max_time; ++step) {
        state.positions = step_overdamped(state.positions, pattern, params, dt);
        state.time += dt;
        if (step % criteria.check_stride != 0) continue;
        passes = stationary_point(&last, state, pattern, params, criteria.tol_v, criteria.tol_f) ? passes + 1 : 0;
        last = state;
        if (passes >= criteria.window) return state.positions;
    }
    throw Error(ErrorCode::ScheduleStall, "relaxation did not become stationary");
}

}  // namespace cavity
