#include <doctest.h>

#include <cmath>
#include <random>

#include "cavity/dynamics.hpp"
#include "cavity/equilibria.hpp"
#include "cavity/optics.hpp"
#include "support.hpp"

using namespace cavity;
using testing::atlas_params;
using testing::single_mode;

namespace {

const IlluminationPattern kThree({{1, 0.5}, {2, 0.8}, {3, 0.4}});

/// Classical RK4 on the full coupled equations, written independently.
struct Rk4 {
    const IlluminationPattern& pattern;
    SystemParams p;

    struct Y {
        std::vector<double> x, q;
        std::vector<Complex> a;
    };

    Y rhs(const Y& y) const {
        Y d{y.x, y.q, y.a};
        const double m = 0.5 / p.recoil_frequency;
        for (std::size_t j = 0; j < y.x.size(); ++j) {
            d.x[j] = y.q[j] / m;
            d.q[j] = testing::oracle_force(y.x, j, pattern, y.a, p) - p.friction * y.q[j];
        }
        for (std::size_t i = 0; i < pattern.size(); ++i) {
            const int n = pattern.entries()[i].order;
            double s = 0.0, s2 = 0.0;
            for (double xj : y.x) {
                s += std::sin(n * xj);
                s2 += std::sin(n * xj) * std::sin(n * xj);
            }
            d.a[i] = Complex{0.0, p.delta_c - p.u0 * s2} * y.a[i] - p.kappa * y.a[i] -
                     Complex{0.0, pattern.entries()[i].eta * s};
        }
        return d;
    }

    static Y axpy(const Y& y, double h, const Y& k) {
        Y r = y;
        for (std::size_t j = 0; j < y.x.size(); ++j) {
            r.x[j] += h * k.x[j];
            r.q[j] += h * k.q[j];
        }
        for (std::size_t i = 0; i < y.a.size(); ++i) r.a[i] += h * k.a[i];
        return r;
    }

    Y integrate(Y y, double t, double h) const {
        const int steps = static_cast<int>(std::lround(t / h));
        for (int s = 0; s < steps; ++s) {
            const Y k1 = rhs(y);
            const Y k2 = rhs(axpy(y, h / 2, k1));
            const Y k3 = rhs(axpy(y, h / 2, k2));
            const Y k4 = rhs(axpy(y, h, k3));
            for (std::size_t j = 0; j < y.x.size(); ++j) {
                y.x[j] += h / 6 * (k1.x[j] + 2 * k2.x[j] + 2 * k3.x[j] + k4.x[j]);
                y.q[j] += h / 6 * (k1.q[j] + 2 * k2.q[j] + 2 * k3.q[j] + k4.q[j]);
            }
            for (std::size_t i = 0; i < y.a.size(); ++i) y.a[i] += h / 6 * (k1.a[i] + 2. * k2.a[i] + 2. * k3.a[i] + k4.a[i]);
        }
        return y;
    }
};

SystemState run_full(SystemState s, const IlluminationPattern& pat, const SystemParams& p, double t, double dt,
                     int order = 2) {
    const int steps = static_cast<int>(std::lround(t / dt));
    for (int i = 0; i < steps; ++i) s = step_full(s, pat, p, dt, order);
    return s;
}

double max_error(const SystemState& s, const Rk4::Y& y) {
    double e = 0.0;
    for (std::size_t j = 0; j < y.x.size(); ++j) {
        e = std::max(e, std::abs(s.positions[j] - y.x[j]));
        e = std::max(e, std::abs(s.momenta[j] - y.q[j]));
    }
    for (std::size_t i = 0; i < y.a.size(); ++i) e = std::max(e, std::abs(s.fields[i].alpha - y.a[i]));
    return e;
}

Schedule static_schedule(const IlluminationPattern& p) {
    Schedule s;
    s.patterns = {p};
    return s;
}

}  // namespace

TEST_CASE("default time step") {
    SystemParams p;
    p.kappa = 10.0;
    p.recoil_frequency = 1.0;
    CHECK(default_time_step(p) == doctest::Approx(0.002));
    p.kappa = 0.1;
    CHECK(default_time_step(p) == doctest::Approx(0.02));
}

TEST_CASE("option validation") {
    SystemParams p = atlas_params();
    IntegratorOptions o;
    CHECK_NOTHROW(o.validate(p));
    o.dt = 0.0;
    CHECK_THROWS_AS(o.validate(p), Error);
    o.dt = 0.01;
    o.scheme = Scheme::Overdamped;
    p.friction = 0.0;
    CHECK_THROWS_AS(o.validate(p), Error);
    NoiseOptions n;
    n.enabled = true;
    n.kick_interval = 0.0;
    CHECK_THROWS_AS(n.validate(), Error);
    n.kick_interval = 1.0;
    n.kick_sigma = -1.0;
    CHECK_THROWS_AS(n.validate(), Error);
}

TEST_CASE("free flight without pump or friction") {
    SystemParams p = atlas_params();
    p.friction = 0.0;
    p.recoil_frequency = 0.7;
    const IlluminationPattern zero({{1, 0.0}});
    SystemState s = make_state({0.2, -1.0}, single_mode(3, 0.0));
    s.momenta = {0.5, -2.0};
    const SystemState next = step_full(s, zero, p, 0.1);
    const double m = p.mass();
    CHECK(next.positions[0] == doctest::Approx(0.2 + 0.5 / m * 0.1).epsilon(1e-15));
    CHECK(next.positions[1] == doctest::Approx(-1.0 - 2.0 / m * 0.1).epsilon(1e-15));
    CHECK(next.momenta == s.momenta);
    CHECK(next.time == doctest::Approx(0.1));
}

TEST_CASE("frozen particles: field relaxes exponentially to the adiabatic value") {
    SystemParams p = atlas_params(2);
    p.recoil_frequency = 1e-30;
    p.friction = 0.0;
    const std::vector<double> x{0.4, 2.3};
    SystemState s = make_state(x, kThree);
    s.fields[1].alpha = {0.3, -0.2};
    const SystemState start = s;
    const double dt = 0.01;
    for (double t_end : {0.5, 2.0, 10.0}) {
        const SystemState end = run_full(start, kThree, p, t_end, dt);
        for (std::size_t i = 0; i < kThree.size(); ++i) {
            const auto& e = kThree.entries()[i];
            const Complex target = testing::oracle_alpha(x, e.order, e.eta, p);
            double s2 = 0.0;
            for (double xi : x) s2 += std::sin(e.order * xi) * std::sin(e.order * xi);
            const Complex lambda{-p.kappa, p.delta_c - p.u0 * s2};
            const Complex exact = target + (start.fields[i].alpha - target) * std::exp(lambda * t_end);
            CHECK(std::abs(end.fields[i].alpha - exact) < 1e-12);
        }
        for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(end.positions[j] - x[j]) < 1e-20);
    }
}

TEST_CASE("full scheme converges at second order to an RK4 reference") {
    SystemParams p = atlas_params(2);
    p.kappa = 0.3;
    p.friction = 0.2;
    SystemState s = make_state({0.3, 1.7}, kThree);
    s.momenta = {0.4, -0.3};
    s.fields[0].alpha = {0.2, 0.1};
    const double t = 2.0;
    const Rk4 rk{kThree, p};
    Rk4::Y y0{s.positions, s.momenta, {}};
    for (const auto& f : s.fields) y0.a.push_back(f.alpha);
    const Rk4::Y ref = rk.integrate(y0, t, 1e-4);

    const double e1 = max_error(run_full(s, kThree, p, t, 0.01), ref);
    const double e2 = max_error(run_full(s, kThree, p, t, 0.005), ref);
    const double e3 = max_error(run_full(s, kThree, p, t, 0.0025), ref);
    CHECK(e1 < 1e-2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.1));

    const double f1 = max_error(run_full(s, kThree, p, t, 0.04, 4), ref);
    const double f2 = max_error(run_full(s, kThree, p, t, 0.02, 4), ref);
    const double f3 = max_error(run_full(s, kThree, p, t, 0.01, 4), ref);
    MESSAGE("order 4 errors " << f1 << " " << f2 << " " << f3);
    CHECK(f1 < e1);
    CHECK(f1 / f2 == doctest::Approx(16.0).epsilon(0.15));
    CHECK(f2 / f3 == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("step order validation") {
    const SystemParams p = atlas_params(1);
    const SystemState s = make_state({0.3}, kThree);
    CHECK_THROWS_AS(step_full(s, kThree, p, 0.01, 3), Error);
    IntegratorOptions o;
    o.order = 1;
    CHECK_THROWS_AS(o.validate(p), Error);
}

TEST_CASE("conservative limit keeps the energy") {
    SystemParams p = atlas_params(2);
    p.kappa = 0.0;
    p.friction = 0.0;
    SystemParams pk = p;
    pk.kappa = 1.0;
    const IlluminationPattern pat = single_mode(5);
    SystemState s = make_state({0.3, 1.1}, pat);
    s.fields = adiabatic_field(s.positions, pat, pk).amplitudes;
    const double e0 = energy(s, pat, p);
    double drift = 0.0;
    for (int i = 0; i < 20000; ++i) {
        s = step_full(s, pat, p, 2.5e-4);
        if (i % 20 == 19) drift = std::max(drift, std::abs(energy(s, pat, p) - e0) / std::abs(e0));
    }
    CHECK(drift < 1e-4);
}

TEST_CASE("overdamped step") {
    const SystemParams p = atlas_params(2);
    const IlluminationPattern pat = single_mode(5);
    SUBCASE("stable equilibrium is a fixed point") {
        const double x = (kPi / 2.0) / 5.0;
        const std::vector<double> pos{x, x + kTwoPi / 5.0};
        const auto next = step_overdamped(pos, pat, p, 0.01);
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(next[j] - pos[j]) < 1e-14);
    }
    SUBCASE("zero pump leaves positions unchanged") {
        const std::vector<double> pos{0.4, 1.3};
        CHECK(step_overdamped(pos, IlluminationPattern({{5, 0.0}}), p, 0.1) == pos);
    }
    SUBCASE("one Euler step against a term-by-term evaluation") {
        const std::vector<double> pos{0.31, 0.97};
        const double dt = 0.01;
        const auto next = step_overdamped(pos, pat, p, dt);
        const Complex a = testing::oracle_alpha(pos, 5, 0.625, p);
        const std::vector<Complex> av{a};
        for (std::size_t j = 0; j < 2; ++j) {
            const double expect = pos[j] + testing::oracle_force(pos, j, pat, av, p) / p.friction * dt;
            CHECK(next[j] == doctest::Approx(expect).epsilon(1e-14));
        }
    }
    SUBCASE("needs friction") {
        SystemParams q = p;
        q.friction = 0.0;
        CHECK_THROWS_AS(step_overdamped(std::vector<double>{0.1, 0.2}, pat, q, 0.01), Error);
    }
}

TEST_CASE("overdamped flow decreases the adiabatic energy when U0 = 0") {
    SystemParams p = atlas_params(3);
    p.u0 = 0.0;
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x = testing::uniform_positions(rng, 3);
        double previous = adiabatic_energy(x, kThree, p);
        for (int i = 0; i < 2000; ++i) {
            x = step_overdamped(x, kThree, p, 0.002);
            const double e = adiabatic_energy(x, kThree, p);
            CHECK(e <= previous + 1e-13);
            previous = e;
        }
    }
}

TEST_CASE("momentum kicks") {
    SystemState s = make_state({0.0, 1.0, 2.0}, single_mode(1));
    s.momenta = {0.1, 0.2, 0.3};
    NoiseOptions n;
    n.enabled = true;
    SUBCASE("zero width leaves the state unchanged") {
        Rng rng(1);
        const SystemState k = apply_kicks(s, n, rng);
        CHECK(k.momenta == s.momenta);
        CHECK(k.positions == s.positions);
    }
    SUBCASE("fixed seed reproduces the kicks") {
        n.kick_sigma = 0.5;
        Rng a(42), b(42);
        for (int i = 0; i < 10; ++i) CHECK(apply_kicks(s, n, a).momenta == apply_kicks(s, n, b).momenta);
    }
    SUBCASE("kicks are centred with the configured width") {
        n.kick_sigma = 0.35;
        Rng rng(7);
        SystemState one = make_state({0.0}, single_mode(1));
        double sum = 0.0, sum2 = 0.0;
        const int draws = 40000;
        for (int i = 0; i < draws; ++i) {
            const double dp = apply_kicks(one, n, rng).momenta[0];
            sum += dp;
            sum2 += dp * dp;
        }
        const double mean = sum / draws;
        const double var = sum2 / draws - mean * mean;
        CHECK(std::abs(mean) < 4.0 * 0.35 / std::sqrt(draws));
        CHECK(var == doctest::Approx(0.35 * 0.35).epsilon(0.03));
    }
}

TEST_CASE("stationarity detection") {
    const SystemParams p = atlas_params(2);
    const IlluminationPattern pat = single_mode(5);
    const double x = (kPi / 2.0) / 5.0;
    SUBCASE("repeated configurations at an equilibrium") {
        SystemState s = make_state({x, x}, pat);
        std::vector<SystemState> window;
        for (int i = 0; i < 5; ++i) {
            s.time = i * 0.1;
            window.push_back(s);
        }
        CHECK(detect_stationary(window, pat, p, 1e-6, 1e-6));
    }
    SUBCASE("ballistic motion") {
        SystemState s = make_state({x, x}, pat);
        s.momenta = {1.0, 1.0};
        std::vector<SystemState> window;
        for (int i = 0; i < 5; ++i) {
            window.push_back(s);
            s.positions[0] += 0.2;
            s.positions[1] += 0.2;
            s.time += 0.1;
        }
        CHECK_FALSE(detect_stationary(window, pat, p, 1e-6, 1e-6));
    }
    SUBCASE("resting away from an equilibrium") {
        SystemState s = make_state({0.31, 0.97}, pat);
        std::vector<SystemState> window{s, s};
        window[1].time = 1.0;
        CHECK_FALSE(detect_stationary(window, pat, p, 1e-6, 1e-6));
    }
    SUBCASE("window must hold two states") {
        std::vector<SystemState> window{make_state({x, x}, pat)};
        CHECK_THROWS_AS(detect_stationary(window, pat, p, 1e-6, 1e-6), Error);
    }
}

TEST_CASE("run_trajectory") {
    const SystemParams p = atlas_params(2);
    const IlluminationPattern pat = single_mode(5);
    const double x = (kPi / 2.0) / 5.0;
    const std::vector<double> target{x, x + kTwoPi / 5.0};

    SUBCASE("overdamped run from near a stable point converges to it") {
        SystemState s = make_state({target[0] + 0.02, target[1] - 0.015}, pat);
        RunOptions o;
        o.integrator.scheme = Scheme::Overdamped;
        o.integrator.dt = 0.01;
        o.integrator.max_time = 20.0;
        const Trajectory t = run_trajectory(s, static_schedule(pat), p, o);
        CHECK(configuration_distance(t.final_state.positions, target) < 1e-6 * kTwoPi);
        REQUIRE(t.events.size() == 1);
        CHECK(t.events[0].pattern_id == pat.id());
        for (std::size_t i = 1; i < t.samples.size(); ++i) CHECK(t.samples[i].time > t.samples[i - 1].time);
        CHECK(t.samples.back().time == doctest::Approx(20.0));
        CHECK(t.final_state.fields.size() == 1);
    }
    SUBCASE("damped full dynamics settles where stationarity and the force tolerance hold") {
        SystemParams q = p;
        q.friction = 2.0;
        SystemState s = make_state({target[0] + 0.03, target[1] + 0.01}, pat);
        s.fields = adiabatic_field(s.positions, pat, q).amplitudes;
        RunOptions o;
        o.integrator.dt = 0.005;
        o.integrator.max_time = 60.0;
        o.integrator.sample_stride = 50;
        const Trajectory t = run_trajectory(s, static_schedule(pat), q, o);
        std::vector<SystemState> window;
        SystemState cur = t.final_state;
        for (int i = 0; i < 3; ++i) {
            window.push_back(cur);
            cur = step_full(cur, pat, q, 0.005);
        }
        CHECK(detect_stationary(window, pat, q, 1e-6, 1e-6));
        for (double f : adiabatic_force(t.final_state.positions, pat, q)) CHECK(std::abs(f) < 1e-10);
    }
    SUBCASE("identical inputs give identical trajectories") {
        SystemParams q = p;
        q.friction = 0.5;
        SystemState s = make_state({0.2, 1.4}, pat);
        RunOptions o;
        o.integrator.dt = 0.01;
        o.integrator.max_time = 10.0;
        o.integrator.sample_stride = 10;
        o.noise.enabled = true;
        o.noise.kick_interval = 0.5;
        o.noise.kick_sigma = 0.3;
        o.seed = 99;
        const Trajectory a = run_trajectory(s, static_schedule(pat), q, o);
        const Trajectory b = run_trajectory(s, static_schedule(pat), q, o);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].positions == b.samples[i].positions);
            CHECK(a.samples[i].momenta == b.samples[i].momenta);
            CHECK(a.samples[i].p_tot == b.samples[i].p_tot);
        }
        o.seed = 100;
        const Trajectory c = run_trajectory(s, static_schedule(pat), q, o);
        CHECK(c.final_state.positions != a.final_state.positions);
    }
    SUBCASE("fixed-interval switching records one event per phase") {
        Schedule sch;
        sch.mode = ScheduleMode::PeriodicCycle;
        sch.patterns = {IlluminationPattern({{5, 0.625}}, "a"), IlluminationPattern({{3, 0.625}}, "b")};
        sch.trigger = SwitchTrigger::FixedInterval;
        sch.interval = 1.0;
        sch.max_switches = 4;
        RunOptions o;
        o.integrator.scheme = Scheme::Overdamped;
        o.integrator.dt = 0.01;
        o.integrator.max_time = 100.0;
        const Trajectory t = run_trajectory(make_state({0.3, 1.2}, sch.patterns[0]), sch, p, o);
        REQUIRE(t.events.size() == 4);
        CHECK(t.phase_end_intensity.size() == 4);
        CHECK(t.phase_mean_intensity.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(t.events[i].time == doctest::Approx(double(i)));
            CHECK(t.events[i].pattern_id == (i % 2 == 0 ? "a" : "b"));
            CHECK(t.events[i].time >= t.samples.front().time);
            CHECK(t.events[i].time <= t.samples.back().time);
        }
        CHECK(t.final_state.time == doctest::Approx(4.0));
    }
    SUBCASE("stationarity gating that never triggers stalls") {
        Schedule sch;
        sch.mode = ScheduleMode::PeriodicCycle;
        sch.patterns = {pat, single_mode(3)};
        sch.max_switches = 3;
        sch.stall_timeout = 0.5;
        sch.stationarity.tol_v = 1e-300;
        sch.stationarity.tol_f = 1e-300;
        RunOptions o;
        o.integrator.scheme = Scheme::Overdamped;
        o.integrator.dt = 0.01;
        o.integrator.max_time = 100.0;
        try {
            run_trajectory(make_state({0.3, 1.2}, pat), sch, p, o);
            FAIL("no stall");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ScheduleStall);
        }
    }
    SUBCASE("kicks are rejected with the overdamped scheme") {
        RunOptions o;
        o.integrator.scheme = Scheme::Overdamped;
        o.noise.enabled = true;
        o.noise.kick_sigma = 0.1;
        CHECK_THROWS_AS(run_trajectory(make_state({0.3, 1.2}, pat), static_schedule(pat), p, o), Error);
    }
    SUBCASE("state size must match the particle count") {
        RunOptions o;
        CHECK_THROWS_AS(run_trajectory(make_state({0.3}, pat), static_schedule(pat), p, o), Error);
    }
}

TEST_CASE("relax returns a stationary configuration") {
    const SystemParams p = atlas_params(2);
    const IlluminationPattern pat = single_mode(5);
    const auto x = relax(std::vector<double>{0.31, 0.97}, pat, p, 0.01, StationarityCriteria{}, 1000.0);
    for (double f : adiabatic_force(x, pat, p)) CHECK(std::abs(f) < 1e-6);
    StationarityCriteria strict;
    strict.tol_f = 1e-300;
    CHECK_THROWS_AS(relax(std::vector<double>{0.31, 0.97}, pat, p, 0.01, strict, 1.0), Error);
}
