#include "cavity/config.hpp"

#include <cmath>
#include <set>

namespace cavity {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::Validation, msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.contains(key)) fail("unknown key '" + key + "' in " + where);
    }
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(where + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(where + "." + key + " must be finite");
    return d;
}

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) fail(where + "." + key + " is required");
    return get_number(obj, key, where, 0.0);
}

long long get_integer(const json& obj, const char* key, const std::string& where, long long fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
    return v.get<long long>();
}

std::uint64_t get_seed(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    fail(where + "." + key + " must be a non-negative integer");
}

std::string get_string(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) fail(where + "." + key + " must be a string");
    return obj.at(key).get<std::string>();
}

bool get_bool(const json& obj, const char* key, const std::string& where, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) fail(where + "." + key + " must be a boolean");
    return obj.at(key).get<bool>();
}

std::vector<double> get_reals(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number() || !std::isfinite(e.get<double>())) fail(where + " must hold finite numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

json pattern_to_json(const IlluminationPattern& p) {
    json modes = json::array();
    for (const auto& e : p.entries()) modes.push_back({{"mode_order", e.order}, {"eta", e.eta}});
    return {{"name", p.id()}, {"modes", modes}};
}

IlluminationPattern parse_pattern(const json& j, std::size_t index) {
    const std::string where = "patterns[" + std::to_string(index) + "]";
    check_keys(j, where, {"name", "modes", "mask", "eta"});
    const std::string name = get_string(j, "name", where, "p" + std::to_string(index + 1));
    if (j.contains("mask")) {
        if (j.contains("modes")) fail(where + " takes either modes or mask, not both");
        std::vector<int> mask;
        if (!j.at("mask").is_array()) fail(where + ".mask must be an array");
        for (const auto& b : j.at("mask")) {
            if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) fail(where + ".mask holds 0/1 entries");
            mask.push_back(b.get<int>());
        }
        const double eta = require_number(j, "eta", where);
        if (eta < 0.0) fail(where + ".eta must be >= 0");
        return make_binary_pattern(mask, eta, name);
    }
    if (j.contains("eta")) fail(where + ".eta is only valid together with mask");
    if (!j.contains("modes") || !j.at("modes").is_array()) fail(where + ".modes must be an array");
    std::vector<ModeDrive> entries;
    for (std::size_t m = 0; m < j.at("modes").size(); ++m) {
        const json& e = j.at("modes")[m];
        const std::string ew = where + ".modes[" + std::to_string(m) + "]";
        check_keys(e, ew, {"mode_order", "eta"});
        if (!e.contains("mode_order")) fail(ew + ".mode_order is required");
        const long long order = get_integer(e, "mode_order", ew, 0);
        if (order < 1 || order > 1'000'000'000) fail(ew + ".mode_order must be a positive integer");
        entries.push_back({static_cast<int>(order), require_number(e, "eta", ew)});
    }
    return IlluminationPattern(std::move(entries), name);
}

ScheduleMode parse_mode(const std::string& s) {
    if (s == "static") return ScheduleMode::Static;
    if (s == "periodic_cycle") return ScheduleMode::PeriodicCycle;
    if (s == "random_switch") return ScheduleMode::RandomSwitch;
    fail("schedule.mode must be static, periodic_cycle or random_switch");
}

SwitchTrigger parse_trigger(const std::string& s) {
    if (s == "stationarity") return SwitchTrigger::Stationarity;
    if (s == "fixed_interval") return SwitchTrigger::FixedInterval;
    fail("schedule.trigger must be stationarity or fixed_interval");
}

Scheme parse_scheme(const std::string& s) {
    if (s == "full") return Scheme::Full;
    if (s == "overdamped") return Scheme::Overdamped;
    fail("integrator.scheme must be full or overdamped");
}

json pattern_mask(const std::vector<int>& mask, double eta, const std::string& name) {
    return {{"name", name}, {"mask", mask}, {"eta", eta}};
}

}  // namespace

json merge_config(json base, const json& overrides) {
    base.merge_patch(overrides);
    return base;
}

RunConfig build_system(const json& config) {
    check_keys(config, "config",
               {"unit", "system", "patterns", "comb", "schedule", "integrator", "noise", "seed", "initial",
                "equilibria", "diagnostics", "runs"});
    RunConfig rc;
    rc.seed = get_seed(config, "seed", "config", 0);
    rc.unit = get_string(config, "unit", "config", "kappa");
    if (rc.unit != "kappa" && rc.unit != "omega_R") fail("unit must be \"kappa\" or \"omega_R\"");

    // system
    if (!config.contains("system")) fail("config.system is required");
    const json& sys = config.at("system");
    check_keys(sys, "system", {"n_particles", "recoil_frequency", "kappa", "u0", "delta_c", "friction"});
    SystemParams& p = rc.params;
    const long long n = get_integer(sys, "n_particles", "system", 0);
    if (n < 1 || n > 1'000'000) fail("system.n_particles must be >= 1");
    p.n_particles = static_cast<int>(n);
    p.kappa = get_number(sys, "kappa", "system", 1.0);
    p.recoil_frequency = get_number(sys, "recoil_frequency", "system", 1.0);
    if (rc.unit == "kappa" && p.kappa != 1.0) fail("with unit \"kappa\" the kappa value must be 1");
    if (rc.unit == "omega_R" && p.recoil_frequency != 1.0) {
        fail("with unit \"omega_R\" the recoil_frequency value must be 1");
    }
    p.u0 = require_number(sys, "u0", "system");
    p.delta_c = require_number(sys, "delta_c", "system");
    p.friction = get_number(sys, "friction", "system", 0.0);
    p.validate();

    // patterns
    std::vector<IlluminationPattern> patterns;
    if (config.contains("patterns")) {
        if (!config.at("patterns").is_array()) fail("patterns must be an array");
        for (std::size_t i = 0; i < config.at("patterns").size(); ++i) {
            patterns.push_back(parse_pattern(config.at("patterns")[i], i));
        }
    }
    if (config.contains("comb")) {
        const json& c = config.at("comb");
        check_keys(c, "comb", {"first_order", "spacing", "master_count", "pattern_count", "modes_per_pattern", "eta"});
        CombSpec spec;
        spec.first_order = static_cast<int>(get_integer(c, "first_order", "comb", spec.first_order));
        spec.spacing = static_cast<int>(get_integer(c, "spacing", "comb", spec.spacing));
        spec.master_count = static_cast<int>(get_integer(c, "master_count", "comb", spec.master_count));
        spec.pattern_count = static_cast<int>(get_integer(c, "pattern_count", "comb", spec.pattern_count));
        spec.modes_per_pattern = static_cast<int>(get_integer(c, "modes_per_pattern", "comb", spec.modes_per_pattern));
        spec.eta = require_number(c, "eta", "comb");
        if (spec.eta < 0.0 || spec.pattern_count < 1) fail("comb needs eta >= 0 and pattern_count >= 1");
        Rng rng(derive_seed(rc.seed, 3));
        for (auto& cp : make_comb_patterns(spec, rng)) patterns.push_back(std::move(cp));
    }
    if (patterns.empty()) fail("config needs patterns or comb");
    std::set<std::string> names;
    for (const auto& pat : patterns) {
        if (!names.insert(pat.id()).second) fail("duplicate pattern name '" + pat.id() + "'");
    }

    // schedule
    const json sched = config.value("schedule", json::object());
    check_keys(sched, "schedule",
               {"mode", "trigger", "interval", "max_switches", "seed", "stall_timeout", "tol_v", "tol_f", "window",
                "check_stride"});
    Schedule& s = rc.schedule;
    s.patterns = patterns;
    s.mode = parse_mode(get_string(sched, "mode", "schedule", "static"));
    s.trigger = parse_trigger(get_string(sched, "trigger", "schedule", "stationarity"));
    s.interval = get_number(sched, "interval", "schedule", 0.0);
    const long long switches = get_integer(sched, "max_switches", "schedule", 1);
    if (switches < 1) fail("schedule.max_switches must be >= 1");
    s.max_switches = static_cast<std::size_t>(switches);
    s.seed = get_seed(sched, "seed", "schedule", derive_seed(rc.seed, 2));
    s.stall_timeout = get_number(sched, "stall_timeout", "schedule", 0.0);
    s.stationarity.tol_v = get_number(sched, "tol_v", "schedule", s.stationarity.tol_v);
    s.stationarity.tol_f = get_number(sched, "tol_f", "schedule", s.stationarity.tol_f);
    const long long window = get_integer(sched, "window", "schedule", static_cast<long long>(s.stationarity.window));
    const long long check = get_integer(sched, "check_stride", "schedule", static_cast<long long>(s.stationarity.check_stride));
    if (window < 2 || check < 1) fail("schedule.window must be >= 2 and check_stride >= 1");
    s.stationarity.window = static_cast<std::size_t>(window);
    s.stationarity.check_stride = static_cast<std::size_t>(check);
    s.validate();

    // integrator
    const json integ = config.value("integrator", json::object());
    check_keys(integ, "integrator", {"scheme", "order", "dt", "max_time", "sample_stride"});
    IntegratorOptions& io = rc.run.integrator;
    io.scheme = parse_scheme(get_string(integ, "scheme", "integrator", "full"));
    const long long order = get_integer(integ, "order", "integrator", 4);
    if (order != 2 && order != 4) fail("integrator.order must be 2 or 4");
    io.order = static_cast<int>(order);
    io.dt = get_number(integ, "dt", "integrator", default_time_step(p));
    io.max_time = get_number(integ, "max_time", "integrator", 1.0);
    const long long stride = get_integer(integ, "sample_stride", "integrator", 100);
    if (stride < 1) fail("integrator.sample_stride must be >= 1");
    io.sample_stride = static_cast<std::size_t>(stride);
    io.validate(p);

    // noise
    const json noise = config.value("noise", json::object());
    check_keys(noise, "noise", {"enabled", "kick_interval", "kick_sigma"});
    NoiseOptions& no = rc.run.noise;
    no.enabled = get_bool(noise, "enabled", "noise", false);
    no.kick_interval = get_number(noise, "kick_interval", "noise", 1.0);
    no.kick_sigma = get_number(noise, "kick_sigma", "noise", 0.0);
    no.validate();
    if (no.enabled && io.scheme == Scheme::Overdamped) fail("momentum kicks need the full scheme");
    rc.run.seed = rc.seed;

    // equilibria
    const json eqj = config.value("equilibria", json::object());
    check_keys(eqj, "equilibria",
               {"resolution", "tol_force", "tol_dedup", "eps_eig", "jacobian_step", "max_newton_iterations"});
    EquilibriaOptions& eo = rc.equilibria;
    eo.resolution = static_cast<int>(get_integer(eqj, "resolution", "equilibria", eo.resolution));
    eo.tol_force = get_number(eqj, "tol_force", "equilibria", eo.tol_force);
    eo.tol_dedup = get_number(eqj, "tol_dedup", "equilibria", eo.tol_dedup);
    eo.eps_eig = get_number(eqj, "eps_eig", "equilibria", eo.eps_eig);
    eo.jacobian_step = get_number(eqj, "jacobian_step", "equilibria", eo.jacobian_step);
    eo.max_newton_iterations =
        static_cast<int>(get_integer(eqj, "max_newton_iterations", "equilibria", eo.max_newton_iterations));
    eo.validate();

    const json diag = config.value("diagnostics", json::object());
    check_keys(diag, "diagnostics", {"cluster_epsilon"});
    rc.run.cluster_epsilon = get_number(diag, "cluster_epsilon", "diagnostics", 0.0);
    if (rc.run.cluster_epsilon < 0.0) fail("diagnostics.cluster_epsilon must be >= 0");

    const long long runs = get_integer(config, "runs", "config", 1);
    if (runs < 1) fail("runs must be >= 1");
    rc.runs = static_cast<int>(runs);

    // initial state
    const json init = config.value("initial", json::object());
    check_keys(init, "initial", {"positions", "momenta"});
    std::vector<double> positions;
    if (init.contains("positions")) {
        positions = get_reals(init.at("positions"), "initial.positions");
        if (positions.size() != static_cast<std::size_t>(p.n_particles)) {
            fail("initial.positions must list n_particles values");
        }
    } else {
        Rng rng(derive_seed(rc.seed, 0));
        std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
        positions.resize(p.n_particles);
        for (double& x : positions) x = uniform(rng);
    }
    rc.initial = make_state(std::move(positions), patterns.front());
    if (init.contains("momenta")) {
        rc.initial.momenta = get_reals(init.at("momenta"), "initial.momenta");
        if (rc.initial.momenta.size() != static_cast<std::size_t>(p.n_particles)) {
            fail("initial.momenta must list n_particles values");
        }
    }

    // resolved snapshot
    json resolved = config;
    resolved.erase("comb");
    resolved["unit"] = rc.unit;
    resolved["seed"] = rc.seed;
    resolved["patterns"] = json::array();
    for (const auto& pat : patterns) resolved["patterns"].push_back(pattern_to_json(pat));
    resolved["system"] = {{"n_particles", p.n_particles}, {"recoil_frequency", p.recoil_frequency},
                          {"kappa", p.kappa},             {"u0", p.u0},
                          {"delta_c", p.delta_c},         {"friction", p.friction}};
    resolved["schedule"] = {{"mode", to_string(s.mode)},
                            {"trigger", to_string(s.trigger)},
                            {"interval", s.interval},
                            {"max_switches", s.max_switches},
                            {"seed", s.seed},
                            {"stall_timeout", s.stall_timeout},
                            {"tol_v", s.stationarity.tol_v},
                            {"tol_f", s.stationarity.tol_f},
                            {"window", s.stationarity.window},
                            {"check_stride", s.stationarity.check_stride}};
    resolved["integrator"] = {{"scheme", to_string(io.scheme)},
                              {"order", io.order},
                              {"dt", io.dt},
                              {"max_time", io.max_time},
                              {"sample_stride", io.sample_stride}};
    resolved["noise"] = {{"enabled", no.enabled}, {"kick_interval", no.kick_interval}, {"kick_sigma", no.kick_sigma}};
    resolved["equilibria"] = {{"resolution", eo.resolution},       {"tol_force", eo.tol_force},
                              {"tol_dedup", eo.tol_dedup},         {"eps_eig", eo.eps_eig},
                              {"jacobian_step", eo.jacobian_step}, {"max_newton_iterations", eo.max_newton_iterations}};
    resolved["diagnostics"] = {{"cluster_epsilon", rc.run.cluster_epsilon}};
    resolved["runs"] = rc.runs;
    rc.resolved = std::move(resolved);
    return rc;
}

std::vector<std::string> preset_names() {
    return {"fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4", "fig6desk", "fig6full"};
}

json preset(const std::string& name) {
    constexpr double pi2 = kPi * kPi;

    // Few-particle atlases: eta = 5 kappa / 8, N U0 = -kappa / 10, delta_c = N U0 - kappa.
    auto atlas = [](int n, std::vector<int> mask, int resolution) {
        const double nu0 = -0.1;
        return json{
            {"unit", "kappa"},
            {"system", {{"n_particles", n}, {"recoil_frequency", 1.0}, {"kappa", 1.0}, {"u0", nu0 / n},
                        {"delta_c", nu0 - 1.0}, {"friction", 1.0}}},
            {"patterns", json::array({pattern_mask(mask, 5.0 / 8.0, "main")})},
            {"schedule", {{"mode", "static"}}},
            {"integrator", {{"scheme", "overdamped"}, {"dt", 0.01}, {"max_time", 100.0}, {"sample_stride", 100}}},
            {"equilibria", {{"resolution", resolution}}},
            {"seed", 1},
        };
    };
    // Adaptive runs: eta = kappa / 5, N U0 = -kappa, delta_c = N U0 / 2 - 2 kappa.
    auto adaptive = [](int n) {
        const double nu0 = -1.0;
        return json{
            {"unit", "kappa"},
            {"system", {{"n_particles", n}, {"recoil_frequency", 1.0}, {"kappa", 1.0}, {"u0", nu0 / n},
                        {"delta_c", nu0 / 2.0 - 2.0}, {"friction", 1.0}}},
            {"seed", 1},
        };
    };

    if (name == "fig2a") return atlas(2, {0, 0, 0, 0, 1}, 100);
    if (name == "fig2b") return atlas(2, {1, 0, 1, 1, 1}, 100);
    if (name == "fig2c") return atlas(2, {0, 1, 1, 1, 0}, 100);
    if (name == "fig3a") return atlas(3, {1, 0, 1, 0, 1}, 48);
    if (name == "fig3b") return atlas(3, {1, 0, 1, 1, 1}, 48);
    if (name == "fig3c") {
        json j = adaptive(3);
        const double eta = 0.2;
        j["patterns"] = json::array({pattern_mask({1, 0, 1, 0, 0, 0, 1}, eta, "c1"),
                                     pattern_mask({0, 1, 1, 0, 1, 1, 0}, eta, "c2"),
                                     pattern_mask({0, 0, 1, 0, 1, 0, 0}, eta, "c3"),
                                     pattern_mask({0, 1, 1, 1, 1, 1, 0}, eta, "c4"),
                                     pattern_mask({1, 1, 1, 1, 0, 1, 0}, eta, "c5")});
        j["schedule"] = {{"mode", "periodic_cycle"}, {"trigger", "stationarity"}, {"max_switches", 100},
                         {"tol_v", 1e-7},            {"tol_f", 1e-7},             {"window", 5},
                         {"check_stride", 10},       {"stall_timeout", 2e4}};
        j["integrator"] = {{"scheme", "overdamped"}, {"dt", 0.05}, {"max_time", 1e6}, {"sample_stride", 200}};
        return j;
    }
    if (name == "fig4") {
        const int n = 2;
        const double kappa = 10.0 / pi2;
        const double u0 = -5.0 / pi2;
        const double kick_interval = pi2 / 5.0;
        return json{
            {"unit", "omega_R"},
            {"system", {{"n_particles", n}, {"recoil_frequency", 1.0}, {"kappa", kappa}, {"u0", u0},
                        {"delta_c", n * u0 / 2.0 - 2.0 * kappa}, {"friction", 20.0 / pi2}}},
            {"patterns", json::array({pattern_mask({1, 0, 1, 1, 1, 0, 1}, 2.0 / pi2, "main")})},
            {"schedule", {{"mode", "static"}}},
            {"integrator", {{"scheme", "full"}, {"dt", kick_interval / 100.0}, {"max_time", 1e4 * kick_interval},
                            {"sample_stride", 100}}},
            {"noise", {{"enabled", true}, {"kick_interval", kick_interval}, {"kick_sigma", 0.35}}},
            {"seed", 1},
        };
    }
    if (name == "fig6desk" || name == "fig6full") {
        const bool full = name == "fig6full";
        json j = adaptive(full ? 100 : 30);
        j["comb"] = {{"first_order", 1003}, {"spacing", 7}, {"master_count", full ? 100 : 10},
                     {"pattern_count", 5},  {"modes_per_pattern", full ? 50 : 5}, {"eta", 0.2}};
        j["schedule"] = {{"mode", "random_switch"}, {"trigger", "stationarity"}, {"max_switches", full ? 8000 : 300},
                         {"tol_v", 1e-5},          {"tol_f", 1e-5},             {"window", 3},
                         {"check_stride", 20},     {"stall_timeout", 50.0}};
        j["integrator"] = {{"scheme", "overdamped"}, {"dt", 1e-7}, {"max_time", 1e9}, {"sample_stride", 20}};
        return j;
    }
    fail("unknown preset '" + name + "'");
}

}  // namespace cavity
