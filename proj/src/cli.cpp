#include "cavity/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <CLI11.hpp>

#include "cavity/diagnostics.hpp"
#include "cavity/equilibria.hpp"
#include "cavity/optics.hpp"
#include "cavity/output.hpp"

#ifndef CAVITY_ADAPT_VERSION
#define CAVITY_ADAPT_VERSION "dev"
#endif

namespace cavity {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

void report(std::ostream& err, const std::string& code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

// Tracks the files a command writes so they can be listed or rolled back.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir_.string());
    }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) {
        std::ofstream os = open_output(dir_ / name);
        files_.push_back(name);
        writer(os);
        os.flush();
        if (!os) throw Error(ErrorCode::Io, "failed writing " + (dir_ / name).string());
    }

    void remove_all() {
        for (const auto& f : files_) {
            std::error_code ec;
            fs::remove(dir_ / f, ec);
        }
        files_.clear();
    }

    const std::vector<std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

void write_manifest(const fs::path& dir, const std::string& name, const json& config, std::uint64_t seed,
                    const std::vector<std::string>& outputs, Clock::time_point start, const json& extra = {}) {
    json m = {{"config", config},
              {"seed", seed},
              {"version", CAVITY_ADAPT_VERSION},
              {"outputs", outputs},
              {"duration_s", std::chrono::duration<double>(Clock::now() - start).count()}};
    if (!extra.is_null()) m.update(extra);
    std::ofstream os = open_output(dir / name);
    os << m.dump(2) << '\n';
    if (!os) throw Error(ErrorCode::Io, "failed writing " + (dir / name).string());
}

double mean_of(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

json mean_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return {{"mean", m}, {"stddev", sd}};
}

json summary_json(const RunSummary& s) {
    json j = {{"seed", s.seed},
              {"final_P_tot", s.final_p_tot},
              {"final_Theta_tot", s.final_theta_tot},
              {"final_N0", s.final_n0},
              {"first_decile_P_tot", s.first_decile_p_tot},
              {"last_decile_P_tot", s.last_decile_p_tot},
              {"adapted", s.last_decile_p_tot > s.first_decile_p_tot}};
    if (s.memory_first_application && s.memory_reapplication) {
        j["memory"] = {{"first_application_P_tot", *s.memory_first_application},
                       {"reapplication_P_tot", *s.memory_reapplication},
                       {"remembered", *s.memory_reapplication > *s.memory_first_application}};
    }
    return j;
}

}  // namespace

unsigned thread_budget() {
    if (const char* env = std::getenv("CAVITY_ADAPT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

json load_config(const CommandLine& cl) {
    json config = cl.preset ? preset(*cl.preset) : json::object();
    if (cl.config) {
        std::ifstream in(*cl.config);
        if (!in) throw Error(ErrorCode::Io, "cannot read config " + cl.config->string());
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::Validation, std::string("config does not parse: ") + e.what());
        }
        config = merge_config(std::move(config), file);
    }
    if (!cl.preset && !cl.config) throw Error(ErrorCode::Validation, "need --config or --preset");
    if (cl.seed) config["seed"] = *cl.seed;
    if (cl.runs) config["runs"] = *cl.runs;
    return config;
}

RunSummary summarize_run(const RunConfig& rc, const Trajectory& traj) {
    RunSummary s;
    s.seed = rc.seed;
    if (!traj.samples.empty()) {
        const auto& last = traj.samples.back();
        s.final_p_tot = last.p_tot;
        s.final_theta_tot = last.theta_tot;
        s.final_n0 = last.n0;
    }
    std::vector<double> series = traj.phase_mean_intensity;
    if (series.size() < 10) {
        series.clear();
        for (const auto& smp : traj.samples) series.push_back(smp.p_tot);
    }
    if (!series.empty()) {
        const std::size_t decile = std::max<std::size_t>(1, series.size() / 10);
        s.first_decile_p_tot = mean_of(std::span(series).first(decile));
        s.last_decile_p_tot = mean_of(std::span(series).last(decile));
    }
    const bool switching = rc.schedule.mode != ScheduleMode::Static && rc.schedule.max_switches > 1;
    if (switching && rc.run.integrator.scheme == Scheme::Overdamped) {
        const IlluminationPattern& first = rc.schedule.patterns.front();
        const double budget = rc.schedule.stall_timeout > 0.0 ? rc.schedule.stall_timeout : rc.run.integrator.max_time;
        const auto relaxed_initial = relax(rc.initial.positions, first, rc.params, rc.run.integrator.dt,
                                           rc.schedule.stationarity, budget);
        const auto relaxed_final = relax(traj.final_state.positions, first, rc.params, rc.run.integrator.dt,
                                         rc.schedule.stationarity, budget);
        s.memory_first_application = adiabatic_field(relaxed_initial, first, rc.params).intensity;
        s.memory_reapplication = adiabatic_field(relaxed_final, first, rc.params).intensity;
    }
    return s;
}

json realization_config(const json& resolved, std::size_t index) {
    json j = resolved;
    const std::uint64_t master = resolved.value("seed", std::uint64_t{0});
    j["seed"] = derive_seed(master, 1000 + index);
    if (j.contains("schedule")) j["schedule"].erase("seed");
    return j;
}

EnsembleResult run_ensemble(const json& config, int n_runs, unsigned threads) {
    if (n_runs < 1) throw Error(ErrorCode::Validation, "ensemble needs runs >= 1");
    const RunConfig base = build_system(config);

    EnsembleResult result;
    const auto n = static_cast<std::size_t>(n_runs);
    result.configs.resize(n);
    result.trajectories.resize(n);
    result.summaries.resize(n);
    result.errors.assign(n, std::string{});
    for (std::size_t i = 0; i < n; ++i) result.configs[i] = build_system(realization_config(base.resolved, i));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const RunConfig& rc = result.configs[i];
                result.trajectories[i] = run_trajectory(rc.initial, rc.schedule, rc.params, rc.run);
                result.summaries[i] = summarize_run(rc, result.trajectories[i]);
            } catch (const Error& e) {
                result.errors[i] = std::string(to_string(e.code())) + ": " + e.what();
            } catch (const std::exception& e) {
                result.errors[i] = e.what();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<double> p, theta, n0;
    json runs = json::array();
    std::size_t adapted = 0;
    std::size_t completed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!result.errors[i].empty()) continue;
        ++completed;
        const RunSummary& s = result.summaries[i];
        p.push_back(s.final_p_tot);
        theta.push_back(s.final_theta_tot);
        n0.push_back(s.final_n0);
        if (s.last_decile_p_tot > s.first_decile_p_tot) ++adapted;
        json r = summary_json(s);
        r["index"] = i;
        runs.push_back(std::move(r));
    }
    result.aggregate = {{"runs", runs},
                        {"completed", completed},
                        {"final_P_tot", mean_std(p)},
                        {"final_Theta_tot", mean_std(theta)},
                        {"final_N0", mean_std(n0)},
                        {"adapted_runs", adapted}};
    return result;
}

int cmd_equilibria(const json& config, const fs::path& out_dir, std::ostream& err) {
    const auto start = Clock::now();
    std::optional<OutputSet> outputs;
    try {
        const RunConfig rc = build_system(config);
        const int n = rc.params.n_particles;
        if (n > 4) throw Error(ErrorCode::Validation, "equilibria needs n_particles <= 4");
        outputs.emplace(out_dir);
        const IlluminationPattern& pattern = rc.schedule.patterns.front();
        const auto eqs = find_equilibria(pattern, rc.params, rc.equilibria);
        if (n <= 2) {
            const LandscapeGrid grid = landscape(pattern, rc.params, rc.equilibria.resolution);
            outputs->write("landscape.csv", [&](std::ostream& os) { write_landscape_csv(os, grid); });
        }
        outputs->write("equilibria.csv", [&](std::ostream& os) { write_equilibria_csv(os, eqs, n); });
        std::size_t stable = 0;
        for (const auto& e : eqs) stable += e.classification == Stability::Stable;
        write_manifest(out_dir, "manifest.json", rc.resolved, rc.seed, outputs->files(), start,
                       json{{"equilibria", {{"total", eqs.size()}, {"stable", stable}}}});
        return 0;
    } catch (const Error& e) {
        if (outputs) outputs->remove_all();
        report(err, to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        if (outputs) outputs->remove_all();
        report(err, "InternalError", e.what());
    }
    return 2;
}

int cmd_run(const json& config, const fs::path& out_dir, std::ostream& err) {
    const auto start = Clock::now();
    std::optional<OutputSet> outputs;
    try {
        const RunConfig rc = build_system(config);
        outputs.emplace(out_dir);
        const Trajectory traj = run_trajectory(rc.initial, rc.schedule, rc.params, rc.run);
        outputs->write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj, rc.schedule); });
        outputs->write("events.csv", [&](std::ostream& os) { write_events_csv(os, traj); });
        outputs->write("phases.csv", [&](std::ostream& os) { write_phases_csv(os, traj); });
        write_manifest(out_dir, "manifest.json", rc.resolved, rc.seed, outputs->files(), start);
        return 0;
    } catch (const Error& e) {
        if (outputs) outputs->remove_all();
        report(err, to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        if (outputs) outputs->remove_all();
        report(err, "InternalError", e.what());
    }
    return 2;
}

int cmd_ensemble(const json& config, const fs::path& out_dir, int n_runs, std::ostream& err) {
    const auto start = Clock::now();
    try {
        const EnsembleResult result = run_ensemble(config, n_runs, thread_budget());
        OutputSet outputs(out_dir);
        std::vector<std::string> failures;
        for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
            if (!result.errors[i].empty()) {
                failures.push_back("run " + std::to_string(i) + ": " + result.errors[i]);
                continue;
            }
            char prefix[32];
            std::snprintf(prefix, sizeof prefix, "run_%03zu_", i);
            const auto& traj = result.trajectories[i];
            const auto& sched = result.configs[i].schedule;
            outputs.write(std::string(prefix) + "trajectory.csv",
                          [&](std::ostream& os) { write_trajectory_csv(os, traj, sched); });
            outputs.write(std::string(prefix) + "events.csv", [&](std::ostream& os) { write_events_csv(os, traj); });
            outputs.write(std::string(prefix) + "phases.csv", [&](std::ostream& os) { write_phases_csv(os, traj); });
        }
        outputs.write("summary.json", [&](std::ostream& os) { os << result.aggregate.dump(2) << '\n'; });
        const RunConfig base = build_system(config);
        if (!failures.empty()) {
            write_manifest(out_dir, "manifest.partial.json", base.resolved, base.seed, outputs.files(), start,
                           json{{"partial", true}, {"failures", failures}});
            report(err, "RunFailed", failures.front());
            return 2;
        }
        write_manifest(out_dir, "manifest.json", base.resolved, base.seed, outputs.files(), start,
                       json{{"runs", n_runs}});
        return 0;
    } catch (const Error& e) {
        report(err, to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        report(err, "InternalError", e.what());
    }
    return 2;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive multifrequency self-ordering in a multimode cavity"};
    app.set_version_flag("--version", CAVITY_ADAPT_VERSION);
    CommandLine cl;
    std::string config_path;
    std::string preset_name;
    std::uint64_t seed = 0;
    int runs = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--preset", preset_name, "built-in parameter set")
            ->check(CLI::IsMember(preset_names()));
        sub->add_option("--seed", seed, "master RNG seed");
        sub->add_option("--out", cl.out, "output directory");
    };
    CLI::App* eq = app.add_subcommand("equilibria", "enumerate and classify equilibria");
    CLI::App* run = app.add_subcommand("run", "integrate one trajectory");
    CLI::App* ens = app.add_subcommand("ensemble", "run independent seeded trajectories");
    for (CLI::App* sub : {eq, run, ens}) add_common(sub);
    ens->add_option("--runs", runs, "number of realizations")->check(CLI::PositiveNumber);
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    CLI::App* chosen = app.get_subcommands().front();
    cl.command = chosen->get_name();
    if (chosen->count("--config")) cl.config = config_path;
    if (chosen->count("--preset")) cl.preset = preset_name;
    if (chosen->count("--seed")) cl.seed = seed;

    json config;
    try {
        config = load_config(cl);
    } catch (const Error& e) {
        report(err, to_string(e.code()), e.what());
        return 2;
    }

    if (cl.command == "equilibria") return cmd_equilibria(config, cl.out, err);
    if (cl.command == "run") return cmd_run(config, cl.out, err);
    if (!chosen->count("--runs")) runs = config.value("runs", 1);
    return cmd_ensemble(config, cl.out, runs, err);
}

}  // namespace cavity
