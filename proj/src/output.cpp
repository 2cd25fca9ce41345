#include "cavity/output.hpp"

#include <fstream>
#include <iomanip>
#include <set>

#include "cavity/diagnostics.hpp"

namespace cavity {

namespace {

void use_csv_format(std::ostream& os) {
    os.imbue(std::locale::classic());
    os << std::setprecision(17);
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    return os;
}

void write_equilibria_csv(std::ostream& os, std::span<const Equilibrium> equilibria, int n_particles) {
    use_csv_format(os);
    for (int j = 1; j <= n_particles; ++j) os << "x_" << j << ',';
    os << "classification,P_tot";
    for (int j = 1; j <= n_particles; ++j) os << ",eig_re_" << j;
    os << '\n';
    for (const auto& eq : equilibria) {
        for (double x : eq.positions) os << x << ',';
        os << to_string(eq.classification) << ',' << eq.intensity;
        for (double e : eq.eigen_real_parts) os << ',' << e;
        os << '\n';
    }
}

void write_landscape_csv(std::ostream& os, const LandscapeGrid& grid) {
    use_csv_format(os);
    for (int d = 1; d <= grid.dims; ++d) os << "x_" << d << ',';
    os << "P_tot";
    for (int order : grid.mode_orders) os << ",P_n" << order;
    for (int d = 1; d <= grid.dims; ++d) os << ",F_" << d;
    os << '\n';
    for (std::size_t p = 0; p < grid.size(); ++p) {
        for (double x : grid.point(p)) os << x << ',';
        os << grid.p_tot[p];
        for (const auto& channel : grid.mode_intensity) os << ',' << channel[p];
        for (const auto& f : grid.force) os << ',' << f[p];
        os << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Schedule& schedule) {
    use_csv_format(os);
    std::set<int> orders;
    for (const auto& pat : schedule.patterns) {
        for (const auto& e : pat.entries()) orders.insert(e.order);
    }
    const std::size_t n = traj.samples.empty() ? 0 : traj.samples.front().positions.size();
    os << 't';
    for (std::size_t j = 1; j <= n; ++j) os << ",x_" << j;
    for (std::size_t j = 1; j <= n; ++j) os << ",p_" << j;
    os << ",P_tot,Theta_tot,N0,N0_pairs";
    for (int order : orders) os << ",Theta_n" << order;
    os << ",pattern_id\n";
    for (const auto& s : traj.samples) {
        os << s.time;
        for (double x : s.positions) os << ',' << x;
        for (double p : s.momenta) os << ',' << p;
        os << ',' << s.p_tot << ',' << s.theta_tot << ',' << s.n0 << ',' << s.n0_pairs;
        for (int order : orders) os << ',' << order_parameter(s.positions, order);
        os << ',' << (s.phase < traj.events.size() ? traj.events[s.phase].pattern_id : std::string{}) << '\n';
    }
}

void write_events_csv(std::ostream& os, const Trajectory& traj) {
    use_csv_format(os);
    os << "t,pattern_id\n";
    for (const auto& e : traj.events) os << e.time << ',' << e.pattern_id << '\n';
}

void write_phases_csv(std::ostream& os, const Trajectory& traj) {
    use_csv_format(os);
    os << "switch_index,t_end,pattern_id,P_tot,P_tot_mean\n";
    for (std::size_t i = 0; i < traj.phase_end_intensity.size(); ++i) {
        const double t_end = i + 1 < traj.events.size() ? traj.events[i + 1].time : traj.final_state.time;
        os << i << ',' << t_end << ',' << traj.events[i].pattern_id << ',' << traj.phase_end_intensity[i] << ','
           << traj.phase_mean_intensity[i] << '\n';
    }
}

}  // namespace cavity
