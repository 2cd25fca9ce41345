#include "cavity/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cavity/optics.hpp"

namespace cavity {

namespace {

double wrap(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double circular_distance(double a, double b) {
    const double d = std::abs(wrap(a) - wrap(b));
    return std::min(d, kTwoPi - d);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::size_t int_pow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Newton iteration with a pseudo-inverse of the finite-difference Jacobian.
// Steps are capped at `max_step` per coordinate. Returns true on convergence.
bool newton_polish(std::vector<double>& x, const IlluminationPattern& pattern,
                   const SystemParams& params, const EquilibriaOptions& opt, double step,
                   double max_step) {
    const auto n = static_cast<Eigen::Index>(x.size());
    for (int it = 0; it < opt.max_newton_iterations; ++it) {
        const std::vector<double> f = adiabatic_force(x, pattern, params);
        if (max_abs(f) < opt.tol_force) return true;
        const Eigen::MatrixXd jac = jacobian(x, pattern, params, step);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
        cod.setThreshold(1e-9);
        const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(f.data(), n);
        Eigen::VectorXd dx = -cod.solve(rhs);
        const double biggest = dx.cwiseAbs().maxCoeff();
        if (!std::isfinite(biggest)) return false;
        if (biggest > max_step) dx *= max_step / biggest;
        for (Eigen::Index i = 0; i < n; ++i) x[i] += dx[i];
    }
    return max_abs(adiabatic_force(x, pattern, params)) < opt.tol_force;
}

}  // namespace

void EquilibriaOptions::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::Validation, msg); };
    if (resolution < 8) fail("equilibria resolution must be >= 8");
    if (!(tol_force > 0.0) || !(tol_dedup > 0.0) || !(eps_eig >= 0.0)) {
        fail("equilibria tolerances must be positive");
    }
    if (jacobian_step < 0.0) fail("jacobian_step must be >= 0");
    if (max_newton_iterations < 1) fail("max_newton_iterations must be >= 1");
}

std::vector<double> canonical_configuration(std::span<const double> positions) {
    std::vector<double> c(positions.size());
    std::transform(positions.begin(), positions.end(), c.begin(), wrap);
    std::sort(c.begin(), c.end());
    return c;
}

double configuration_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size() && d < best; ++i) d = std::max(d, circular_distance(a[i], b[perm[i]]));
        best = std::min(best, d);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double default_jacobian_step(const IlluminationPattern& pattern) {
    return 1e-5 / std::max(pattern.max_order(), 1);
}

Eigen::MatrixXd jacobian(std::span<const double> positions, const IlluminationPattern& pattern,
                         const SystemParams& params, double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::Validation, "jacobian step must be > 0");
    const auto n = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd jac(n, n);
    std::vector<double> x(positions.begin(), positions.end());
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x0 = x[j];
        x[j] = x0 + step;
        const std::vector<double> fp = adiabatic_force(x, pattern, params);
        x[j] = x0 - step;
        const std::vector<double> fm = adiabatic_force(x, pattern, params);
        x[j] = x0;
        for (Eigen::Index i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * step);
    }
    return jac;
}

StabilityResult stability(std::span<const double> positions, const IlluminationPattern& pattern,
                          const SystemParams& params, double eps_eig, double tol_force, double step) {
    const double residual = max_abs(adiabatic_force(positions, pattern, params));
    if (residual > tol_force) {
        throw Error(ErrorCode::NotAnEquilibrium,
                    "force residual " + std::to_string(residual) + " exceeds tolerance");
    }
    if (step <= 0.0) step = default_jacobian_step(pattern);
    const Eigen::MatrixXd jac = jacobian(positions, pattern, params, step);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, /*computeEigenvectors=*/false);

    StabilityResult out;
    for (Eigen::Index i = 0; i < jac.rows(); ++i) out.eigen_real_parts.push_back(solver.eigenvalues()[i].real());
    std::sort(out.eigen_real_parts.begin(), out.eigen_real_parts.end());

    const double top = out.eigen_real_parts.empty() ? 0.0 : out.eigen_real_parts.back();
    if (top > eps_eig) {
        out.classification = Stability::Unstable;
    } else if (top < -eps_eig) {
        out.classification = Stability::Stable;
    } else {
        out.classification = Stability::Marginal;
    }
    return out;
}

std::vector<Equilibrium> find_equilibria(const IlluminationPattern& pattern, const SystemParams& params,
                                         const EquilibriaOptions& options) {
    options.validate();
    const int dims = params.n_particles;
    if (dims < 1 || dims > 4) throw Error(ErrorCode::Validation, "equilibrium search supports 1 <= N <= 4");
    const int res = options.resolution;
    const std::size_t points = int_pow(static_cast<std::size_t>(res), dims);
    const double spacing = kTwoPi / res;
    const double step = options.jacobian_step > 0.0 ? options.jacobian_step : default_jacobian_step(pattern);

    // Force components on the grid, point-major.
    std::vector<double> grid(points * dims);
    std::vector<double> x(dims);
    double grid_max = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
        std::size_t rem = p;
        for (int d = 0; d < dims; ++d) {
            x[d] = spacing * static_cast<double>(rem % res);
            rem /= res;
        }
        const std::vector<double> f = adiabatic_force(x, pattern, params);
        for (int d = 0; d < dims; ++d) {
            grid[p * dims + d] = f[d];
            grid_max = std::max(grid_max, std::abs(f[d]));
        }
    }
    if (pattern.empty() || grid_max == 0.0) {
        throw Error(ErrorCode::DegenerateLandscape, "force vanishes on the whole grid; no isolated equilibria");
    }

    const std::size_t corners = std::size_t{1} << dims;
    std::vector<std::size_t> stride(dims);
    for (int d = 0; d < dims; ++d) stride[d] = int_pow(static_cast<std::size_t>(res), d);

    std::vector<std::vector<double>> found;
    std::vector<double> lo(dims);
    std::vector<double> hi(dims);
    std::vector<int> idx(dims);
    for (std::size_t cell = 0; cell < points; ++cell) {
        std::size_t rem = cell;
        for (int d = 0; d < dims; ++d) {
            idx[d] = static_cast<int>(rem % res);
            rem /= res;
        }
        std::fill(lo.begin(), lo.end(), std::numeric_limits<double>::infinity());
        std::fill(hi.begin(), hi.end(), -std::numeric_limits<double>::infinity());
        bool near_zero = false;
        for (std::size_t c = 0; c < corners; ++c) {
            std::size_t p = 0;
            for (int d = 0; d < dims; ++d) p += stride[d] * static_cast<std::size_t>((idx[d] + ((c >> d) & 1)) % res);
            double corner_norm = 0.0;
            for (int d = 0; d < dims; ++d) {
                const double v = grid[p * dims + d];
                lo[d] = std::min(lo[d], v);
                hi[d] = std::max(hi[d], v);
                corner_norm = std::max(corner_norm, std::abs(v));
            }
            near_zero = near_zero || corner_norm < options.tol_force;
        }
        bool brackets = true;
        for (int d = 0; d < dims && brackets; ++d) brackets = lo[d] <= 0.0 && hi[d] >= 0.0;
        if (!brackets && !near_zero) continue;

        for (int d = 0; d < dims; ++d) x[d] = spacing * (idx[d] + 0.5);
        if (!newton_polish(x, pattern, params, options, step, 0.5 * spacing)) continue;
        std::vector<double> canon = canonical_configuration(x);
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const auto& other) {
            return configuration_distance(canon, other) < options.tol_dedup;
        });
        if (!duplicate) found.push_back(std::move(canon));
    }

    auto quantized = [&](const std::vector<double>& c) {
        std::vector<long long> key(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) key[i] = std::llround(c[i] / options.tol_dedup);
        return key;
    };
    std::sort(found.begin(), found.end(), [&](const auto& a, const auto& b) {
        const auto ka = quantized(a);
        const auto kb = quantized(b);
        return ka != kb ? ka < kb : a < b;
    });
    std::vector<Equilibrium> out;
    out.reserve(found.size());
    for (auto& pos : found) {
        Equilibrium eq;
        const StabilityResult st = stability(pos, pattern, params, options.eps_eig, options.tol_force, step);
        eq.classification = st.classification;
        eq.eigen_real_parts = st.eigen_real_parts;
        eq.intensity = adiabatic_field(pos, pattern, params).intensity;
        eq.positions = std::move(pos);
        out.push_back(std::move(eq));
    }
    return out;
}

std::vector<double> LandscapeGrid::point(std::size_t flat_index) const {
    std::vector<double> x(dims);
    for (int d = 0; d < dims; ++d) {
        x[d] = coordinate(static_cast<int>(flat_index % resolution));
        flat_index /= resolution;
    }
    return x;
}

LandscapeGrid landscape(const IlluminationPattern& pattern, const SystemParams& params, int resolution) {
    if (params.n_particles < 1 || params.n_particles > 3) {
        throw Error(ErrorCode::Validation, "landscape supports 1 <= N <= 3");
    }
    if (resolution < 8) throw Error(ErrorCode::Validation, "landscape resolution must be >= 8");
    LandscapeGrid g;
    g.resolution = resolution;
    g.dims = params.n_particles;
    for (const auto& e : pattern.entries()) g.mode_orders.push_back(e.order);
    const std::size_t points = int_pow(static_cast<std::size_t>(resolution), g.dims);
    g.p_tot.resize(points);
    g.mode_intensity.assign(pattern.size(), std::vector<double>(points));
    g.force.assign(g.dims, std::vector<double>(points));
    for (std::size_t p = 0; p < points; ++p) {
        const std::vector<double> x = g.point(p);
        const FieldSolution sol = adiabatic_field(x, pattern, params);
        g.p_tot[p] = sol.intensity;
        for (std::size_t m = 0; m < sol.amplitudes.size(); ++m) g.mode_intensity[m][p] = std::norm(sol.amplitudes[m].alpha);
        const std::vector<double> f = force(x, sol.amplitudes, pattern, params);
        for (int d = 0; d < g.dims; ++d) g.force[d][p] = f[d];
    }
    return g;
}

}  // namespace cavity
