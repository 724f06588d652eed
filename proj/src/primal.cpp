#include "fsiobs/primal.hpp"

#include "fsiobs/mac.hpp"
#include "fsiobs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fsiobs {

namespace {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

double half_inner(const Field& a, const Field& b, const Grid& g) { return g.dx * g.dz * (a.cwiseProduct(b)).sum(); }
double trace_inner(const Trace& a, const Trace& b, const Grid& g) { return g.dx * a.dot(b); }

Trace wall_velocity(const PrimalState& s, const ModelParams& p, const Grid& g)
{
    return s.beta_t + p.u_bar1 * diff_trace(s.beta, g, 1);
}

bool supported(const Field& f, const Eigen::VectorXd& ind)
{
    for (int i = 0; i < f.rows(); ++i)
        if (ind(i) == 0.0 && f.row(i).cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

}  // namespace

PrimalState zero_primal(const Grid& g) { return {zero_field(g), zero_velocity(g), zero_trace(g), zero_trace(g)}; }

bool controls_supported(const Controls& c, const Grid& g)
{
    const Eigen::VectorXd ind = omega_indicator(g);
    for (std::size_t n = 0; n < c.v_sigma.size(); ++n)
        if (!supported(c.v_sigma[n], ind)) return false;
    for (std::size_t n = 0; n < c.v_u.size(); ++n)
        if (!supported(c.v_u[n].v1, ind) || !supported(c.v_u[n].v2, ind)) return false;
    for (std::size_t n = 0; n < c.v_beta.size(); ++n)
        if (!supported(Field(c.v_beta[n]), ind)) return false;
    return true;
}

Controls random_controls(unsigned seed, const Grid& g)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const Eigen::VectorXd ind = omega_indicator(g);
    auto draw = [&](int rows, int cols) {
        Field f(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) f(i, j) = n01(rng) * ind(i);
        return f;
    };
    Controls c;
    c.v_sigma = make_trajectory(g, zero_field(g));
    c.v_u = make_trajectory(g, zero_velocity(g));
    c.v_beta = make_trajectory(g, zero_trace(g));
    for (int n = 0; n <= g.nt; ++n) {
        c.v_sigma[n] = draw(g.nx, g.nz);
        c.v_u[n].v1 = draw(g.nx, g.nz);
        c.v_u[n].v2 = draw(g.nx, g.nz - 1);
        c.v_beta[n] = draw(g.nx, 1).col(0);
    }
    return c;
}

CompatReport check_primal_compat(const PrimalState& s, const ModelParams& p, const Grid& g, double tol)
{
    const TerminalData td{s.sigma, s.u, wall_velocity(s, p, g), zero_trace(g)};
    CompatReport r = check_compat(td, p, g, tol);
    // the flux conditions belong to the adjoint only
    r.flux_top = r.flux_bottom = 0.0;
    r.pass = r.normal_top < r.tol && r.normal_bottom < r.tol && r.curl_walls < r.tol;
    return r;
}

PrimalState random_primal_data(const RandomDataSpec& spec, const ModelParams& p, const Grid& g)
{
    const TerminalData td = random_compatible_data(spec, p, g);
    RandomDataSpec beam_spec = spec;
    beam_spec.seed = spec.seed + 1000003u;
    const Trace beta = random_compatible_data(beam_spec, p, g).psi_T;
    return {td.sigma_T, td.v_T, beta, td.psi_T - p.u_bar1 * diff_trace(beta, g, 1)};
}

Trajectory<PrimalState> solve_primal(const PrimalState& init, const Controls& ctrl, const ModelParams& p,
                                     const Grid& g)
{
    if (init.sigma.rows() != g.nx || init.sigma.cols() != g.nz || init.u.v2.cols() != g.nz - 1 ||
        init.beta.size() != g.nx)
        throw InvariantError("grid mismatch: initial state shape differs from the grid");
    const auto compat = check_primal_compat(init, p, g);
    if (!compat.pass)
        throw InvariantError("incompatible initial state: wall conditions violated (normal " +
                             std::to_string(std::max(compat.normal_top, compat.normal_bottom)) + ", curl " +
                             std::to_string(compat.curl_walls) + ", tolerance " + std::to_string(compat.tol) + ")");
    const bool forced = !ctrl.empty();
    if (forced && (ctrl.v_sigma.size() != std::size_t(g.nt + 1) || ctrl.v_u.size() != std::size_t(g.nt + 1) ||
                   ctrl.v_beta.size() != std::size_t(g.nt + 1)))
        throw InvariantError("grid mismatch: controls need nt + 1 snapshots of every component");

    const int nm = g.nyquist(), nz = g.nz, J = nz - 1, nt = g.nt;
    const mac::FullLayout L{nz};
    const double rho = p.rho_bar;

    // modal forcing per time, laid out like the state
    std::vector<std::vector<Vec>> force;
    if (forced) {
        force.assign(nt + 1, std::vector<Vec>(nm, Vec::Zero(L.size())));
        parallel_for(nt + 1, [&](int n) {
            const Spectrum s = fourier_x(ctrl.v_sigma[n]), u1 = fourier_x(ctrl.v_u[n].v1),
                           u2 = fourier_x(ctrl.v_u[n].v2);
            const Eigen::VectorXcd b = fourier_trace(ctrl.v_beta[n]);
            for (int m = 0; m < nm; ++m) {
                Vec& f = force[n][m];
                f.segment(L.sigma(0), nz) = s.row(m).transpose();
                f.segment(L.u1(0), nz) = u1.row(m).transpose() / rho;
                f.segment(L.u2(0), J) = u2.row(m).transpose() / rho;
                f(L.vel()) = b(m);
            }
        });
    }

    const Spectrum s0 = fourier_x(init.sigma), u10 = fourier_x(init.u.v1), u20 = fourier_x(init.u.v2);
    const Eigen::VectorXcd b0 = fourier_trace(init.beta), bt0 = fourier_trace(init.beta_t);
    std::vector<Mat> tr(nm, Mat::Zero(L.size(), nt + 1));
    parallel_for(nm, [&](int m) {
        const Mat A = mac::primal_generator(mac::mode_context(p, g, m));
        const Mat I = Mat::Identity(L.size(), L.size());
        const Eigen::PartialPivLU<Mat> lu(I - 0.5 * g.dt * A);
        const Mat E = I + 0.5 * g.dt * A;
        Mat& X = tr[m];
        X.block(L.sigma(0), 0, nz, 1) = s0.row(m).transpose();
        X.block(L.u1(0), 0, nz, 1) = u10.row(m).transpose();
        X.block(L.u2(0), 0, J, 1) = u20.row(m).transpose();
        X(L.disp(), 0) = b0(m);
        X(L.vel(), 0) = bt0(m);
        for (int n = 0; n < nt; ++n) {
            Vec rhs = E * X.col(n);
            if (forced) rhs += 0.5 * g.dt * (force[n][m] + force[n + 1][m]);
            X.col(n + 1) = lu.solve(rhs);
        }
    });

    auto field = [&](int off, int len, int n) {
        Spectrum s = Spectrum::Zero(g.modes(), len);
        for (int m = 0; m < nm; ++m) s.row(m) = tr[m].block(off, n, len, 1).transpose();
        return inverse_fourier_x(s, g.nx);
    };
    auto trace_of = [&](int row, int n) {
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(g.modes());
        for (int m = 0; m < nm; ++m) s(m) = tr[m](row, n);
        return inverse_fourier_trace(s, g.nx);
    };
    Trajectory<PrimalState> out = make_trajectory(g, zero_primal(g));
    parallel_for(nt + 1, [&](int n) {
        out[n].sigma = field(L.sigma(0), nz, n);
        out[n].u.v1 = field(L.u1(0), nz, n);
        out[n].u.v2 = field(L.u2(0), J, n);
        out[n].beta = trace_of(L.disp(), n);
        out[n].beta_t = trace_of(L.vel(), n);
    });
    return out;
}

double pairing(const PrimalState& x, const Field& sigma, const VelocityField& v, const Trace& psi, const Trace& psi_t,
               const ModelParams& p, const Grid& g)
{
    const int J = g.nz - 1;
    const double rho = p.rho_bar, nu = p.nu();
    const Field theta = staggered_div(v, psi, g);
    const Trace flux = nu * theta.col(J) + rho * sigma.col(J);
    return inner(x.sigma, sigma, g) + rho * inner(x.u.v1, v.v1, g) + rho * half_inner(x.u.v2, v.v2, g) +
           trace_inner(x.beta_t, psi, g) - trace_inner(x.beta, psi_t, g) +
           trace_inner(diff_trace(x.beta, g, 1), diff_trace(psi, g, 1), g) + trace_inner(x.beta, flux, g);
}

DualityReport duality_residual(const Trajectory<PrimalState>& primal, const AdjointTrajectory& adjoint,
                               const Controls& ctrl, const ModelParams& p, const Grid& g)
{
    const std::size_t len = std::size_t(g.nt + 1);
    if (primal.size() != len || adjoint.sigma.size() != len || !adjoint.has_v)
        throw InvariantError("grid mismatch: primal and adjoint trajectories must share the time grid");
    if (primal[0].sigma.rows() != adjoint.sigma[0].rows() || primal[0].sigma.cols() != adjoint.sigma[0].cols())
        throw InvariantError("grid mismatch: primal and adjoint fields differ in shape");
    DualityReport r;
    auto pair_at = [&](int n) {
        return pairing(primal[n], adjoint.sigma[n], adjoint.v[n], adjoint.psi[n], adjoint.psi_t[n], p, g);
    };
    r.initial_pairing = pair_at(0);
    r.terminal_pairing = pair_at(g.nt);
    double abs_sum = 0.0;
    if (!ctrl.empty()) {
        std::vector<double> step(g.nt, 0.0), step_abs(g.nt, 0.0);
        parallel_for(g.nt, [&](int n) {
            const Field cs = 0.5 * (ctrl.v_sigma[n] + ctrl.v_sigma[n + 1]);
            const Field c1 = 0.5 * (ctrl.v_u[n].v1 + ctrl.v_u[n + 1].v1);
            const Field c2 = 0.5 * (ctrl.v_u[n].v2 + ctrl.v_u[n + 1].v2);
            const Trace cb = 0.5 * (ctrl.v_beta[n] + ctrl.v_beta[n + 1]);
            const Field ys = 0.5 * (adjoint.sigma[n] + adjoint.sigma[n + 1]);
            const Field y1 = 0.5 * (adjoint.v[n].v1 + adjoint.v[n + 1].v1);
            const Field y2 = 0.5 * (adjoint.v[n].v2 + adjoint.v[n + 1].v2);
            const Trace yp = 0.5 * (adjoint.psi[n] + adjoint.psi[n + 1]);
            const double a = inner(cs, ys, g), b = inner(c1, y1, g), c = half_inner(c2, y2, g),
                         d = trace_inner(cb, yp, g);
            step[n] = g.dt * (a + b + c + d);
            step_abs[n] = g.dt * (std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d));
        });
        for (int n = 0; n < g.nt; ++n) {
            r.control_term += step[n];
            abs_sum += step_abs[n];
        }
    }
    const double scale = std::abs(r.terminal_pairing) + std::abs(r.initial_pairing) + abs_sum;
    const double mismatch = std::abs(r.control_term - (r.terminal_pairing - r.initial_pairing));
    r.residual = scale > 0.0 ? mismatch / scale : 0.0;
    return r;
}

EnergyTerms energy_terms(const PrimalState& s, const ModelParams& p, const Grid& g)
{
    const int J = g.nz - 1;
    const double rho = p.rho_bar, nu = p.nu(), Pp = p.P_prime();
    const Field theta = staggered_div(s.u, wall_velocity(s, p, g), g);
    const Field curl = staggered_curl(s.u, g);
    const Trace bxx = diff_trace(s.beta, g, 2), btx = diff_trace(s.beta_t, g, 1);
    EnergyTerms e;
    e.energy = 0.5 * rho * (inner(s.u.v1, s.u.v1, g) + half_inner(s.u.v2, s.u.v2, g)) +
               0.5 * Pp / rho * inner(s.sigma, s.sigma, g) + 0.5 * trace_inner(s.beta_t, s.beta_t, g) +
               0.5 * trace_inner(bxx, bxx, g);
    e.dissipation = p.mu * half_inner(curl, curl, g) + nu * inner(theta, theta, g) + trace_inner(btx, btx, g);
    const Trace force = -nu * theta.col(J) + Pp * s.sigma.col(J);
    e.wall_work = p.u_bar1 * trace_inner(diff_trace(s.beta, g, 1), force, g);
    return e;
}

EnergyReport energy_balance(const Trajectory<PrimalState>& primal, const Controls& ctrl, const ModelParams& p,
                            const Grid& g)
{
    if (!ctrl.empty()) throw InvariantError("energy balance requires zero controls");
    if (primal.size() != std::size_t(g.nt + 1)) throw InvariantError("grid mismatch: trajectory length");
    const int nt = g.nt;
    std::vector<EnergyTerms> terms(nt + 1);
    parallel_for(nt + 1, [&](int n) { terms[n] = energy_terms(primal[n], p, g); });
    EnergyReport r;
    double integral = 0.0;
    for (int n = 0; n <= nt; ++n) {
        r.energy.push_back(terms[n].energy);
        r.dissipation.push_back(terms[n].dissipation);
        r.wall_work.push_back(terms[n].wall_work);
        if (n > 0) {
            integral += 0.5 * g.dt *
                        (terms[n - 1].dissipation + terms[n - 1].wall_work + terms[n].dissipation + terms[n].wall_work);
            r.max_increase = std::max(r.max_increase, terms[n].energy - terms[n - 1].energy);
        }
        r.balance.push_back(std::abs(terms[n].energy - terms[0].energy + integral));
        r.max_balance = std::max(r.max_balance, r.balance.back());
    }
    r.non_increasing = r.max_increase <= 1e-12 * std::max(terms[0].energy, 1e-300);
    return r;
}

}  // namespace fsiobs
