#include "fsiobs/coupled.hpp"

#include "fsiobs/mac.hpp"
#include "fsiobs/parallel.hpp"
#include "fsiobs/transport.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

namespace fsiobs {

namespace {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using Idx = std::vector<int>;

// one matrix per active x-mode, rows are state components, columns are time nodes
using ModalTraj = std::vector<Mat>;

Idx range(int first, int count)
{
    Idx r(count);
    std::iota(r.begin(), r.end(), first);
    return r;
}

Field modal_field(const ModalTraj& tr, int offset, int len, int n, const Grid& g)
{
    Spectrum s = Spectrum::Zero(g.modes(), len);
    for (int m = 0; m < int(tr.size()); ++m) s.row(m) = tr[m].block(offset, n, len, 1).transpose();
    return inverse_fourier_x(s, g.nx);
}

Trace modal_trace(const ModalTraj& tr, int row, int n, const Grid& g)
{
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(g.modes());
    for (int m = 0; m < int(tr.size()); ++m) s(m) = tr[m](row, n);
    return inverse_fourier_trace(s, g.nx);
}

double sql2(const Field& f, const Grid& g) { return inner(f, f, g); }

template <typename E>
double max_abs(const Eigen::MatrixBase<E>& f)
{
    return f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
}

// quadratic extrapolation of half-node values to the wall at distance dz/2 from the first one
Eigen::VectorXd extrapolate_to_wall(const Field& half, bool top)
{
    const int J = int(half.cols());
    if (top) return (15.0 * half.col(J - 1) - 10.0 * half.col(J - 2) + 3.0 * half.col(J - 3)) / 8.0;
    return (15.0 * half.col(0) - 10.0 * half.col(1) + 3.0 * half.col(2)) / 8.0;
}

Eigen::VectorXd dz_wall(const Field& f, bool top, double dz)
{
    const int J = int(f.cols()) - 1;
    if (top) return (3.0 * f.col(J) - 4.0 * f.col(J - 1) + f.col(J - 2)) / (2.0 * dz);
    return (-3.0 * f.col(0) + 4.0 * f.col(1) - f.col(2)) / (2.0 * dz);
}

// Crank-Nicolson sweep of the rows `S` over [na, nb] backward in time, other rows held fixed
struct BlockSweep {
    Idx S, O;
    Eigen::PartialPivLU<Mat> lu;
    Mat next;    // (M - h A / 2) restricted to rows S
    Mat cur_O;   // (M + h A / 2) restricted to rows S, columns O

    BlockSweep(const Mat& M, const Mat& A, double h, Idx s) : S(std::move(s))
    {
        const int n = int(M.rows());
        std::vector<bool> in(n, false);
        for (int i : S) in[i] = true;
        for (int i = 0; i < n; ++i)
            if (!in[i]) O.push_back(i);
        const Mat plus = M + 0.5 * h * A, minus = M - 0.5 * h * A;
        lu.compute(plus(S, S));
        next = minus(S, Eigen::all);
        cur_O = plus(S, O);
    }

    void run(Mat& tr, int na, int nb) const
    {
        for (int n = nb - 1; n >= na; --n) {
            const Vec xo = tr(O, n);
            const Vec rhs = next * tr.col(n + 1) - cur_O * xo;
            const Vec x = lu.solve(rhs);
            tr(S, n) = x;
        }
    }
};

void fixed_point_solve(ModalTraj& tr, const ModelParams& p, const Grid& g, const FixedPointOptions& opt,
                       FixedPointReport& rep)
{
    const int nm = int(tr.size()), nz = g.nz;
    const mac::ReducedLayout L{nz};
    const double window = opt.window > 0.0 ? opt.window : p.T / 20.0;
    const int wsteps = std::max(1, int(std::lround(window / g.dt)));
    rep = FixedPointReport{};
    rep.window = wsteps * g.dt;

    struct ModeSweeps {
        BlockSweep q, sigma, beam;
    };
    std::vector<std::unique_ptr<ModeSweeps>> sweeps(nm);
    parallel_for(nm, [&](int m) {
        const auto rs = mac::reduced_system(mac::mode_context(p, g, m));
        sweeps[m] = std::make_unique<ModeSweeps>(ModeSweeps{BlockSweep(rs.M, rs.A, g.dt, range(L.q(0), nz)),
                                                            BlockSweep(rs.M, rs.A, g.dt, range(L.sigma(0), nz)),
                                                            BlockSweep(rs.M, rs.A, g.dt, {L.disp(), L.vel()})});
    });
    Idx tracked = range(L.sigma(0), nz);
    tracked.push_back(L.disp());
    tracked.push_back(L.vel());

    for (int nb = g.nt; nb > 0; nb -= wsteps) {
        const int na = std::max(0, nb - wsteps), len = nb - na;
        for (int m = 0; m < nm; ++m)
            for (int n = na; n < nb; ++n) tr[m].col(n) = tr[m].col(nb);
        std::vector<double> inc(nm), nrm(nm);
        double prev = 0.0, worst_ratio = 0.0;
        int it = 0;
        bool done = false;
        for (it = 1; it <= opt.max_iter; ++it) {
            parallel_for(nm, [&](int m) {
                const Mat old = tr[m](tracked, Eigen::seqN(na, len));
                sweeps[m]->q.run(tr[m], na, nb);
                sweeps[m]->sigma.run(tr[m], na, nb);
                sweeps[m]->beam.run(tr[m], na, nb);
                const Mat cur = tr[m](tracked, Eigen::seqN(na, len));
                inc[m] = (cur - old).squaredNorm();
                nrm[m] = cur.squaredNorm();
            });
            const double total_inc = std::sqrt(std::accumulate(inc.begin(), inc.end(), 0.0));
            const double total_nrm = std::sqrt(std::accumulate(nrm.begin(), nrm.end(), 0.0));
            const double rel = total_nrm > 0.0 ? total_inc / total_nrm : 0.0;
            // ratios are meaningful only while the increment is above round-off
            if (it > 1 && prev > 1e-12 * total_nrm) worst_ratio = std::max(worst_ratio, total_inc / prev);
            prev = total_inc;
            if (rel < opt.tol) {
                done = true;
                break;
            }
        }
        rep.iterations.push_back(std::min(it, opt.max_iter));
        rep.window_ratio.push_back(worst_ratio);
        rep.max_ratio = std::max(rep.max_ratio, worst_ratio);
        if (!done) rep.converged = false;
        ++rep.windows;
    }
}

}  // namespace

VelocityField& VelocityField::operator+=(const VelocityField& o)
{
    v1 += o.v1;
    v2 += o.v2;
    return *this;
}

VelocityField& VelocityField::operator*=(double s)
{
    v1 *= s;
    v2 *= s;
    return *this;
}

VelocityField zero_velocity(const Grid& g) { return {Field::Zero(g.nx, g.nz), Field::Zero(g.nx, g.nz - 1)}; }

VelocityField velocity_from_nodes(const Field& v1, const Field& v2_nodes)
{
    const int J = int(v2_nodes.cols()) - 1;
    VelocityField v{v1, Field(v2_nodes.rows(), J)};
    for (int j = 0; j < J; ++j) v.v2.col(j) = 0.5 * (v2_nodes.col(j) + v2_nodes.col(j + 1));
    return v;
}

Field v2_at_nodes(const VelocityField& v, const Trace& top)
{
    const int J = int(v.v2.cols());
    Field out(v.v2.rows(), J + 1);
    out.col(0).setZero();
    out.col(J) = top;
    for (int j = 1; j < J; ++j) out.col(j) = 0.5 * (v.v2.col(j - 1) + v.v2.col(j));
    return out;
}

Field staggered_div(const VelocityField& v, const Trace& top, const Grid& g)
{
    const int J = g.nz - 1;
    Field th = diff(v.v1, g, Axis::x, 1);
    th.col(0) += 2.0 * v.v2.col(0) / g.dz;
    th.col(J) += 2.0 * (top - v.v2.col(J - 1)) / g.dz;
    for (int j = 1; j < J; ++j) th.col(j) += (v.v2.col(j) - v.v2.col(j - 1)) / g.dz;
    return th;
}

Field staggered_curl(const VelocityField& v, const Grid& g)
{
    const int J = g.nz - 1;
    Field w = diff(v.v2, g, Axis::x, 1);
    for (int j = 0; j < J; ++j) w.col(j) -= (v.v1.col(j + 1) - v.v1.col(j)) / g.dz;
    return w;
}

Field terminal_flux(const TerminalData& td, const ModelParams& p, const Grid& g)
{
    return p.nu() * staggered_div(td.v_T, td.psi_T, g) + p.rho_bar * td.sigma_T;
}

double default_compat_tol(const Grid& g) { return 10.0 * (g.dz * g.dz + g.dt); }

namespace {

// cubic extrapolation of the second z-derivative of half-node values to a wall
Eigen::VectorXd dzz_wall_half(const Field& half, bool top, double dz)
{
    const int J = int(half.cols());
    auto c = [&](int k) { return Eigen::VectorXd(top ? half.col(J - 1 - k) : half.col(k)); };
    return (20.0 * c(0) - 52.0 * c(1) + 44.0 * c(2) - 12.0 * c(3)) / (8.0 * dz * dz);
}


// flux residuals given the wall values of d_z q
void flux_residuals(CompatReport& r, const Eigen::VectorXd& dzq_top, const Eigen::VectorXd& dzq_bot, double dzq_scale,
                    const Trace& psi_T, const Trace& psi1_T, const ModelParams& p, const Grid& g)
{
    const Eigen::VectorXd target = -p.rho_bar * (psi1_T + p.u_bar1 * diff_trace(psi_T, g, 1));
    const double scale = std::max({dzq_scale, max_abs(target), 1e-300});
    r.flux_top = max_abs(Eigen::VectorXd(dzq_top - target)) / scale;
    r.flux_bottom = max_abs(dzq_bot) / scale;
}

}  // namespace

CompatReport check_compat_reduced(const Field& sigma_T, const Field& q_T, const Trace& psi_T, const Trace& psi1_T,
                                  const ModelParams& p, const Grid& g, double tol)
{
    (void)sigma_T;
    CompatReport r;
    r.tol = tol > 0.0 ? tol : default_compat_tol(g);
    flux_residuals(r, dz_wall(q_T, true, g.dz), dz_wall(q_T, false, g.dz), max_abs(diff(q_T, g, Axis::z, 1)), psi_T,
                   psi1_T, p, g);
    r.pass = r.flux_top < r.tol && r.flux_bottom < r.tol;
    return r;
}

// Residuals are relative to the magnitude of the quantities compared: the normal velocity to
// max |v2|, the wall curl to max |d_z v1|, the flux to max |d_z q|. Wall derivatives of q are
// assembled from one-sided derivatives of the velocity components so that every residual is
// second-order consistent for smooth sampled data.
CompatReport check_compat(const TerminalData& td, const ModelParams& p, const Grid& g, double tol)
{
    CompatReport r;
    r.tol = tol > 0.0 ? tol : default_compat_tol(g);
    const VelocityField& v = td.v_T;
    const double nu = p.nu(), rho = p.rho_bar;

    const double v2_scale = std::max({max_abs(v.v2), max_abs(td.psi_T), 1e-300});
    r.normal_top = max_abs(Eigen::VectorXd(extrapolate_to_wall(v.v2, true) - td.psi_T)) / v2_scale;
    r.normal_bottom = max_abs(extrapolate_to_wall(v.v2, false)) / v2_scale;

    const Eigen::VectorXd v1z_top = dz_wall(v.v1, true, g.dz), v1z_bot = dz_wall(v.v1, false, g.dz);
    const Eigen::VectorXd psi_x = diff_trace(td.psi_T, g, 1);
    const double curl_scale = std::max({max_abs(diff(v.v1, g, Axis::z, 1)), max_abs(psi_x), 1e-300});
    r.curl_walls = std::max(max_abs(Eigen::VectorXd(psi_x - v1z_top)), max_abs(v1z_bot)) / curl_scale;

    auto dzq = [&](bool top, const Eigen::VectorXd& v1z) {
        const Eigen::VectorXd ddiv = diff_trace(v1z, g, 1) + dzz_wall_half(v.v2, top, g.dz);
        return Eigen::VectorXd(nu * ddiv + rho * dz_wall(td.sigma_T, top, g.dz));
    };
    const Field q_T = terminal_flux(td, p, g);
    flux_residuals(r, dzq(true, v1z_top), dzq(false, v1z_bot), max_abs(diff(q_T, g, Axis::z, 1)), td.psi_T,
                   td.psi1_T, p, g);
    r.pass = r.normal_top < r.tol && r.normal_bottom < r.tol && r.curl_walls < r.tol && r.flux_top < r.tol &&
             r.flux_bottom < r.tol;
    return r;
}

AdjointTrajectory solve_sigma_q_psi(const Field& sigma_T, const Field& q_T, const Trace& psi_T, const Trace& psi1_T,
                                    SolveMode mode, const ModelParams& p, const Grid& g, const FixedPointOptions& opt)
{
    if (sigma_T.rows() != g.nx || sigma_T.cols() != g.nz || q_T.rows() != g.nx || q_T.cols() != g.nz ||
        psi_T.size() != g.nx || psi1_T.size() != g.nx)
        throw InvariantError("grid mismatch: terminal data shape differs from the grid");
    const int nm = g.nyquist(), nz = g.nz, nt = g.nt;
    const mac::ReducedLayout L{nz};
    const Spectrum sT = fourier_x(sigma_T), qT = fourier_x(q_T);
    const Eigen::VectorXcd pT = fourier_trace(psi_T), p1 = fourier_trace(psi1_T);

    ModalTraj tr(nm, Mat::Zero(L.size(), nt + 1));
    for (int m = 0; m < nm; ++m) {
        tr[m].block(L.sigma(0), nt, nz, 1) = sT.row(m).transpose();
        tr[m].block(L.q(0), nt, nz, 1) = qT.row(m).transpose();
        tr[m](L.disp(), nt) = pT(m);
        tr[m](L.vel(), nt) = p1(m);
    }

    AdjointTrajectory out;
    if (mode == SolveMode::monolithic) {
        parallel_for(nm, [&](int m) {
            const auto rs = mac::reduced_system(mac::mode_context(p, g, m));
            const Mat S = mac::backward_step(rs.M, rs.A, g.dt);
            for (int n = nt - 1; n >= 0; --n) tr[m].col(n) = S * tr[m].col(n + 1);
        });
    } else {
        fixed_point_solve(tr, p, g, opt, out.fixed_point);
    }

    out.sigma = make_trajectory(g, zero_field(g));
    out.q = make_trajectory(g, zero_field(g));
    out.psi = make_trajectory(g, zero_trace(g));
    out.psi_t = make_trajectory(g, zero_trace(g));
    parallel_for(nt + 1, [&](int n) {
        out.sigma[n] = modal_field(tr, L.sigma(0), nz, n, g);
        out.q[n] = modal_field(tr, L.q(0), nz, n, g);
        out.psi[n] = modal_trace(tr, L.disp(), n, g);
        out.psi_t[n] = modal_trace(tr, L.vel(), n, g);
    });
    return out;
}

AdjointTrajectory solve_sigma_q_psi(const TerminalData& td, SolveMode mode, const ModelParams& p, const Grid& g,
                                    const FixedPointOptions& opt)
{
    return solve_sigma_q_psi(td.sigma_T, terminal_flux(td, p, g), td.psi_T, td.psi1_T, mode, p, g, opt);
}

void recover_v(AdjointTrajectory& traj, const VelocityField& v_T, const ModelParams& p, const Grid& g)
{
    if (traj.sigma.size() != std::size_t(g.nt + 1)) throw InvariantError("grid mismatch: trajectory length");
    const int nm = g.nyquist(), nz = g.nz, J = nz - 1, nt = g.nt, nv = 2 * nz - 1;
    const mac::FullLayout F{nz};
    std::vector<Spectrum> sig(nt + 1);
    std::vector<Eigen::VectorXcd> psi(nt + 1);
    parallel_for(nt + 1, [&](int n) {
        sig[n] = fourier_x(traj.sigma[n]);
        psi[n] = fourier_trace(traj.psi[n]);
    });
    const Spectrum v1T = fourier_x(v_T.v1), v2T = fourier_x(v_T.v2);

    ModalTraj V(nm, Mat::Zero(nv, nt + 1));
    parallel_for(nm, [&](int m) {
        const Mat A = mac::adjoint_generator(mac::mode_context(p, g, m));
        const Idx vi = range(F.u1(0), nv), si = range(F.sigma(0), nz);
        const Mat Avv = A(vi, vi), Avs = A(vi, si);
        const Vec Avp = A(vi, F.disp());
        const Mat I = Mat::Identity(nv, nv);
        const Eigen::PartialPivLU<Mat> lu(I + 0.5 * g.dt * Avv);
        const Mat E = I - 0.5 * g.dt * Avv;
        V[m].block(0, nt, nz, 1) = v1T.row(m).transpose();
        V[m].block(nz, nt, J, 1) = v2T.row(m).transpose();
        for (int n = nt - 1; n >= 0; --n) {
            const Vec sbar = 0.5 * (sig[n].row(m) + sig[n + 1].row(m)).transpose();
            const cplx pbar = 0.5 * (psi[n](m) + psi[n + 1](m));
            const Vec rhs = E * V[m].col(n + 1) - g.dt * (Avs * sbar + Avp * pbar);
            V[m].col(n) = lu.solve(rhs);
        }
    });
    traj.v = make_trajectory(g, zero_velocity(g));
    parallel_for(nt + 1, [&](int n) {
        traj.v[n].v1 = modal_field(V, 0, nz, n, g);
        traj.v[n].v2 = modal_field(V, nz, J, n, g);
    });
    traj.has_v = true;
}

AdjointTrajectory solve_adjoint_full(const TerminalData& td, const ModelParams& p, const Grid& g)
{
    AdjointTrajectory tr = solve_sigma_q_psi(td, SolveMode::monolithic, p, g);
    recover_v(tr, td.v_T, p, g);
    return tr;
}

StructuralReport structural_residuals(const AdjointTrajectory& traj, const ModelParams& p, const Grid& g)
{
    if (!traj.has_v) throw InvariantError("structural residuals need the recovered velocity");
    const int nt = g.nt, J = g.nz - 1;
    const double rho = p.rho_bar, nu = p.nu(), u = p.u_bar1, a = coupled_reaction(p), kappa = nu / rho;
    std::vector<Field> qv(nt + 1);
    parallel_for(nt + 1, [&](int n) { qv[n] = nu * staggered_div(traj.v[n], traj.psi[n], g) + rho * traj.sigma[n]; });

    double flux_err = 0.0, flux_ref = 0.0;
    for (int n = 0; n <= nt; ++n) {
        flux_err = std::max(flux_err, max_abs(traj.q[n] - qv[n]));
        flux_ref = std::max(flux_ref, max_abs(traj.q[n]));
    }

    // top-wall flux implied by the Crank-Nicolson flux equation at the wall node, computed from the velocity
    double trace_err = 0.0, trace_ref = flux_ref;
    const double h = g.dt, h2 = g.dz * g.dz;
    for (int n = 0; n < nt; ++n) {
        const Trace qJ = 0.5 * (qv[n].col(J) + qv[n + 1].col(J));
        const Trace qJm = 0.5 * (qv[n].col(J - 1) + qv[n + 1].col(J - 1));
        const Trace sJ = 0.5 * (traj.sigma[n].col(J) + traj.sigma[n + 1].col(J));
        const Trace dq = (qv[n + 1].col(J) - qv[n].col(J)) / h;
        const Trace rhs0 = -u * diff_trace(qJ, g, 1) - kappa * (diff_trace(qJ, g, 2) + 2.0 * (qJm - qJ) / h2) -
                           a * qJ + a * rho * sJ;
        const Trace implied = (rhs0 - dq) * g.dz / (2.0 * kappa);
        const Trace psibar = 0.5 * (traj.psi[n] + traj.psi[n + 1]);
        const Trace beam = -rho * ((traj.psi[n + 1] - traj.psi[n]) / h + u * diff_trace(psibar, g, 1));
        trace_err = std::max(trace_err, (implied - beam).cwiseAbs().maxCoeff());
        trace_ref = std::max(trace_ref, beam.cwiseAbs().maxCoeff());
    }
    StructuralReport r;
    r.flux_identity = flux_ref > 0.0 ? flux_err / flux_ref : 0.0;
    r.trace_identity = trace_ref > 0.0 ? trace_err / trace_ref : 0.0;
    return r;
}

Trajectory<Field> solve_curl(const Field& w_T, const ModelParams& p, const Grid& g)
{
    const int nm = g.nyquist(), J = g.nz - 1, nt = g.nt;
    if (w_T.rows() != g.nx || w_T.cols() != J) throw InvariantError("grid mismatch: vorticity lives on the half nodes");
    const Spectrum wT = fourier_x(w_T);
    ModalTraj tr(nm, Mat::Zero(J, nt + 1));
    parallel_for(nm, [&](int m) {
        const Mat A = mac::vorticity_generator(mac::mode_context(p, g, m));
        const Mat S = mac::backward_step(Mat::Identity(J, J), A, g.dt);
        tr[m].col(nt) = wT.row(m).transpose();
        for (int n = nt - 1; n >= 0; --n) tr[m].col(n) = S * tr[m].col(n + 1);
    });
    Trajectory<Field> out = make_trajectory(g, Field(Field::Zero(g.nx, J)));
    parallel_for(nt + 1, [&](int n) { out[n] = modal_field(tr, 0, J, n, g); });
    return out;
}

double curl_cross_check(const AdjointTrajectory& traj, const ModelParams& p, const Grid& g)
{
    if (!traj.has_v) throw InvariantError("curl cross-check needs the recovered velocity");
    const Trajectory<Field> w = solve_curl(staggered_curl(traj.v[g.nt], g), p, g);
    double err = 0.0, ref = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        const Field c = staggered_curl(traj.v[n], g);
        err += (w[n] - c).squaredNorm();
        ref += c.squaredNorm();
    }
    return ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
}

VelocityField elliptic_recover_v0(const Field& div0, const Field& curl0, const Trace& psi0, const Grid& g, double tol)
{
    const int nz = g.nz, J = nz - 1, nm = g.nyquist();
    if (div0.rows() != g.nx || div0.cols() != nz || curl0.rows() != g.nx || curl0.cols() != J || psi0.size() != g.nx)
        throw InvariantError("grid mismatch: divergence on nodes, curl on half nodes, trace on the wall");
    if (tol <= 0.0) tol = 10.0 * g.dz * g.dz;
    const Spectrum th = fourier_x(div0), om = fourier_x(curl0);
    const Eigen::VectorXcd ps = fourier_trace(psi0);
    const Eigen::VectorXd w = z_weights(g);
    Spectrum v1 = Spectrum::Zero(g.modes(), nz), v2 = Spectrum::Zero(g.modes(), J);

    // zero mode: v2 from the divergence rows marching upward, v1 from the curl rows
    {
        cplx acc = 0.5 * g.dz * th(0, 0);
        v2(0, 0) = acc;
        for (int j = 1; j < J; ++j) v2(0, j) = v2(0, j - 1) + g.dz * th(0, j);
        const cplx top_residual = th(0, J) - 2.0 * (ps(0) - v2(0, J - 1)) / g.dz;
        double mass = std::abs(ps(0));
        for (int j = 0; j < nz; ++j) mass += w(j) * std::abs(th(0, j));
        const double rel = mass > 0.0 ? std::abs(top_residual) * 0.5 * g.dz / mass : 0.0;
        if (rel > tol)
            throw InvariantError("inconsistent elliptic data: integral of the divergence differs from the mean wall "
                                 "velocity (relative residual " + std::to_string(rel) + ")");
        v1(0, 0) = 0.0;
        for (int j = 0; j < J; ++j) v1(0, j + 1) = v1(0, j) - g.dz * om(0, j);
        cplx mean = 0.0;
        for (int j = 0; j < nz; ++j) mean += w(j) * v1(0, j);
        v1.row(0).array() -= mean;
    }
    parallel_for(nm - 1, [&](int k) {
        const int m = k + 1;
        const auto c = mac::mode_context(ModelParams{}, g, m);
        const int n = 2 * nz - 1;
        Mat A(n, n);
        Vec e = Vec::Zero(n);
        for (int col = 0; col < n; ++col) {
            e(col) = 1.0;
            A.col(col) << mac::divergence(c, e.head(nz), e.tail(J), 0.0), mac::vorticity(c, e.head(nz), e.tail(J));
            e(col) = 0.0;
        }
        Vec rhs(n);
        const Vec ghost = mac::divergence(c, Vec::Zero(nz), Vec::Zero(J), ps(m));
        rhs << th.row(m).transpose() - ghost, om.row(m).transpose();
        const Vec x = A.partialPivLu().solve(rhs);
        v1.row(m) = x.head(nz).transpose();
        v2.row(m) = x.tail(J).transpose();
    });
    return {inverse_fourier_x(v1, g.nx), inverse_fourier_x(v2, g.nx)};
}

std::vector<double> smoothing_check(const AdjointTrajectory& traj, const std::vector<double>& eps, const Grid& g)
{
    std::vector<double> out;
    for (double e : eps) {
        const int n = std::clamp(int(std::lround((g.T - e) / g.dt)), 0, g.nt);
        out.push_back(norm(traj.q[n], g, Space::H2));
    }
    return out;
}

double AuditReport::get(const std::string& name) const
{
    for (const auto& [k, v] : residuals)
        if (k == name) return v;
    throw InvariantError("unknown audit entry: " + name);
}

AuditReport audit_adjoint(const AdjointTrajectory& traj, const TerminalData& td, const ModelParams& p, const Grid& g)
{
    if (!traj.has_v) throw InvariantError("the audit needs the recovered velocity");
    const int nt = g.nt, J = g.nz - 1;
    const double rho = p.rho_bar, u = p.u_bar1, mu = p.mu, mup = p.mu_prime, nu = p.nu(), Pp = p.P_prime();
    const double h = g.dt;

    struct Slice {
        Field v1, v2, div, qv;
    };
    std::vector<Slice> sl(nt + 1);
    parallel_for(nt + 1, [&](int n) {
        Slice& s = sl[n];
        s.v1 = traj.v[n].v1;
        s.v2 = v2_at_nodes(traj.v[n], traj.psi[n]);
        s.div = diff(s.v1, g, Axis::x, 1) + diff(s.v2, g, Axis::z, 1);
        s.qv = nu * s.div + rho * traj.sigma[n];
    });

    enum { transport, mom_x, mom_z, normal_top, normal_bottom, curl_walls, beam, count };
    const char* names[count] = {"transport", "momentum_x", "momentum_z", "normal_top", "normal_bottom",
                                "curl_walls", "beam"};
    std::vector<double> err(count, 0.0), ref(count, 0.0);
    auto add = [&](int k, double e, double r) {
        err[k] += e;
        ref[k] += r;
    };
    std::vector<std::vector<double>> e_n(nt + 1, std::vector<double>(2 * count, 0.0));
    parallel_for(nt - 1, [&](int k) {
        const int n = k + 1;
        const Slice &a = sl[n - 1], &b = sl[n], &c = sl[n + 1];
        auto& acc = e_n[n];
        auto put = [&](int eq, double e, double r) {
            acc[2 * eq] += e;
            acc[2 * eq + 1] += r;
        };
        const Field& sig = traj.sigma[n];
        const Field sig_t = (traj.sigma[n + 1] - traj.sigma[n - 1]) / (2.0 * h);
        const Field sig_x = diff(sig, g, Axis::x, 1);
        {
            const Field r = -sig_t - u * sig_x - Pp * b.div;
            put(transport, sql2(r, g), sql2(sig_t, g) + sql2(u * sig_x, g) + sql2(Pp * b.div, g));
        }
        const Field div_x = diff(b.div, g, Axis::x, 1), div_z = diff(b.div, g, Axis::z, 1);
        for (int comp = 0; comp < 2; ++comp) {
            const Field& v = comp == 0 ? b.v1 : b.v2;
            const Field v_t = ((comp == 0 ? c.v1 : c.v2) - (comp == 0 ? a.v1 : a.v2)) / (2.0 * h);
            const Field adv = rho * (v_t + u * diff(v, g, Axis::x, 1));
            const Field lap = mu * (diff(v, g, Axis::x, 2) + diff(v, g, Axis::z, 2));
            const Field gd = (mup + mu) * (comp == 0 ? div_x : div_z);
            const Field gs = rho * (comp == 0 ? sig_x : diff(sig, g, Axis::z, 1));
            const Field r = -adv - lap - gd - gs;
            put(comp == 0 ? mom_x : mom_z, sql2(r, g),
                sql2(adv, g) + sql2(lap, g) + sql2(gd, g) + sql2(gs, g));
        }
        const Field& v2h = traj.v[n].v2;
        {
            const Trace r = extrapolate_to_wall(v2h, true) - traj.psi[n];
            put(normal_top, g.dx * r.squaredNorm(), g.dx * traj.psi[n].squaredNorm() + g.dx * extrapolate_to_wall(v2h, true).squaredNorm());
            const Trace rb = extrapolate_to_wall(v2h, false);
            put(normal_bottom, g.dx * rb.squaredNorm(), g.dx * v2h.col(0).squaredNorm());
        }
        {
            const Trace top = diff_trace(traj.psi[n], g, 1) - dz_wall(b.v1, true, g.dz);
            const Trace bot = -dz_wall(b.v1, false, g.dz);
            const double scale = g.dx * (diff_trace(traj.psi[n], g, 1).squaredNorm() +
                                         dz_wall(b.v1, true, g.dz).squaredNorm() + dz_wall(b.v1, false, g.dz).squaredNorm() +
                                         b.v1.col(0).squaredNorm() + b.v1.col(J).squaredNorm());
            put(curl_walls, g.dx * (top.squaredNorm() + bot.squaredNorm()), scale);
        }
        {
            const Trace& pm = traj.psi[n - 1];
            const Trace& p0 = traj.psi[n];
            const Trace& pp = traj.psi[n + 1];
            const Trace tt = (pp - 2.0 * p0 + pm) / (h * h);
            const Trace txx = diff_trace((pp - pm) / (2.0 * h), g, 2);
            const Trace xxxx = diff_trace(p0, g, 4);
            const Trace qt = (c.qv.col(J) - a.qv.col(J)) / (2.0 * h);
            const Trace qx = u * diff_trace(Trace(b.qv.col(J)), g, 1);
            const Trace r = tt + txx + xxxx - qt - qx;
            put(beam, g.dx * r.squaredNorm(),
                g.dx * (tt.squaredNorm() + txx.squaredNorm() + xxxx.squaredNorm() + qt.squaredNorm() + qx.squaredNorm()));
        }
    });
    for (int n = 1; n < nt; ++n)
        for (int k = 0; k < count; ++k) add(k, e_n[n][2 * k], e_n[n][2 * k + 1]);

    AuditReport rep;
    for (int k = 0; k < count; ++k) rep.residuals.emplace_back(names[k], ref[k] > 0.0 ? std::sqrt(err[k] / ref[k]) : 0.0);

    // solution norms over data norms, discrete form of the a priori estimate
    double s_h1 = 0.0, s_t = 0.0, q_h2 = 0.0, psi_h3 = 0.0, pt_h1 = 0.0;
    for (int n = 0; n <= nt; ++n) {
        s_h1 = std::max(s_h1, norm(traj.sigma[n], g, Space::H1));
        q_h2 = std::max(q_h2, norm(traj.q[n], g, Space::H2));
        psi_h3 = std::max(psi_h3, norm(traj.psi[n], g, Space::H3));
        pt_h1 = std::max(pt_h1, norm(traj.psi_t[n], g, Space::H1));
        if (n < nt) s_t = std::max(s_t, norm(Field((traj.sigma[n + 1] - traj.sigma[n]) / h), g, Space::L2));
    }
    rep.wellposed_lhs = s_h1 + s_t + q_h2 + psi_h3 + pt_h1;
    rep.wellposed_rhs = norm(terminal_flux(td, p, g), g, Space::H2) + norm(td.sigma_T, g, Space::H1) +
                        norm(td.psi_T, g, Space::H3) + norm(td.psi1_T, g, Space::H1);
    return rep;
}

TerminalData random_compatible_data(const RandomDataSpec& spec, const ModelParams& p, const Grid& g)
{
    const int Mx = std::min(spec.modes_x, g.nyquist() - 1);
    const int Mz = std::max(0, spec.modes_z);
    auto coef = [&](unsigned stream, int m, int l) {
        std::seed_seq ss{spec.seed, stream, unsigned(m), unsigned(l)};
        std::mt19937_64 rng(ss);
        std::normal_distribution<double> n01;
        const double w = spec.amplitude * std::pow(1.0 + double(m) * m + double(l) * l, -0.5 * spec.decay);
        const double a = n01(rng), b = n01(rng);
        return std::pair<double, double>{w * a, m == 0 ? 0.0 : w * b};
    };
    auto kx = [&](int m) { return 2.0 * M_PI * m / g.torus_len; };
    const int nx = g.nx, nz = g.nz, J = nz - 1;

    // x-profiles of the wall data: value, first and second derivative
    auto profile = [&](unsigned stream, int i, int order) {
        const double x = g.x(i) - g.x_left;
        double s = 0.0;
        for (int m = 0; m <= Mx; ++m) {
            const auto [a, b] = coef(stream, m, 0);
            const double k = kx(m), c = std::cos(k * x), sn = std::sin(k * x);
            if (order == 0) s += a * c + b * sn;
            if (order == 1) s += k * (-a * sn + b * c);
            if (order == 2) s += -k * k * (a * c + b * sn);
        }
        return s;
    };
    // sum over (m, l) of coefficient * trig(k x) * f_l(z), with x-derivative order 0 or 1
    auto series = [&](unsigned stream, int i, double z, int order, bool sine_z, int lmin) {
        const double x = g.x(i) - g.x_left;
        double s = 0.0;
        for (int m = 0; m <= Mx; ++m)
            for (int l = lmin; l <= Mz; ++l) {
                if (m == 0 && l == 0) continue;
                const auto [a, b] = coef(stream, m, l);
                const double k = kx(m), c = std::cos(k * x), sn = std::sin(k * x);
                const double fz = sine_z ? std::sin(l * M_PI * z) : std::cos(l * M_PI * z);
                s += fz * (order == 0 ? a * c + b * sn : k * (-a * sn + b * c));
            }
        return s;
    };

    TerminalData td;
    td.psi_T = Trace(nx);
    td.psi1_T = Trace(nx);
    td.sigma_T = Field(nx, nz);
    td.v_T = zero_velocity(g);
    Field phi(nx, nz);
    for (int i = 0; i < nx; ++i) {
        const double psi = profile(1, i, 0), psi_x = profile(1, i, 1), psi_xx = profile(1, i, 2);
        const double c = 0.5 * profile(5, i, 0), c_x = 0.5 * profile(5, i, 1);
        (void)c_x;
        td.psi_T(i) = psi;
        for (int j = 0; j < nz; ++j) {
            const double z = g.z(j);
            phi(i, j) = series(2, i, z, 0, false, 0) + psi * z * z / 2.0;
            td.sigma_T(i, j) = series(3, i, z, 0, false, 0) + c * z * z;
            const double chi_up = series(4, i, z + 0.5 * g.dz, 0, true, 1);
            const double chi_dn = series(4, i, z - 0.5 * g.dz, 0, true, 1);
            td.v_T.v1(i, j) = series(2, i, z, 1, false, 0) + psi_x * z * z / 2.0 + (chi_up - chi_dn) / g.dz;
        }
        for (int j = 0; j < J; ++j) td.v_T.v2(i, j) = -series(4, i, g.zh(j), 1, true, 1);
        td.psi1_T(i) = -(p.nu() * psi_xx + 2.0 * p.rho_bar * c) / p.rho_bar - p.u_bar1 * psi_x;
    }
    for (int j = 0; j < J; ++j) td.v_T.v2.col(j) += (phi.col(j + 1) - phi.col(j)) / g.dz;
    return td;
}

}  // namespace fsiobs
