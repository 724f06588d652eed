#include "fsiobs/beam.hpp"

#include "fsiobs/parallel.hpp"

#include <cmath>

namespace fsiobs {

Eigen::Matrix2d beam_propagator(double k, double tau)
{
    const double k2 = k * k;
    Eigen::Matrix2d A;
    A << 0.0, 1.0, -k2 * k2, k2;
    const double om = std::sqrt(3.0) * k2 / 2.0;
    // sin(om tau)/om, continuous at om = 0
    const double sinc = (std::abs(om * tau) < 1e-8) ? tau * (1.0 - (om * tau) * (om * tau) / 6.0)
                                                    : std::sin(om * tau) / om;
    const Eigen::Matrix2d shifted = A - 0.5 * k2 * Eigen::Matrix2d::Identity();
    return std::exp(0.5 * k2 * tau) * (std::cos(om * tau) * Eigen::Matrix2d::Identity() + sinc * shifted);
}

Trajectory<BeamState> solve_beam_adjoint(const Trace& psi_T, const Trace& psi1_T, const Trajectory<Trace>& f_psi,
                                         const Grid& g)
{
    if (psi_T.size() != g.nx || psi1_T.size() != g.nx) throw InvariantError("beam data do not match the grid");
    const bool forced = f_psi.size() > 0;
    if (forced && (int(f_psi.size()) != g.nt + 1 || f_psi[0].size() != g.nx))
        throw InvariantError("beam source does not match the grid");

    const int M = g.modes();
    std::vector<Eigen::VectorXcd> fhat;
    if (forced)
        for (int n = 0; n <= g.nt; ++n) fhat.push_back(fourier_trace(f_psi[n]));
    const Eigen::VectorXcd p0 = fourier_trace(psi_T), p1 = fourier_trace(psi1_T);

    // modal histories [mode][time]
    Eigen::MatrixXcd P(M, g.nt + 1), V(M, g.nt + 1);
    parallel_for(M, [&](int m) {
        const Eigen::Matrix2d E = beam_propagator(g.wavenumber(m), -g.dt);
        Eigen::Vector2cd y(p0(m), p1(m));
        P(m, g.nt) = y(0);
        V(m, g.nt) = y(1);
        for (int n = g.nt - 1; n >= 0; --n) {
            Eigen::Vector2cd next = E.cast<cplx>() * y;
            if (forced) {
                const Eigen::Vector2cd Fn(0.0, fhat[n](m)), Fn1(0.0, fhat[n + 1](m));
                next -= 0.5 * g.dt * (E.cast<cplx>() * Fn1 + Fn);
            }
            y = next;
            P(m, n) = y(0);
            V(m, n) = y(1);
        }
    });

    Trajectory<BeamState> tr = make_trajectory(g, BeamState{zero_trace(g), zero_trace(g)});
    for (int n = 0; n <= g.nt; ++n) {
        tr[n].psi = inverse_fourier_trace(P.col(n), g.nx);
        tr[n].psi_t = inverse_fourier_trace(V.col(n), g.nx);
    }
    return tr;
}

BeamCarleman beam_carleman_functionals(const Trajectory<BeamState>& traj, const Trajectory<Trace>& f_psi,
                                       const WeightTable& wt, const Grid& g)
{
    const double s = wt.cp.s, lam = wt.cp.lambda;
    const bool forced = f_psi.size() > 0;
    const Eigen::VectorXd chi = omega_indicator(g);
    BeamCarleman out;
    for (int n = 1; n < g.nt; ++n) {
        const Trace& p = traj[n].psi;
        const Trace& pt = traj[n].psi_t;
        const Trace px = diff_trace(p, g, 1), pxx = diff_trace(p, g, 2), pxxx = diff_trace(p, g, 3),
                    pxxxx = diff_trace(p, g, 4);
        const Trace ptx = diff_trace(pt, g, 1), ptxx = diff_trace(pt, g, 2);
        const Trace f = forced ? f_psi[n] : zero_trace(g);
        const Trace ptt = f - ptxx - pxxxx;
        for (int i = 0; i < g.nx; ++i) {
            const double w = wt.w(i, n);
            if (w == 0.0) continue;
            const double xi = wt.xi(i, n);
            const double cell = g.dx * g.dt * w;
            const double l0 = std::pow(s, 7) * std::pow(lam, 8) * std::pow(xi, 7) * p(i) * p(i);
            double l = l0;
            l += std::pow(s, 5) * std::pow(lam, 6) * std::pow(xi, 5) * px(i) * px(i);
            l += std::pow(s, 3) * std::pow(lam, 4) * std::pow(xi, 3) * (pxx(i) * pxx(i) + pt(i) * pt(i));
            l += s * lam * lam * xi * (ptx(i) * ptx(i) + pxxx(i) * pxxx(i));
            l += (ptt(i) * ptt(i) + ptxx(i) * ptxx(i) + pxxxx(i) * pxxxx(i)) / (s * xi);
            out.lhs += cell * l;
            out.rhs_interior += cell * f(i) * f(i);
            out.rhs_obs += cell * chi(i) * l0;
        }
    }
    return out;
}

}  // namespace fsiobs
