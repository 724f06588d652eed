#include "fsiobs/mac.hpp"

#include "fsiobs/transport.hpp"

#include <functional>

namespace fsiobs::mac {

namespace {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// builds the matrix of a linear map by applying it to the unit vectors
Mat matrix_of(int n_in, int n_out, const std::function<Vec(const Vec&)>& f)
{
    Mat A(n_out, n_in);
    Vec e = Vec::Zero(n_in);
    for (int k = 0; k < n_in; ++k) {
        e(k) = 1.0;
        A.col(k) = f(e);
        e(k) = 0.0;
    }
    return A;
}

// vertical derivative of the vorticity at the nodes, odd ghosts at both walls
Vec dz_vorticity(const ModeContext& c, const Vec& w)
{
    const int J = c.nz - 1;
    Vec out(c.nz);
    out(0) = 2.0 * w(0) / c.dz;
    out(J) = -2.0 * w(J - 1) / c.dz;
    for (int j = 1; j < J; ++j) out(j) = (w(j) - w(j - 1)) / c.dz;
    return out;
}

// node differences to half nodes
Vec dz_half(const ModeContext& c, const Vec& f)
{
    const int J = c.nz - 1;
    Vec out(J);
    for (int j = 0; j < J; ++j) out(j) = (f(j + 1) - f(j)) / c.dz;
    return out;
}

}  // namespace

ModeContext mode_context(const ModelParams& p, const Grid& g, int m)
{
    ModeContext c;
    c.D = m == g.nyquist() ? cplx(0.0) : dx_symbol(g, m, 1);
    c.dz = g.dz;
    c.nz = g.nz;
    c.p = p;
    return c;
}

Vec divergence(const ModeContext& c, const Vec& u1, const Vec& u2, cplx top)
{
    const int J = c.nz - 1;
    Vec th(c.nz);
    th(0) = c.D * u1(0) + 2.0 * u2(0) / c.dz;
    th(J) = c.D * u1(J) + 2.0 * (top - u2(J - 1)) / c.dz;
    for (int j = 1; j < J; ++j) th(j) = c.D * u1(j) + (u2(j) - u2(j - 1)) / c.dz;
    return th;
}

Vec vorticity(const ModeContext& c, const Vec& u1, const Vec& u2)
{
    const int J = c.nz - 1;
    Vec w(J);
    for (int j = 0; j < J; ++j) w(j) = c.D * u2(j) - (u1(j + 1) - u1(j)) / c.dz;
    return w;
}

Mat primal_generator(const ModeContext& c)
{
    const FullLayout L{c.nz};
    const int nz = c.nz, J = nz - 1;
    const double rho = c.p.rho_bar, u = c.p.u_bar1, mu = c.p.mu, nu = c.p.nu(), Pp = c.p.P_prime();
    return matrix_of(L.size(), L.size(), [&](const Vec& X) {
        const Vec s = X.segment(0, nz), u1 = X.segment(nz, nz), u2 = X.segment(2 * nz, J);
        const cplx beta = X(L.disp()), b = X(L.vel());
        const Vec th = divergence(c, u1, u2, b + u * c.D * beta);
        const Vec w = vorticity(c, u1, u2);
        const Vec dzw = dz_vorticity(c, w);
        Vec out(L.size());
        out.segment(0, nz) = -u * c.D * s - rho * th;
        out.segment(nz, nz) = -u * c.D * u1 + (nu * c.D * th - mu * dzw - Pp * c.D * s) / rho;
        out.segment(2 * nz, J) = -u * c.D * u2 + (nu * dz_half(c, th) + mu * c.D * w - Pp * dz_half(c, s)) / rho;
        out(L.disp()) = b;
        out(L.vel()) = c.D2() * b - c.D4() * beta - nu * th(J) + Pp * s(J);
        return out;
    });
}

Mat adjoint_generator(const ModeContext& c)
{
    const FullLayout L{c.nz};
    const int nz = c.nz, J = nz - 1;
    const double rho = c.p.rho_bar, u = c.p.u_bar1, mu = c.p.mu, nu = c.p.nu(), Pp = c.p.P_prime();
    return matrix_of(L.size(), L.size(), [&](const Vec& Y) {
        const Vec s = Y.segment(0, nz), v1 = Y.segment(nz, nz), v2 = Y.segment(2 * nz, J);
        const cplx psi = Y(L.disp()), pt = Y(L.vel());
        const Vec th = divergence(c, v1, v2, psi);
        const Vec w = vorticity(c, v1, v2);
        Vec out(L.size());
        out.segment(0, nz) = -u * c.D * s - Pp * th;
        out.segment(nz, nz) = -u * c.D * v1 + (-nu * c.D * th + mu * dz_vorticity(c, w) - rho * c.D * s) / rho;
        out.segment(2 * nz, J) = -u * c.D * v2 + (-nu * dz_half(c, th) - mu * c.D * w - rho * dz_half(c, s)) / rho;
        out(L.disp()) = pt;
        // the beam is driven by (d_t + u d_x) of the wall flux nu div v + rho sigma
        const cplx th_dot = c.D * out(L.u1(J)) + 2.0 * (pt - out(L.u2(J - 1))) / c.dz;
        const cplx q_dot = nu * th_dot + rho * out(L.sigma(J));
        const cplx qJ = nu * th(J) + rho * s(J);
        out(L.vel()) = -c.D2() * pt - c.D4() * psi + q_dot + u * c.D * qJ;
        return out;
    });
}

Mat pairing_matrix(const ModeContext& c)
{
    const FullLayout L{c.nz};
    const int nz = c.nz, J = nz - 1;
    const double rho = c.p.rho_bar, nu = c.p.nu();
    Mat P = Mat::Zero(L.size(), L.size());
    for (int j = 0; j < nz; ++j) {
        const double w = (j == 0 || j == J) ? 0.5 * c.dz : c.dz;
        P(L.sigma(j), L.sigma(j)) = w;
        P(L.u1(j), L.u1(j)) = rho * w;
    }
    for (int j = 0; j < J; ++j) P(L.u2(j), L.u2(j)) = rho * c.dz;
    // <b, psi> - <beta, p> + <D beta, D psi> + <beta, q_J>
    P(L.vel(), L.disp()) = 1.0;
    P(L.disp(), L.vel()) = -1.0;
    P(L.disp(), L.disp()) = std::norm(c.D);
    P(L.disp(), L.sigma(J)) += rho;
    P(L.disp(), L.u1(J)) += nu * c.D;
    P(L.disp(), L.u2(J - 1)) += -2.0 * nu / c.dz;
    P(L.disp(), L.disp()) += 2.0 * nu / c.dz;
    return P;
}

ReducedSystem reduced_system(const ModeContext& c)
{
    const ReducedLayout L{c.nz};
    const int nz = c.nz, J = nz - 1;
    const double rho = c.p.rho_bar, u = c.p.u_bar1, nu = c.p.nu(), Pp = c.p.P_prime();
    const double a = coupled_reaction(c.p), kappa = nu / rho, h2 = c.dz * c.dz;
    ReducedSystem rs;
    rs.M = Mat::Identity(L.size(), L.size());
    rs.M(L.vel(), L.q(J)) = -1.0;
    rs.A = matrix_of(L.size(), L.size(), [&](const Vec& R) {
        const Vec s = R.segment(0, nz), q = R.segment(nz, nz);
        const cplx psi = R(L.disp()), pt = R(L.vel());
        const cplx flux = -rho * (pt + u * c.D * psi);
        Vec lap(nz);
        lap(0) = c.D2() * q(0) + 2.0 * (q(1) - q(0)) / h2;
        lap(J) = c.D2() * q(J) + 2.0 * (q(J - 1) - q(J)) / h2 + 2.0 * flux / c.dz;
        for (int j = 1; j < J; ++j) lap(j) = c.D2() * q(j) + (q(j + 1) - 2.0 * q(j) + q(j - 1)) / h2;
        Vec out(L.size());
        out.segment(0, nz) = -u * c.D * s + a * s - (Pp / nu) * q;
        out.segment(nz, nz) = -u * c.D * q - kappa * lap - a * q + a * rho * s;
        out(L.disp()) = pt;
        out(L.vel()) = -c.D2() * pt - c.D4() * psi + u * c.D * q(J);
        return out;
    });
    return rs;
}

Mat reduction_map(const ModeContext& c)
{
    const FullLayout F{c.nz};
    const ReducedLayout R{c.nz};
    const int nz = c.nz, J = nz - 1;
    const double rho = c.p.rho_bar, nu = c.p.nu();
    return matrix_of(F.size(), R.size(), [&](const Vec& Y) {
        const Vec s = Y.segment(0, nz);
        const Vec th = divergence(c, Y.segment(nz, nz), Y.segment(2 * nz, J), Y(F.disp()));
        Vec out(R.size());
        out.segment(0, nz) = s;
        out.segment(nz, nz) = nu * th + rho * s;
        out(R.disp()) = Y(F.disp());
        out(R.vel()) = Y(F.vel());
        return out;
    });
}

Mat vorticity_generator(const ModeContext& c)
{
    const int J = c.nz - 1;
    const double u = c.p.u_bar1, k = c.p.mu / c.p.rho_bar, h2 = c.dz * c.dz;
    return matrix_of(J, J, [&](const Vec& w) {
        Vec out(J);
        for (int j = 0; j < J; ++j) {
            const cplx lo = j == 0 ? -w(0) : w(j - 1);
            const cplx hi = j == J - 1 ? -w(J - 1) : w(j + 1);
            const cplx lap = c.D2() * w(j) + (hi - 2.0 * w(j) + lo) / h2;
            out(j) = -u * c.D * w(j) - k * lap;
        }
        return out;
    });
}

Mat backward_step(const Mat& M, const Mat& A, double h)
{
    return (M + 0.5 * h * A).partialPivLu().solve(M - 0.5 * h * A);
}

}  // namespace fsiobs::mac
