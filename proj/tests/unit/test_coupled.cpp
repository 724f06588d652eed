#include "doctest.h"
#include "fsiobs/coupled.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace fsiobs;

namespace {

double traj_rel_diff(const Trajectory<Field>& a, const Trajectory<Field>& b)
{
    double e = 0.0, r = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        e = std::max(e, (a[n] - b[n]).cwiseAbs().maxCoeff());
        r = std::max(r, b[n].cwiseAbs().maxCoeff());
    }
    return e / r;
}

double traj_rel_diff(const Trajectory<Trace>& a, const Trajectory<Trace>& b)
{
    double e = 0.0, r = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        e = std::max(e, (a[n] - b[n]).cwiseAbs().maxCoeff());
        r = std::max(r, b[n].cwiseAbs().maxCoeff());
    }
    return e / r;
}

}  // namespace

TEST_CASE("coupled adjoint: zero data gives the zero solution")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 20);
    TerminalData td{zero_field(g), zero_velocity(g), zero_trace(g), zero_trace(g)};
    const auto tr = solve_adjoint_full(td, p, g);
    for (int n = 0; n <= g.nt; ++n) {
        CHECK(tr.sigma[n].cwiseAbs().maxCoeff() == 0.0);
        CHECK(tr.q[n].cwiseAbs().maxCoeff() == 0.0);
        CHECK(tr.psi[n].cwiseAbs().maxCoeff() == 0.0);
        CHECK(tr.v[n].v1.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("coupled adjoint: flux compatibility accepts q = z^2 and rejects q = z")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 17, 300);
    const Field sigma = zero_field(g);
    const Trace psi = zero_trace(g);
    const Trace psi1 = Trace::Constant(g.nx, -2.0 / p.rho_bar);
    const Field q_sq = testutil::sample(g, [](double, double z) { return z * z; });
    const Field q_lin = testutil::sample(g, [](double, double z) { return z; });
    CHECK(check_compat_reduced(sigma, q_sq, psi, psi1, p, g).pass);
    const auto bad = check_compat_reduced(sigma, q_lin, psi, psi1, p, g);
    CHECK_FALSE(bad.pass);
    CHECK(bad.flux_bottom > bad.tol);
}

TEST_CASE("coupled adjoint: random data are compatible on every grid")
{
    const ModelParams p;
    for (int nz : {9, 17, 33, 65}) {
        const Grid g = make_grid(p, 32, nz, 300);
        const auto td = random_compatible_data({}, p, g);
        const auto r = check_compat(td, p, g);
        CHECK_MESSAGE(r.pass, "nz=" << nz << " normal=" << r.normal_top << "," << r.normal_bottom << " curl=" << r.curl_walls << " fb=" << r.flux_bottom
                                    << " flux=" << r.flux_top);
    }
}

TEST_CASE("coupled adjoint: fixed-point windows agree with the monolithic solve")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 17, 200);
    const auto td = random_compatible_data({}, p, g);
    const auto mono = solve_sigma_q_psi(td, SolveMode::monolithic, p, g);
    const auto fp = solve_sigma_q_psi(td, SolveMode::fixed_point, p, g);
    CHECK(fp.fixed_point.converged);
    CHECK(fp.fixed_point.windows == 20);
    CHECK(fp.fixed_point.max_ratio < 1.0);
    CHECK(traj_rel_diff(fp.sigma, mono.sigma) < 1e-8);
    CHECK(traj_rel_diff(fp.q, mono.q) < 1e-8);
    CHECK(traj_rel_diff(fp.psi, mono.psi) < 1e-8);
}

TEST_CASE("coupled adjoint: flux and trace identities hold along the trajectory")
{
    ModelParams p;
    p.mu_prime = 0.2;
    const Grid g = make_grid(p, 32, 17, 200);
    const auto td = random_compatible_data({}, p, g);
    const auto tr = solve_adjoint_full(td, p, g);
    const auto s = structural_residuals(tr, p, g);
    CHECK(s.flux_identity < 1e-10);
    CHECK(s.trace_identity < 1e-8);
}

TEST_CASE("coupled adjoint: vorticity solver converges to a separable oracle")
{
    ModelParams p;
    p.T = 1.2;
    p.T0 = p.T1 = 0.04;
    auto err = [&](int nz, int nt) {
        const Grid g = make_grid(p, 16, nz, nt);
        const double k = 2.0 * M_PI / g.torus_len, kappa = p.mu / p.rho_bar;
        auto exact = [&](double t) {
            Field w(g.nx, nz - 1);
            for (int j = 0; j < nz - 1; ++j)
                for (int i = 0; i < g.nx; ++i)
                    w(i, j) = std::exp(-kappa * (k * k + M_PI * M_PI) * (g.T - t)) *
                              std::cos(k * (g.x(i) - p.u_bar1 * t)) * std::sin(M_PI * g.zh(j));
            return w;
        };
        const auto w = solve_curl(exact(g.T), p, g);
        return (w[0] - exact(0.0)).cwiseAbs().maxCoeff() / exact(0.0).cwiseAbs().maxCoeff();
    };
    const double e1 = err(9, 20), e2 = err(17, 40);
    CHECK(e2 < e1);
    CHECK(testutil::order(e1, e2) >= 1.9);
}

TEST_CASE("coupled adjoint: curl of the recovered velocity matches the vorticity solve")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 17, 100);
    const auto td = random_compatible_data({}, p, g);
    const auto tr = solve_adjoint_full(td, p, g);
    CHECK(curl_cross_check(tr, p, g) < 1e-10);
}

TEST_CASE("coupled adjoint: elliptic recovery of the initial velocity")
{
    const ModelParams p;
    auto err = [&](int nz) {
        const Grid g = make_grid(p, 16, nz, 10);
        const double k = 2.0 * M_PI / g.torus_len, c = k * k + M_PI * M_PI;
        const int J = nz - 1;
        Field div0(g.nx, nz), curl0(g.nx, J), v1(g.nx, nz), v2(g.nx, J);
        Trace psi0(g.nx);
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i);
            const double ps = 0.3 + std::sin(k * x), ps_x = k * std::cos(k * x), ps_xx = -k * k * std::sin(k * x);
            psi0(i) = ps;
            for (int j = 0; j < nz; ++j) {
                const double z = g.z(j);
                div0(i, j) = -c * std::cos(k * x) * std::cos(M_PI * z) + ps_xx * z * z / 2.0 + ps;
                v1(i, j) = -k * std::sin(k * x) * std::cos(M_PI * z) + ps_x * z * z / 2.0 +
                           M_PI * std::sin(k * x) * std::cos(M_PI * z);
            }
            for (int j = 0; j < J; ++j) {
                const double z = g.zh(j);
                curl0(i, j) = c * std::sin(k * x) * std::sin(M_PI * z);
                v2(i, j) = -M_PI * std::cos(k * x) * std::sin(M_PI * z) + ps * z - k * std::cos(k * x) * std::sin(M_PI * z);
            }
        }
        const auto v = elliptic_recover_v0(div0, curl0, psi0, g);
        return std::max((v.v1 - v1).cwiseAbs().maxCoeff(), (v.v2 - v2).cwiseAbs().maxCoeff());
    };
    const double e1 = err(17), e2 = err(33);
    CHECK(testutil::order(e1, e2) >= 1.9);

    const Grid g = make_grid(p, 16, 17, 10);
    CHECK_THROWS_AS(elliptic_recover_v0(zero_field(g), Field::Zero(g.nx, g.nz - 1), Trace::Ones(g.nx), g),
                    InvariantError);
}

TEST_CASE("coupled adjoint: the flux stays bounded in H2 near the final time")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 17, 100);
    const auto td = random_compatible_data({}, p, g);
    const auto tr = solve_sigma_q_psi(td, SolveMode::monolithic, p, g);
    const auto h2 = smoothing_check(tr, {0.5, 0.1, 0.01}, g);
    const double ref = norm(terminal_flux(td, p, g), g, Space::H2);
    for (double v : h2) {
        CHECK(std::isfinite(v));
        CHECK(v < 10.0 * ref);
    }
}

TEST_CASE("coupled adjoint: independent residual audit converges")
{
    const ModelParams p;
    auto audit = [&](int nx, int nz, int nt) {
        const Grid g = make_grid(p, nx, nz, nt);
        const auto td = random_compatible_data({}, p, g);
        const auto tr = solve_adjoint_full(td, p, g);
        return audit_adjoint(tr, td, p, g);
    };
    const auto a = audit(32, 9, 100), b = audit(32, 17, 200);
    for (const auto& [name, ra] : a.residuals) {
        const double rb = b.get(name);
        MESSAGE(name << ": " << ra << " -> " << rb);
        CHECK_MESSAGE((rb < 1e-9 || testutil::order(ra, rb) >= 1.0), name);
    }
    CHECK(std::abs(a.wellposed_quotient() / b.wellposed_quotient() - 1.0) < 0.2);
}

TEST_CASE("coupled adjoint: the solve is linear in the terminal data")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 40);
    RandomDataSpec s1, s2;
    s2.seed = 7;
    const auto a = random_compatible_data(s1, p, g), b = random_compatible_data(s2, p, g);
    TerminalData c{2.0 * a.sigma_T - b.sigma_T, a.v_T, 2.0 * a.psi_T - b.psi_T, 2.0 * a.psi1_T - b.psi1_T};
    c.v_T *= 2.0;
    VelocityField nb = b.v_T;
    nb *= -1.0;
    c.v_T += nb;
    const auto ta = solve_adjoint_full(a, p, g), tb = solve_adjoint_full(b, p, g), tc = solve_adjoint_full(c, p, g);
    double e = 0.0, r = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        e = std::max(e, (tc.q[n] - 2.0 * ta.q[n] + tb.q[n]).cwiseAbs().maxCoeff());
        e = std::max(e, (tc.v[n].v2 - 2.0 * ta.v[n].v2 + tb.v[n].v2).cwiseAbs().maxCoeff());
        r = std::max(r, tc.q[n].cwiseAbs().maxCoeff());
    }
    CHECK(e / r < 1e-12);
}
