#include "doctest.h"
#include "fsiobs/transport.hpp"
#include "test_helpers.hpp"

#include <chrono>
#include <cmath>

using namespace fsiobs;

namespace {

double profile(const Grid& g, double x, double z)
{
    const double th = 2.0 * M_PI * (x - g.x_left) / g.torus_len;
    return std::exp(std::cos(th)) * std::cos(M_PI * z) + 0.3 * std::sin(2.0 * th) * z * z;
}

// smooth pulse supported in (t0, t1)
double pulse(double t, double t0, double t1)
{
    if (t <= t0 || t >= t1) return 0.0;
    const double u = (t - t0) / (t1 - t0);
    return std::exp(-1.0 / (u * (1.0 - u)) + 4.0);
}

Trajectory<Field> pulse_source(const ModelParams& p, const Grid& g)
{
    Trajectory<Field> f = make_trajectory(g, zero_field(g));
    const Field shape = testutil::sample(g, [&](double x, double z) { return profile(g, x, z); });
    for (int n = 0; n <= g.nt; ++n) f[n] = pulse(g.t(n), 2.0 * p.T0, p.T - 2.0 * p.T1) * shape;
    return f;
}

}  // namespace

TEST_CASE("transport: characteristics oracle at 64x33x300")
{
    const ModelParams p;
    const Grid g = make_grid(p, 64, 33, 300);
    const double a = standalone_reaction(p);
    TransportProblem tp;
    tp.data = testutil::sample(g, [&](double x, double z) { return profile(g, x, z); });
    tp.reaction = a;
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve_transport(tp, p, g);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double err = 0.0, ref = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        const double tau = g.T - g.t(n);
        const Field exact = testutil::sample(
            g, [&](double x, double z) { return std::exp(-a * tau) * profile(g, x + p.u_bar1 * tau, z); });
        err = std::max(err, (sol[n] - exact).cwiseAbs().maxCoeff());
        ref = std::max(ref, exact.cwiseAbs().maxCoeff());
    }
    CHECK(err / ref < 1e-10);
    CHECK(secs < 2.0);
}

TEST_CASE("transport: constant state with matching source is steady")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 5, 40);
    TransportProblem tp;
    tp.reaction = standalone_reaction(p);
    tp.data = Field::Constant(g.nx, g.nz, 1.0);
    tp.f4 = make_trajectory(g, Field(Field::Constant(g.nx, g.nz, tp.reaction)));
    for (Direction d : {Direction::backward, Direction::forward}) {
        tp.direction = d;
        const auto s = solve_transport(tp, p, g);
        for (int n = 0; n <= g.nt; ++n) CHECK((s[n].array() - 1.0).abs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("transport: single mode acquires the exact phase")
{
    ModelParams p;
    const Grid g = make_grid(p, 32, 5, 77);
    TransportProblem tp;
    tp.reaction = 0.0;
    const int m = 5;
    const double k = 2.0 * M_PI * m / g.torus_len;
    tp.data = testutil::sample(g, [&](double x, double) { return std::cos(k * (x - g.x_left)); });
    const auto s = solve_transport(tp, p, g);
    double err = 0.0;
    const cplx cT = fourier_x(s[g.nt])(m, 0);
    for (int n = 0; n <= g.nt; ++n) {
        const cplx c = fourier_x(s[n])(m, 0);
        const cplx expect = cT * std::exp(cplx(0.0, k * p.u_bar1 * (g.T - g.t(n))));
        err = std::max(err, std::abs(c - expect));
    }
    CHECK(err < 1e-12);
}

TEST_CASE("transport: unforced norm decays exactly at the reaction rate")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 9, 50);
    TransportProblem tp;
    tp.reaction = standalone_reaction(p);
    tp.data = testutil::random_field(g, 3);
    const auto s = solve_transport(tp, p, g);
    const double n0 = norm(tp.data, g, Space::L2);
    double worst = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        const double expect = std::exp(-tp.reaction * (g.T - g.t(n))) * n0;
        worst = std::max(worst, std::abs(norm(s[n], g, Space::L2) - expect) / expect);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("transport: backward-from-final sweep solves the forward recurrence")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 9, 80);
    const double a = standalone_reaction(p);
    const auto f = pulse_source(p, g);
    const auto back = solve_transport_from_final(f, a, p, g);
    TransportProblem tp;
    tp.data = back[0];
    tp.f4 = f;
    tp.reaction = a;
    tp.direction = Direction::forward;
    const auto fwd = solve_transport(tp, p, g);
    double err = 0.0, ref = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        err = std::max(err, (fwd[n] - back[n]).cwiseAbs().maxCoeff());
        ref = std::max(ref, back[n].cwiseAbs().maxCoeff());
    }
    CHECK(err < 1e-11 * ref);
}

TEST_CASE("gluing cutoff: endpoint values and exact transport away from omega")
{
    const ModelParams p;
    const GlueCutoff cut(p);
    CHECK(cut.min_occupation() > 0.0);
    const double h = 1e-6;
    for (int i = 0; i < 200; ++i) {
        const double x = -p.L() + p.torus_len() * (i + 0.5) / 200;
        CHECK(cut.chi(x, 0.0) == 0.0);
        CHECK(cut.chi(x, p.T) == 1.0);
        for (double t : {0.2, 0.7, 1.2}) {
            const double c = cut.chi(x, t);
            CHECK(c >= -1e-14);
            CHECK(c <= 1.0 + 1e-14);
            const double fd = (cut.chi(x + p.u_bar1 * h, t + h) - cut.chi(x - p.u_bar1 * h, t - h)) / (2.0 * h);
            CHECK(std::abs(fd - cut.transport_derivative(x, t)) < 1e-6);
            if (x >= 0.0 && x <= p.d) CHECK(cut.transport_derivative(x, t) == 0.0);
        }
    }
}

TEST_CASE("gluing: zero source gives zero trajectory and control")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 5, 40);
    const GlueResult r = transport_glue_control(make_trajectory(g, zero_field(g)), standalone_reaction(p), p, g);
    for (int n = 0; n <= g.nt; ++n) {
        CHECK(r.sigma[n].cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.control[n].cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("gluing: controlled trajectory vanishes at both ends with control in omega")
{
    const ModelParams p;
    const Grid g = make_grid(p, 64, 9, 200);
    const auto f = pulse_source(p, g);
    const GlueResult r = transport_glue_control(f, standalone_reaction(p), p, g);
    CHECK(r.endpoint_residual < 1e-10);
    CHECK(r.outside_ratio < 1e-9);
    CHECK(r.pass);
    CHECK(r.reproduction_error < 0.05);
    CHECK(r.reproduced_final < 0.05);
    double smax = 0.0;
    for (int n = 0; n <= g.nt; ++n) smax = std::max(smax, r.sigma[n].cwiseAbs().maxCoeff());
    CHECK(smax > 0.0);
    // self-consistency: sigma equals the forward piece where chi = 0 and the backward piece where chi = 1
    const GlueCutoff cut(p);
    for (int n = 0; n <= g.nt; n += 10)
        for (int i = 0; i < g.nx; ++i) {
            const double c = cut.chi(g.x(i), g.t(n));
            if (c == 0.0) CHECK((r.sigma[n].row(i) - r.sigma_forward[n].row(i)).cwiseAbs().maxCoeff() == 0.0);
            if (c == 1.0) CHECK((r.sigma[n].row(i) - r.sigma_backward[n].row(i)).cwiseAbs().maxCoeff() == 0.0);
        }
}

TEST_CASE("gluing: audit error shrinks under refinement")
{
    const ModelParams p;
    auto audit = [&](int nx, int nt) {
        const Grid g = make_grid(p, nx, 5, nt);
        return transport_glue_control(pulse_source(p, g), standalone_reaction(p), p, g).reproduction_error;
    };
    const double e1 = audit(64, 100), e2 = audit(128, 200), e3 = audit(256, 400);
    CHECK(testutil::order(e1, e2) > 1.5);
    CHECK(testutil::order(e2, e3) > 1.5);
}

TEST_CASE("transport functionals: zero, homogeneity and refinement stability")
{
    const ModelParams p;
    const CarlemanParams cp;
    const EtaProfile eta = build_eta(p);
    const double a = standalone_reaction(p);
    {
        const Grid g = make_grid(p, 32, 9, 60);
        const WeightTable wt = make_weight_table(eta, cp, p, g);
        const auto zero = make_trajectory(g, zero_field(g));
        const auto z = transport_obs_functionals(zero, zero, a, wt, p, g);
        for (const auto& [name, v] : z.values)
            if (name != "s_lambda") CHECK(v == 0.0);
        const auto f = pulse_source(p, g);
        TransportProblem tp;
        tp.data = testutil::sample(g, [&](double x, double zz) { return profile(g, x, zz); });
        tp.f4 = f;
        tp.reaction = a;
        const auto s = solve_transport(tp, p, g);
        auto s3 = s, f3 = f;
        for (int n = 0; n <= g.nt; ++n) {
            s3[n] *= 3.0;
            f3[n] *= 3.0;
        }
        const auto base = transport_obs_functionals(s, f, a, wt, p, g);
        const auto scaled = transport_obs_functionals(s3, f3, a, wt, p, g);
        for (std::size_t k = 0; k < base.values.size(); ++k) {
            if (base.values[k].first == "s_lambda") continue;
            CHECK(scaled.values[k].second == doctest::Approx(9.0 * base.values[k].second).epsilon(1e-12));
        }
    }
    auto quotients = [&](int nx, int nz, int nt) {
        const Grid g = make_grid(p, nx, nz, nt);
        TransportProblem tp;
        tp.data = testutil::sample(g, [&](double x, double zz) { return profile(g, x, zz); });
        tp.f4 = pulse_source(p, g);
        tp.reaction = a;
        const auto s = solve_transport(tp, p, g);
        const auto fn = transport_obs_functionals(s, tp.f4, a, make_weight_table(eta, cp, p, g), p, g);
        return std::array<double, 4>{fn.quotient("obs"), fn.quotient("grad"), fn.quotient("dt"), fn.quotient("linf")};
    };
    const auto q1 = quotients(32, 9, 100), q2 = quotients(64, 17, 200);
    for (int k = 0; k < 4; ++k) {
        CHECK(std::isfinite(q1[k]));
        CHECK(std::abs(q2[k] / q1[k] - 1.0) < 0.2);
    }
}
