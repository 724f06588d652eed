#include "doctest.h"
#include "fsiobs/beam.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <complex>

using namespace fsiobs;

namespace {

Trace harmonic(const Grid& g, int m, double phase = 0.0)
{
    Trace t(g.nx);
    const double k = 2.0 * M_PI * m / g.torus_len;
    for (int i = 0; i < g.nx; ++i) t(i) = std::cos(k * (g.x(i) - g.x_left) + phase);
    return t;
}

Trace smooth_random_trace(const Grid& g, unsigned seed, int modes = 5)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Trace t = zero_trace(g);
    for (int m = 0; m <= modes; ++m) t += n01(rng) * harmonic(g, m, n01(rng)) / (1.0 + m * m);
    return t;
}

}  // namespace

TEST_CASE("beam: the zero mode is free motion")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 5, 40);
    const Trace a = Trace::Constant(g.nx, 0.7), b = Trace::Constant(g.nx, -1.3);
    const auto tr = solve_beam_adjoint(a, b, {}, g);
    double err = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        const double exact = 0.7 + (g.t(n) - g.T) * -1.3;
        err = std::max(err, (tr[n].psi.array() - exact).abs().maxCoeff());
        err = std::max(err, (tr[n].psi_t.array() + 1.3).abs().maxCoeff());
    }
    CHECK(err < 1e-12);
}

TEST_CASE("beam: single mode matches the characteristic roots")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 5, 150);
    const int m = 3;
    const double k = 2.0 * M_PI * m / g.torus_len;
    const std::complex<double> r1 = k * k * std::complex<double>(1.0, std::sqrt(3.0)) / 2.0;
    const std::complex<double> r2 = std::conj(r1);
    const std::complex<double> A = r2 / (r2 - r1), B = -r1 / (r2 - r1);
    const Trace shape = harmonic(g, m);
    const auto tr = solve_beam_adjoint(shape, zero_trace(g), {}, g);
    double err = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        const double tau = g.t(n) - g.T;
        const double y = (A * std::exp(r1 * tau) + B * std::exp(r2 * tau)).real();
        const double yt = (A * r1 * std::exp(r1 * tau) + B * r2 * std::exp(r2 * tau)).real();
        err = std::max(err, (tr[n].psi - y * shape).cwiseAbs().maxCoeff());
        err = std::max(err, (tr[n].psi_t - yt * shape).cwiseAbs().maxCoeff() / (1.0 + k * k));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("beam: zero data and zero source give zero")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 5, 20);
    const auto tr = solve_beam_adjoint(zero_trace(g), zero_trace(g), make_trajectory(g, zero_trace(g)), g);
    for (int n = 0; n <= g.nt; ++n) {
        CHECK(tr[n].psi.cwiseAbs().maxCoeff() == 0.0);
        CHECK(tr[n].psi_t.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("beam: backward modal energy is non-increasing")
{
    const ModelParams p;
    const Grid g = make_grid(p, 32, 5, 100);
    const auto tr = solve_beam_adjoint(smooth_random_trace(g, 1), smooth_random_trace(g, 2), {}, g);
    bool monotone = true;
    for (int m = 1; m < g.modes(); ++m) {
        const double k4 = std::pow(g.wavenumber(m), 4);
        double prev = 1e300;
        const double scale = std::norm(fourier_trace(tr[g.nt].psi_t)(0)) + 1.0;
        for (int n = g.nt; n >= 0; --n) {
            const double e = std::norm(fourier_trace(tr[n].psi_t)(m)) + k4 * std::norm(fourier_trace(tr[n].psi)(m));
            if (e > prev * (1.0 + 1e-10) + 1e-24 * scale) monotone = false;
            prev = e;
        }
    }
    CHECK(monotone);
}

TEST_CASE("beam: trapezoidal source converges at second order")
{
    const ModelParams p;
    auto run = [&](int nt) {
        const Grid g = make_grid(p, 16, 5, nt);
        // psi = cos(k x) sin(t) solves the equation with source (-sin t - k^2 cos t + k^4 sin t) cos(k x)
        const int m = 2;
        const double k = 2.0 * M_PI * m / g.torus_len;
        const Trace shape = harmonic(g, m);
        Trajectory<Trace> f = make_trajectory(g, zero_trace(g));
        for (int n = 0; n <= nt; ++n) {
            const double t = g.t(n);
            f[n] = (-std::sin(t) - k * k * std::cos(t) + std::pow(k, 4) * std::sin(t)) * shape;
        }
        const auto tr = solve_beam_adjoint(std::sin(g.T) * shape, std::cos(g.T) * shape, f, g);
        double err = 0.0;
        for (int n = 0; n <= nt; ++n) err = std::max(err, (tr[n].psi - std::sin(g.t(n)) * shape).cwiseAbs().maxCoeff());
        return err;
    };
    const double e1 = run(50), e2 = run(100), e3 = run(200);
    CHECK(testutil::order(e1, e2) > 1.9);
    CHECK(testutil::order(e2, e3) > 1.9);
}

TEST_CASE("beam Carleman functionals: zero, homogeneity and refinement stability")
{
    const ModelParams p;
    const CarlemanParams cp;
    const EtaProfile eta = build_eta(p);
    {
        const Grid g = make_grid(p, 32, 5, 60);
        const WeightTable wt = make_weight_table(eta, cp, p, g);
        const auto zero = solve_beam_adjoint(zero_trace(g), zero_trace(g), {}, g);
        const BeamCarleman z = beam_carleman_functionals(zero, {}, wt, g);
        CHECK(z.lhs == 0.0);
        CHECK(z.rhs_interior == 0.0);
        CHECK(z.rhs_obs == 0.0);

        Trajectory<Trace> f = make_trajectory(g, zero_trace(g));
        for (int n = 0; n <= g.nt; ++n) f[n] = std::sin(g.t(n)) * smooth_random_trace(g, 5);
        const auto a = solve_beam_adjoint(smooth_random_trace(g, 3), smooth_random_trace(g, 4), f, g);
        const BeamCarleman base = beam_carleman_functionals(a, f, wt, g);
        auto scaled = a;
        auto fs = f;
        for (int n = 0; n <= g.nt; ++n) {
            scaled[n].psi *= 3.0;
            scaled[n].psi_t *= 3.0;
            fs[n] *= 3.0;
        }
        const BeamCarleman s = beam_carleman_functionals(scaled, fs, wt, g);
        CHECK(s.lhs == doctest::Approx(9.0 * base.lhs).epsilon(1e-12));
        CHECK(s.rhs_interior == doctest::Approx(9.0 * base.rhs_interior).epsilon(1e-12));
        CHECK(s.rhs_obs == doctest::Approx(9.0 * base.rhs_obs).epsilon(1e-12));
    }
    auto quotient = [&](int nx, int nt) {
        const Grid g = make_grid(p, nx, 5, nt);
        const WeightTable wt = make_weight_table(eta, cp, p, g);
        const auto tr = solve_beam_adjoint(smooth_random_trace(g, 7, 3), smooth_random_trace(g, 8, 3), {}, g);
        return beam_carleman_functionals(tr, {}, wt, g).quotient();
    };
    const double q1 = quotient(32, 150), q2 = quotient(64, 300);
    CHECK(std::isfinite(q1));
    CHECK(std::abs(q2 / q1 - 1.0) < 0.2);
}
