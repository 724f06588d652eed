#include "doctest.h"
#include "fsiobs/heat.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace fsiobs;

namespace {

Field smooth_random(const Grid& g, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Field f = zero_field(g);
    for (int m = 0; m <= 4; ++m)
        for (int l = 0; l <= 3; ++l) {
            const double a = n01(rng) / (1.0 + m * m + l * l), ph = n01(rng);
            const double k = 2.0 * M_PI * m / g.torus_len;
            f += a * testutil::sample(g, [&](double x, double z) {
                     return std::cos(k * (x - g.x_left) + ph) * std::cos(M_PI * l * z);
                 });
        }
    return f;
}

double separable_error(const ModelParams& p, int nz, int nt)
{
    const Grid g = make_grid(p, 16, nz, nt);
    const double c = p.rho_bar / p.nu();
    const double k = 2.0 * M_PI * 2 / g.torus_len;
    const double rate = (k * k + M_PI * M_PI) / c;
    auto exact = [&](double t) {
        return testutil::sample(g, [&](double x, double z) {
            return std::cos(k * (x - g.x_left)) * std::cos(M_PI * z) * std::exp(-rate * (g.T - t));
        });
    };
    HeatProblem hp;
    hp.data = exact(g.T);
    hp.capacity = c;
    const auto q = solve_heat_neumann(hp, Direction::backward, g);
    auto err = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= nt; ++n) err[n] = q[n] - exact(g.t(n));
    return norm(err, g, Space::L2);
}

}  // namespace

TEST_CASE("heat: constants are steady")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 30);
    HeatProblem hp;
    hp.data = Field::Constant(g.nx, g.nz, 2.5);
    hp.capacity = p.rho_bar / p.nu();
    for (Direction d : {Direction::backward, Direction::forward}) {
        const auto q = solve_heat_neumann(hp, d, g);
        for (int n = 0; n <= g.nt; ++n) CHECK((q[n].array() - 2.5).abs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("heat: separable Neumann oracle converges at second order")
{
    const ModelParams p;
    const double e1 = separable_error(p, 9, 25), e2 = separable_error(p, 17, 50), e3 = separable_error(p, 33, 100);
    CHECK(testutil::order(e1, e2) >= 1.9);
    CHECK(testutil::order(e2, e3) >= 1.9);
}

TEST_CASE("heat: linearity in data and sources")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 20);
    auto problem = [&](unsigned seed) {
        HeatProblem hp;
        hp.data = smooth_random(g, seed);
        hp.f1 = make_trajectory(g, zero_field(g));
        hp.f2 = make_trajectory(g, zero_trace(g));
        for (int n = 0; n <= g.nt; ++n) {
            hp.f1[n] = std::sin(3.0 * g.t(n) + seed) * smooth_random(g, seed + 10);
            hp.f2[n] = std::cos(g.t(n) + seed) * trace(smooth_random(g, seed + 20), Wall::top);
        }
        return hp;
    };
    const HeatProblem a = problem(1), b = problem(2);
    HeatProblem sum = a;
    sum.data += b.data;
    for (int n = 0; n <= g.nt; ++n) {
        sum.f1[n] += b.f1[n];
        sum.f2[n] += b.f2[n];
    }
    const auto qa = solve_heat_neumann(a, Direction::backward, g);
    const auto qb = solve_heat_neumann(b, Direction::backward, g);
    const auto qs = solve_heat_neumann(sum, Direction::backward, g);
    double err = 0.0, scale = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        err = std::max(err, (qs[n] - qa[n] - qb[n]).cwiseAbs().maxCoeff());
        scale = std::max(scale, qs[n].cwiseAbs().maxCoeff());
    }
    CHECK(err < 1e-12 * scale);
}

TEST_CASE("heat: forward and backward schemes are discrete adjoints")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 40);
    const double c = p.rho_bar / p.nu();
    HeatProblem fw, bw;
    fw.data = testutil::random_field(g, 11);
    bw.data = testutil::random_field(g, 12);
    fw.capacity = bw.capacity = c;
    fw.f1 = make_trajectory(g, zero_field(g));
    bw.f1 = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= g.nt; ++n) {
        fw.f1[n] = testutil::random_field(g, 100 + n);
        bw.f1[n] = testutil::random_field(g, 500 + n);
    }
    const auto u = solve_heat_neumann(fw, Direction::forward, g);
    const auto q = solve_heat_neumann(bw, Direction::backward, g);
    // c<u,q>(T) - c<u,q>(0) = sum dt (<g_avg, q_avg> - <u_avg, f_avg>)
    const double lhs = c * inner(u[g.nt], q[g.nt], g) - c * inner(u[0], q[0], g);
    double rhs = 0.0, scale = 0.0;
    for (int n = 0; n < g.nt; ++n) {
        const Field ua = 0.5 * (u[n] + u[n + 1]), qa = 0.5 * (q[n] + q[n + 1]);
        const Field ga = 0.5 * (fw.f1[n] + fw.f1[n + 1]), fa = 0.5 * (bw.f1[n] + bw.f1[n + 1]);
        const double t1 = inner(ga, qa, g), t2 = inner(ua, fa, g);
        rhs += g.dt * (t1 - t2);
        scale += g.dt * (std::abs(t1) + std::abs(t2));
    }
    scale += c * (std::abs(inner(u[g.nt], q[g.nt], g)) + std::abs(inner(u[0], q[0], g)));
    CHECK(std::abs(lhs - rhs) < 1e-11 * scale);
}

TEST_CASE("heat Carleman functionals: zero and homogeneity")
{
    const ModelParams p;
    const CarlemanParams cp;
    const Grid g = make_grid(p, 32, 9, 60);
    const WeightTable wt = make_weight_table(build_eta(p), cp, p, g);
    const auto zero = make_trajectory(g, zero_field(g));
    for (HeatFamily fam : {HeatFamily::standard, HeatFamily::low_power}) {
        const HeatCarleman z = heat_carleman_functionals(zero, {}, {}, wt, g, fam);
        CHECK(z.lhs() == 0.0);
        CHECK(z.rhs() == 0.0);
        HeatProblem hp;
        hp.data = smooth_random(g, 3);
        hp.capacity = p.rho_bar / p.nu();
        const auto q = solve_heat_neumann(hp, Direction::backward, g);
        auto q3 = q;
        for (auto& f : q3.snap) f *= 3.0;
        const HeatCarleman a = heat_carleman_functionals(q, {}, {}, wt, g, fam);
        const HeatCarleman b = heat_carleman_functionals(q3, {}, {}, wt, g, fam);
        CHECK(a.lhs() > 0.0);
        CHECK(b.lhs_grad == doctest::Approx(9.0 * a.lhs_grad).epsilon(1e-12));
        CHECK(b.lhs_field == doctest::Approx(9.0 * a.lhs_field).epsilon(1e-12));
        CHECK(b.lhs_boundary == doctest::Approx(9.0 * a.lhs_boundary).epsilon(1e-12));
        CHECK(b.rhs_obs == doctest::Approx(9.0 * a.rhs_obs).epsilon(1e-12));
    }
}

TEST_CASE("heat Carleman quotient is stable under refinement")
{
    const ModelParams p;
    const CarlemanParams cp;
    const EtaProfile eta = build_eta(p);
    auto quotient = [&](int nx, int nz, int nt, HeatFamily fam) {
        const Grid g = make_grid(p, nx, nz, nt);
        HeatProblem hp;
        hp.data = smooth_random(g, 9);
        hp.capacity = p.rho_bar / p.nu();
        const auto q = solve_heat_neumann(hp, Direction::backward, g);
        return heat_carleman_functionals(q, {}, {}, make_weight_table(eta, cp, p, g), g, fam).quotient();
    };
    for (HeatFamily fam : {HeatFamily::standard, HeatFamily::low_power}) {
        const double a = quotient(32, 9, 100, fam), b = quotient(64, 17, 200, fam);
        CHECK(std::isfinite(a));
        CHECK(std::abs(b / a - 1.0) < 0.2);
    }
}

TEST_CASE("HUM: zero source gives the zero minimizer")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 40);
    const HumSolution s = hum_minimize(make_trajectory(g, zero_field(g)), build_eta(p), CarlemanParams{}, p, g);
    CHECK(s.converged);
    CHECK(s.J_min == 0.0);
    for (int n = 0; n <= g.nt; ++n) {
        CHECK(s.Y[n].cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.H[n].cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("HUM: controlled state vanishes at the final time")
{
    const ModelParams p;
    const CarlemanParams cp;
    const EtaProfile eta = build_eta(p);
    const Grid g = make_grid(p, 32, 17, 200);
    HeatProblem hp;
    hp.data = smooth_random(g, 21);
    hp.capacity = p.rho_bar / p.nu();
    const auto q = solve_heat_neumann(hp, Direction::backward, g);
    const auto G = hum_source_from(q, make_weight_table(eta, cp, p, g), g);
    const HumSolution s = hum_minimize(G, eta, cp, p, g);
    MESSAGE("cg_iters=", s.cg_iters, " residual=", s.controllability_residual, " consistency=", s.consistency,
            " J=", s.J_min, " inYH=", s.inYH_quotient());
    CHECK(s.converged);
    CHECK(s.cg_iters <= 500);
    CHECK(s.J_min < 0.0);
    CHECK(s.controllability_residual < 1e-6);
    CHECK(std::isfinite(s.inYH_quotient()));
    CHECK(s.inYH_quotient() > 0.0);
    const Eigen::VectorXd chi = omega_indicator(g);
    double outside = 0.0;
    for (int n = 0; n <= g.nt; ++n)
        for (int i = 0; i < g.nx; ++i)
            if (chi(i) == 0.0) outside = std::max(outside, s.H[n].row(i).cwiseAbs().maxCoeff());
    CHECK(outside == 0.0);
    for (std::size_t k = 1; k < s.cg_residual_history.size(); ++k) CHECK(std::isfinite(s.cg_residual_history[k]));
}
