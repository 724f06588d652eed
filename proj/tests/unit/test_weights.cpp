#include "doctest.h"
#include "fsiobs/weights.hpp"

#include <cmath>

using namespace fsiobs;

TEST_CASE("smoothstep hits its end values with flat ends")
{
    for (int n : {3, 4, 6}) {
        const Poly S = smoothstep(n);
        CHECK(S.eval(0.0) == doctest::Approx(0.0));
        CHECK(S.eval(1.0) == doctest::Approx(1.0));
        for (int k = 1; k <= n; ++k) {
            CHECK(std::abs(S.eval(0.0, k)) < 1e-9);
            CHECK(std::abs(S.eval(1.0, k)) < 1e-9);
        }
        CHECK(S.integral().eval(1.0) == doctest::Approx(0.5));
    }
}

TEST_CASE("eta profile is positive with critical points only in the allowed zones")
{
    const ModelParams p;
    const EtaProfile eta = build_eta(p);
    const auto zones = eta.allowed_zones();
    const int N = 10000;
    double min_eta = 1e300;
    double min_slope_outside = 1e300;
    for (int i = 0; i < N; ++i) {
        const double x = -p.L() + p.torus_len() * (i + 0.5) / N;
        min_eta = std::min(min_eta, eta.eval(x));
        bool allowed = false;
        for (auto [a, b] : zones) allowed = allowed || (x > a && x < b);
        if (!allowed) min_slope_outside = std::min(min_slope_outside, std::abs(eta.eval(x, 1)));
    }
    CHECK(min_eta > 0.0);
    CHECK(min_slope_outside > 0.0);
    const double tau = p.u_bar1 * p.T;
    double worst = 1e300;
    for (int n = 0; n <= 200; ++n) {
        const double t = p.T * n / 200;
        for (int i = 0; i <= 200; ++i) {
            const double x = -tau + (p.d + 2 * tau) * i / 200;
            worst = std::min(worst, std::abs(eta.eval(x - p.u_bar1 * t, 1)));
        }
    }
    CHECK(worst > 0.0);
}

TEST_CASE("eta profile is smooth across its breakpoints")
{
    const ModelParams p;
    const EtaProfile eta = build_eta(p);
    const double tau = p.u_bar1 * p.T;
    const double h = 1e-7;
    for (double b : {-2.5 * tau, -2.0 * tau, p.d + tau, p.d + 1.5 * tau, p.d + 1.75 * tau, p.d + 3.25 * tau}) {
        for (int k = 0; k <= 5; ++k) {
            const double scale = 1.0 + std::abs(eta.eval(b + h, k + 1)) + std::abs(eta.eval(b - h, k + 1));
            CHECK(std::abs(eta.eval(b + h, k) - eta.eval(b - h, k)) < 1e-5 * scale);
        }
    }
    // wrap-around continuity
    CHECK(eta.eval(-p.L()) == doctest::Approx(eta.eval(p.d + p.L())));
}

TEST_CASE("theta: branches, plateau and C4 joints")
{
    const ModelParams p;
    CHECK(theta(p, p.T0 / 2) == doctest::Approx(4.0 / (p.T0 * p.T0)));
    CHECK(theta(p, 0.75) == 1.0);
    CHECK(theta(p, 2 * p.T0) == 1.0);
    CHECK(theta(p, p.T - p.T1 / 2) == doctest::Approx(4.0 / (p.T1 * p.T1)));
    for (double j : theta_joints(p))
        for (int k = 0; k <= 4; ++k) {
            const double l = theta(p, j, k, -1), r = theta(p, j, k, +1);
            CHECK(std::abs(l - r) < 1e-8 * (1.0 + std::abs(l)));
        }
    for (int n = 1; n < 200; ++n) {
        const double t = p.T0 + p.T0 * n / 200;
        CHECK(theta(p, t, 1) < 0.0);
        const double s = p.T - 2 * p.T1 + p.T1 * n / 200;
        CHECK(theta(p, s, 1) > 0.0);
    }
    CHECK_THROWS_AS(theta(p, -0.1), InvariantError);
}

TEST_CASE("weights: algebraic identity and analytic derivatives")
{
    const ModelParams p;
    const EtaProfile eta = build_eta(p);
    const CarlemanParams cp{4.0, 8.0};
    const double top = std::exp(6 * cp.lambda * eta.max_value());
    const double h = 1e-5;
    for (double t : {0.05, 0.17, 0.8, 1.33, 1.45}) {
        for (double x : {-4.0, -0.3, 0.5, 2.2, 5.0}) {
            const WeightValues w = eval_weights(eta, cp, p, x, t);
            CHECK(std::abs(w.phi + w.xi - w.theta * top) <= 1e-12 * w.theta * top);
            const WeightValues wp = eval_weights(eta, cp, p, x + h, t);
            const WeightValues wm = eval_weights(eta, cp, p, x - h, t);
            CHECK(w.dxi[0][1] == doctest::Approx((wp.xi - wm.xi) / (2 * h)).epsilon(1e-5));
            const WeightValues tp = eval_weights(eta, cp, p, x, t + h);
            const WeightValues tm = eval_weights(eta, cp, p, x, t - h);
            CHECK(w.dphi[1][0] == doctest::Approx((tp.phi - tm.phi) / (2 * h)).epsilon(1e-5));
            CHECK(w.dxi[1][1] == doctest::Approx((tp.dxi[0][1] - tm.dxi[0][1]) / (2 * h)).epsilon(1e-5));
            CHECK(w.dxi[2][2] == doctest::Approx((tp.dxi[1][2] - tm.dxi[1][2]) / (2 * h)).epsilon(1e-4));
            CHECK(w.dphi[0][2] == doctest::Approx(-w.dxi[0][2]));
        }
    }
    CHECK(eval_weights(eta, cp, p, 0.3, 2 * p.T0).theta == 1.0);
    CHECK_THROWS_AS(eval_weights(eta, cp, p, 0.3, 0.0), InvariantError);
    CHECK(std::isinf(eval_weights(eta, cp, p, 0.3, 0.0, true).phi));
    CHECK_THROWS_AS(eval_weights(eta, cp, p, 0.3, p.T + 0.1, true), InvariantError);
}

TEST_CASE("transport identity of the traveling profile")
{
    const ModelParams p;
    const EtaProfile eta = build_eta(p);
    const Grid g = make_grid(p, 64, 9, 100);
    CHECK(transport_identity_residual(eta, p, g) < 1e-12);
    const double frozen = transport_identity_residual(eta, p, g, false);
    CHECK(frozen > 0.5 * eta.core_slope());
}

TEST_CASE("verify_bounds certifies the construction")
{
    const ModelParams p;
    const EtaProfile eta = build_eta(p);
    const Grid g = make_grid(p, 32, 9, 50);
    const BoundReport rep = verify_bounds(eta, CarlemanParams{4.0, 8.0}, p, g, 0.0, 64);
    CHECK(rep.pass);
    CHECK(rep.identity_residual < 1e-12);
    CHECK(rep.lambda_star_found);
    for (const auto& e : rep.entries) CHECK_MESSAGE(e.pass, e.name);
}

TEST_CASE("weight table vanishes at the endpoints and is bounded by one")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 40);
    const WeightTable tab = make_weight_table(build_eta(p), CarlemanParams{}, p, g);
    CHECK(tab.w.col(0).isZero());
    CHECK(tab.w.col(g.nt).isZero());
    CHECK(tab.w.maxCoeff() <= 1.0 + 1e-12);
    CHECK(tab.w.col(g.nt / 2).minCoeff() > 0.0);
    CHECK(tab.xi.minCoeff() >= 1.0);
}
