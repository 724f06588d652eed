#include "doctest.h"
#include "fsiobs/mac.hpp"

using namespace fsiobs;
using Mat = Eigen::MatrixXcd;

namespace {

double rel(const Mat& a, const Mat& ref) { return a.norm() / ref.norm(); }

}  // namespace

TEST_CASE("staggered operators: primal and adjoint generators are adjoint in the pairing")
{
    ModelParams p;
    p.mu_prime = 0.3;
    const Grid g = make_grid(p, 16, 9, 10);
    for (int m : {0, 1, 3, 7}) {
        const auto c = mac::mode_context(p, g, m);
        const Mat Ap = mac::primal_generator(c), Aa = mac::adjoint_generator(c), P = mac::pairing_matrix(c);
        const Mat defect = Ap.adjoint() * P + P * Aa;
        CHECK(rel(defect, P * Aa) < 1e-13);
    }
}

TEST_CASE("staggered operators: the reduced system is an exact consequence of the full adjoint")
{
    ModelParams p;
    p.mu_prime = -0.2;
    const Grid g = make_grid(p, 16, 9, 10);
    for (int m : {0, 2, 5}) {
        const auto c = mac::mode_context(p, g, m);
        const auto rs = mac::reduced_system(c);
        const Mat R = mac::reduction_map(c);
        const Mat lhs = rs.M * R * mac::adjoint_generator(c);
        const Mat rhs = rs.A * R;
        CHECK(rel(lhs - rhs, rhs) < 1e-13);
    }
}

TEST_CASE("staggered operators: the vorticity of the adjoint velocity solves its own heat equation")
{
    const ModelParams p;
    const Grid g = make_grid(p, 16, 9, 10);
    const int nz = g.nz, J = nz - 1;
    for (int m : {0, 3}) {
        const auto c = mac::mode_context(p, g, m);
        const mac::FullLayout L{nz};
        // curl map on the full state
        Mat C = Mat::Zero(J, L.size());
        for (int j = 0; j < J; ++j) {
            C(j, L.u2(j)) = c.D;
            C(j, L.u1(j + 1)) = -1.0 / g.dz;
            C(j, L.u1(j)) = 1.0 / g.dz;
        }
        const Mat lhs = C * mac::adjoint_generator(c);
        const Mat rhs = mac::vorticity_generator(c) * C;
        CHECK(rel(lhs - rhs, rhs) < 1e-13);
    }
}
