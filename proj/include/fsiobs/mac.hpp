#pragma once

// Per-x-mode operators of the staggered vertical discretization shared by the
// coupled adjoint and the primal solvers.
//
// Scalars (density, flux, horizontal velocity) live on the z-nodes 0..J including
// both walls. The vertical velocity lives on the half nodes j + 1/2, j = 0..J-1.
// Ghost values: the vertical velocity is odd about each wall around its wall value
// (0 at the bottom, the beam normal velocity at the top); the horizontal velocity
// ghost makes the vorticity odd about each wall (curl = 0 on the walls).

#include "fsiobs/fields.hpp"
#include "fsiobs/params.hpp"

#include <Eigen/Dense>

namespace fsiobs::mac {

struct ModeContext {
    cplx D;       // symbol of d/dx
    double dz;
    int nz;
    ModelParams p;
    cplx D2() const { return D * D; }
    cplx D4() const { return D2() * D2(); }
};

ModeContext mode_context(const ModelParams& p, const Grid& g, int m);

// state layout (sigma, u1, u2, beam displacement, beam velocity)
struct FullLayout {
    int nz;
    int sigma(int j) const { return j; }
    int u1(int j) const { return nz + j; }
    int u2(int j) const { return 2 * nz + j; }
    int disp() const { return 3 * nz - 1; }
    int vel() const { return 3 * nz; }
    int size() const { return 3 * nz + 1; }
};

// state layout (sigma, q, beam displacement, beam velocity)
struct ReducedLayout {
    int nz;
    int sigma(int j) const { return j; }
    int q(int j) const { return nz + j; }
    int disp() const { return 2 * nz; }
    int vel() const { return 2 * nz + 1; }
    int size() const { return 2 * nz + 2; }
};

// staggered divergence at the nodes; `top` is the normal velocity at the top wall
Eigen::VectorXcd divergence(const ModeContext& c, const Eigen::VectorXcd& u1, const Eigen::VectorXcd& u2, cplx top);
// vorticity at the half nodes
Eigen::VectorXcd vorticity(const ModeContext& c, const Eigen::VectorXcd& u1, const Eigen::VectorXcd& u2);

// X' = A X for the primal (sigma~, u~, beta, beta_t)
Eigen::MatrixXcd primal_generator(const ModeContext& c);
// Y' = A Y for the adjoint (sigma, v, psi, psi_t)
Eigen::MatrixXcd adjoint_generator(const ModeContext& c);
// Pairing Pi = X^H P Y between primal and adjoint states
Eigen::MatrixXcd pairing_matrix(const ModeContext& c);

// M R' = A R for the reduced adjoint (sigma, q, psi, psi_t)
struct ReducedSystem {
    Eigen::MatrixXcd M;
    Eigen::MatrixXcd A;
};
ReducedSystem reduced_system(const ModeContext& c);
// full adjoint state -> reduced state, q = nu div v + rho sigma
Eigen::MatrixXcd reduction_map(const ModeContext& c);

// half-node heat operator of the vorticity, odd ghosts (w = 0 on the walls): w' = A w
Eigen::MatrixXcd vorticity_generator(const ModeContext& c);

// Crank-Nicolson propagator (M + h A / 2)^{-1} (M - h A / 2): one backward step of M R' = A R
Eigen::MatrixXcd backward_step(const Eigen::MatrixXcd& M, const Eigen::MatrixXcd& A, double h);

}  // namespace fsiobs::mac
