#pragma once

#include "fsiobs/fields.hpp"
#include "fsiobs/weights.hpp"

#include <vector>

namespace fsiobs {

// Backward: -c q_t - Laplace q = f1, d_z q = f2 on top, 0 on bottom, q(T) = data.
// Forward:   c q_t - Laplace q = f1, same walls, q(0) = data.
// c is the heat capacity (rho_bar / nu for the adjoint heat equation).
// Empty f1 / f2 trajectories mean zero.
struct HeatProblem {
    Field data;
    Trajectory<Field> f1;
    Trajectory<Trace> f2;
    double capacity = 1.0;
};

// Crank-Nicolson in time, spectral in x, ghost-node Neumann differences in z.
Trajectory<Field> solve_heat_neumann(const HeatProblem& p, Direction dir, const Grid& g);

// Ghost-node Neumann second difference in z for one column; `flux` is d_z f at the top wall.
Eigen::VectorXcd neumann_lz(const Eigen::VectorXcd& f, double dz, cplx flux = 0.0);

// Full discrete Laplacian with homogeneous Neumann walls.
Field neumann_laplacian(const Field& f, const Grid& g);

// sum over space-time of |grad f|^2 * weight: x-derivative at nodes (trapezoid in z),
// z-differences at half nodes (midpoint); `weight(i, j_half_or_node)` supplied per x only.
double weighted_grad_sq(const Field& f, const Grid& g, const Eigen::VectorXd& weight_x);

struct HeatCarleman {
    double lhs_grad = 0.0;
    double lhs_field = 0.0;
    double lhs_boundary = 0.0;
    double rhs_f1 = 0.0;
    double rhs_f2 = 0.0;
    double rhs_obs = 0.0;
    double lhs() const { return lhs_grad + lhs_field + lhs_boundary; }
    double rhs() const { return rhs_f1 + rhs_f2 + rhs_obs; }
    double quotient() const { return lhs() / rhs(); }
};

enum class HeatFamily { standard, low_power };

HeatCarleman heat_carleman_functionals(const Trajectory<Field>& q, const Trajectory<Field>& f1,
                                       const Trajectory<Trace>& f2, const WeightTable& wt, const Grid& g,
                                       HeatFamily family = HeatFamily::standard);

struct HumOptions {
    double cg_tol = 1e-8;
    int max_iter = 500;
    // time slices whose mean weight is below cutoff * max are excluded from the unknowns
    double weight_cutoff = 1e-30;
};

struct HumSolution {
    Trajectory<Field> Y;      // controlled state at the time nodes
    Trajectory<Field> H;      // control, zero outside omega
    Trajectory<Field> theta;  // minimizer
    std::vector<double> cg_residual_history;
    int cg_iters = 0;
    bool converged = false;
    double J_min = 0.0;
    double controllability_residual = 0.0;  // ||Y(T)|| / ||Y||_{space-time} for the forward-solved state
    double consistency = 0.0;               // forward-solved state vs the weighted residual, relative
    double inYH_lhs = 0.0;
    double inYH_rhs = 0.0;
    double inYH_quotient() const { return inYH_lhs / inYH_rhs; }
};

// Minimizes the weighted quadratic functional J by preconditioned conjugate gradients.
HumSolution hum_minimize(const Trajectory<Field>& G, const EtaProfile& eta, const CarlemanParams& cp,
                         const ModelParams& p, const Grid& g, const HumOptions& opt = {});

// G = xi^3 q exp(-2 s (phi - phi_ref)) for a given heat trajectory q.
Trajectory<Field> hum_source_from(const Trajectory<Field>& q, const WeightTable& wt, const Grid& g);

}  // namespace fsiobs
