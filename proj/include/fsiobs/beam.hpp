#pragma once

#include "fsiobs/fields.hpp"
#include "fsiobs/weights.hpp"

#include <Eigen/Dense>

namespace fsiobs {

struct BeamState {
    Trace psi;
    Trace psi_t;
};

// Exact propagator exp(A tau) of the per-mode beam system y' = A y,
// A = [[0, 1], [-k^4, k^2]], i.e. psi'' - k^2 psi' + k^4 psi = 0.
Eigen::Matrix2d beam_propagator(double k, double tau);

// Backward solve of psi_tt + psi_txx + psi_xxxx = f from t = T with exact
// per-mode exponentials and trapezoidal source treatment. An empty source means zero.
Trajectory<BeamState> solve_beam_adjoint(const Trace& psi_T, const Trace& psi1_T, const Trajectory<Trace>& f_psi,
                                         const Grid& g);

struct BeamCarleman {
    double lhs = 0.0;
    double rhs_interior = 0.0;
    double rhs_obs = 0.0;
    double quotient() const { return lhs / (rhs_interior + rhs_obs); }
};

// Weighted integrals of the beam Carleman estimate over the top wall and time.
// Endpoint time slices carry zero weight and are skipped.
BeamCarleman beam_carleman_functionals(const Trajectory<BeamState>& traj, const Trajectory<Trace>& f_psi,
                                       const WeightTable& wt, const Grid& g);

}  // namespace fsiobs
