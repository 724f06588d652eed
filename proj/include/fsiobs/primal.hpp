#pragma once

#include "fsiobs/coupled.hpp"

namespace fsiobs {

// Linearized primal state: density, staggered velocity, beam displacement and velocity.
struct PrimalState {
    Field sigma;
    VelocityField u;
    Trace beta;
    Trace beta_t;
};

PrimalState zero_primal(const Grid& g);

// Distributed controls on the density and momentum equations and a wall control on the beam.
// Empty trajectories stand for zero controls.
struct Controls {
    Trajectory<Field> v_sigma;
    Trajectory<VelocityField> v_u;
    Trajectory<Trace> v_beta;

    bool empty() const { return v_sigma.size() == 0 && v_u.size() == 0 && v_beta.size() == 0; }
};

// true when every control vanishes identically outside the control regions
bool controls_supported(const Controls& c, const Grid& g);
// i.i.d. normal control values on the control regions, zero elsewhere
Controls random_controls(unsigned seed, const Grid& g);

// wall conditions of the primal velocity: u2 = beta_t + u beta_x on top, 0 at the bottom, curl u = 0
CompatReport check_primal_compat(const PrimalState& s, const ModelParams& p, const Grid& g, double tol = -1.0);
// smooth compatible initial state built from the random adjoint data generator
PrimalState random_primal_data(const RandomDataSpec& spec, const ModelParams& p, const Grid& g);

// Forward Crank-Nicolson solve with the same staggered operators as the adjoint.
// Controls are applied as given; throws InvariantError when the initial state is not compatible.
Trajectory<PrimalState> solve_primal(const PrimalState& init, const Controls& ctrl, const ModelParams& p,
                                     const Grid& g);

// discrete pairing between a primal and an adjoint state at the same time
double pairing(const PrimalState& x, const Field& sigma, const VelocityField& v, const Trace& psi, const Trace& psi_t,
               const ModelParams& p, const Grid& g);

struct DualityReport {
    double control_term = 0.0;      // time integral of the control/adjoint pairing
    double terminal_pairing = 0.0;  // pairing at t = T
    double initial_pairing = 0.0;   // pairing at t = 0
    double residual = 0.0;          // relative mismatch of control_term and the pairing increment
};
DualityReport duality_residual(const Trajectory<PrimalState>& primal, const AdjointTrajectory& adjoint,
                               const Controls& ctrl, const ModelParams& p, const Grid& g);

struct EnergyTerms {
    double energy = 0.0;       // rho/2 |u|^2 + P'/(2 rho) |sigma|^2 + 1/2 |beta_t|^2 + 1/2 |beta_xx|^2
    double dissipation = 0.0;  // mu |curl u|^2 + nu |div u|^2 + |beta_tx|^2
    double wall_work = 0.0;    // u <beta_x, -nu div u + P' sigma> on the top wall
};
EnergyTerms energy_terms(const PrimalState& s, const ModelParams& p, const Grid& g);

struct EnergyReport {
    std::vector<double> energy;       // E(t_n)
    std::vector<double> dissipation;  // D(t_n)
    std::vector<double> wall_work;    // W(t_n)
    std::vector<double> balance;      // |E(t_n) - E(0) + int_0^t_n (D + W)|, trapezoid in time
    double max_balance = 0.0;
    double max_increase = 0.0;        // largest E(t_{n+1}) - E(t_n), 0 when non-increasing
    bool non_increasing = true;
};
// throws InvariantError when `ctrl` is not empty
EnergyReport energy_balance(const Trajectory<PrimalState>& primal, const Controls& ctrl, const ModelParams& p,
                            const Grid& g);

}  // namespace fsiobs
