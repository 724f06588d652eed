#pragma once

#include "fsiobs/fields.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fsiobs {

// Velocity on the staggered grid: v1 on the z-nodes (nx x nz), v2 on the half nodes (nx x (nz-1)).
struct VelocityField {
    Field v1;
    Field v2;

    VelocityField& operator+=(const VelocityField& o);
    VelocityField& operator*=(double s);
};

VelocityField zero_velocity(const Grid& g);
// v2 given on the nodes is averaged onto the half nodes
VelocityField velocity_from_nodes(const Field& v1, const Field& v2_nodes);
// v2 averaged onto the nodes using the wall ghosts (0 at the bottom, `top` at the top)
Field v2_at_nodes(const VelocityField& v, const Trace& top);
// divergence at the nodes; `top` is the normal velocity on the top wall
Field staggered_div(const VelocityField& v, const Trace& top, const Grid& g);
// vorticity at the half nodes
Field staggered_curl(const VelocityField& v, const Grid& g);

struct TerminalData {
    Field sigma_T;
    VelocityField v_T;
    Trace psi_T;
    Trace psi1_T;
};

// q_T = nu div v_T + rho sigma_T with the staggered divergence
Field terminal_flux(const TerminalData& td, const ModelParams& p, const Grid& g);

struct CompatReport {
    double normal_top = 0.0;     // (v_T)_2 - psi_T on the top wall
    double normal_bottom = 0.0;  // (v_T)_2 on the bottom wall
    double curl_walls = 0.0;     // curl v_T on both walls
    double flux_top = 0.0;       // d_z q_T + rho (psi1_T + u d_x psi_T) on the top wall
    double flux_bottom = 0.0;    // d_z q_T on the bottom wall
    double tol = 0.0;
    bool pass = false;
};

// Default tolerance 10 (dz^2 + dt), residuals relative to the largest data magnitude.
double default_compat_tol(const Grid& g);
CompatReport check_compat(const TerminalData& td, const ModelParams& p, const Grid& g, double tol = -1.0);
// flux conditions only, for data given directly in the reduced unknowns
CompatReport check_compat_reduced(const Field& sigma_T, const Field& q_T, const Trace& psi_T, const Trace& psi1_T,
                                  const ModelParams& p, const Grid& g, double tol = -1.0);

enum class SolveMode { monolithic, fixed_point };

struct FixedPointOptions {
    double window = 0.0;  // 0 means T / 20
    double tol = 1e-10;   // relative increment that ends the iteration on a window
    int max_iter = 200;
};

struct FixedPointReport {
    double window = 0.0;
    int windows = 0;
    std::vector<int> iterations;       // per window
    std::vector<double> window_ratio;  // largest increment ratio per window
    double max_ratio = 0.0;
    bool converged = true;
};

struct AdjointTrajectory {
    Trajectory<Field> sigma;
    Trajectory<Field> q;
    Trajectory<Trace> psi;
    Trajectory<Trace> psi_t;
    Trajectory<VelocityField> v;  // empty until recovered
    bool has_v = false;
    FixedPointReport fixed_point;
};

// Backward Crank-Nicolson solve of the (sigma, q, psi) system. The monolithic mode
// solves the coupled step exactly per x-mode; the fixed-point mode iterates the
// window map (sigma^, psi^) -> q -> (sigma, psi) on windows of length T0.
AdjointTrajectory solve_sigma_q_psi(const Field& sigma_T, const Field& q_T, const Trace& psi_T, const Trace& psi1_T,
                                    SolveMode mode, const ModelParams& p, const Grid& g,
                                    const FixedPointOptions& opt = {});
AdjointTrajectory solve_sigma_q_psi(const TerminalData& td, SolveMode mode, const ModelParams& p, const Grid& g,
                                    const FixedPointOptions& opt = {});

// Backward Crank-Nicolson solve of the velocity equation driven by sigma and psi.
void recover_v(AdjointTrajectory& traj, const VelocityField& v_T, const ModelParams& p, const Grid& g);

// monolithic solve followed by velocity recovery
AdjointTrajectory solve_adjoint_full(const TerminalData& td, const ModelParams& p, const Grid& g);

struct StructuralReport {
    double flux_identity = 0.0;   // max |q - nu div v - rho sigma| / max |q|
    double trace_identity = 0.0;  // top-wall flux implied by the velocity vs -rho (psi_t + u psi_x)
};
StructuralReport structural_residuals(const AdjointTrajectory& traj, const ModelParams& p, const Grid& g);

// Backward solve of -rho (w_t + u w_x) - mu Laplace w = 0, w = 0 on both walls, on the half nodes.
Trajectory<Field> solve_curl(const Field& w_T, const ModelParams& p, const Grid& g);
// relative space-time difference between solve_curl(curl v_T) and the curl of the recovered v
double curl_cross_check(const AdjointTrajectory& traj, const ModelParams& p, const Grid& g);

// Per x-mode solve of div v = div0 (nodes), curl v = curl0 (half nodes), v2 = psi0 on top, 0 at the
// bottom, curl v = 0 on the walls. The mean of the zero mode of v1 is fixed to zero.
// Throws InvariantError when the zero mode violates int div0 = mean psi0 beyond `tol` (relative).
VelocityField elliptic_recover_v0(const Field& div0, const Field& curl0, const Trace& psi0, const Grid& g,
                                  double tol = -1.0);

// H2 norm of q(., T - eps) for each eps (nearest time node)
std::vector<double> smoothing_check(const AdjointTrajectory& traj, const std::vector<double>& eps, const Grid& g);

struct AuditReport {
    std::vector<std::pair<std::string, double>> residuals;  // relative discrete L2 residual per equation
    double wellposed_lhs = 0.0;
    double wellposed_rhs = 0.0;
    double get(const std::string& name) const;
    double wellposed_quotient() const { return wellposed_lhs / wellposed_rhs; }
};
// Residuals of every equation of the velocity form, evaluated with node-based centred
// differences independent of the solver, plus the solution/data norm quotient.
AuditReport audit_adjoint(const AdjointTrajectory& traj, const TerminalData& td, const ModelParams& p,
                          const Grid& g);

struct RandomDataSpec {
    unsigned seed = 1;
    int modes_x = 4;
    int modes_z = 1;
    double decay = 2.0;  // coefficients scale like (1 + m^2 + l^2)^(-decay/2)
    double amplitude = 1.0;
};

// Smooth random terminal data satisfying every compatibility condition by construction:
// v_T is the gradient of a potential with the wall normal derivatives 0 / psi_T plus a
// rotational part from a stream function vanishing on the walls, and psi1_T is chosen
// from the top-wall flux condition. Coefficients depend on (seed, mode) only,
// so the same function is sampled on every grid.
TerminalData random_compatible_data(const RandomDataSpec& spec, const ModelParams& p, const Grid& g);

}  // namespace fsiobs
