#pragma once

#include "fsiobs/coupled.hpp"
#include "fsiobs/weights.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fsiobs {

struct ObsSampleSpec {
    unsigned seed = 1;
    int n_samples = 50;
    double decay = 2.0;  // mode-decay exponent of the random terminal data, >= 2
    int modes_x = 4;
    int modes_z = 1;
    int nx = 32, nz = 17, nt = 200;
    CarlemanParams cp;
    ModelParams params;

    void validate() const;
    Grid grid() const { return make_grid(params, nx, nz, nt); }
    RandomDataSpec data_spec(int sample) const;
};

// Both sides of the observability inequality for one adjoint trajectory.
//   lhs = |sigma(0)|_H1 + |v(0)|_H2 + |(psi, psi_t)(0)|_{H3 x H1}
//   rhs = |psi|_{L2(omega_1 x (0,T))} + |v|_{L2 H2(omega)} + |v|_{H1 H1(omega)} + |sigma|_{L2 H1(omega)}
struct ObsNorms {
    double sigma0 = 0.0, v0 = 0.0, beam0 = 0.0;
    double psi_obs = 0.0, v_l2h2 = 0.0, v_h1h1 = 0.0, sigma_obs = 0.0;
    double lhs() const { return sigma0 + v0 + beam0; }
    double rhs() const { return psi_obs + v_l2h2 + v_h1h1 + sigma_obs; }
};
ObsNorms observability_norms(const AdjointTrajectory& traj, const ModelParams& p, const Grid& g);

struct ObsSample {
    unsigned seed = 0;
    ObsNorms norms;
    double data_scale = 0.0;
    double quotient = 0.0;
    bool counted = false;  // false when rhs is below the floor
};

struct ObsReport {
    std::vector<ObsSample> samples;
    double max_quotient = 0.0;
    double median_quotient = 0.0;
    int counted = 0;
};

// rhs floor relative to the terminal data norm
constexpr double kObsFloor = 1e-12;

ObsSample observability_sample(const TerminalData& td, const ModelParams& p, const Grid& g);
ObsReport observability_report(const ObsSampleSpec& spec);
// |max_fine / max_coarse - 1|
double refinement_delta(const ObsReport& coarse, const ObsReport& fine);

// Minimum of the quadratic observation/lhs ratio over the span of `basis_size` random compatible
// terminal data, computed exactly by a generalized symmetric eigenproblem on the Gram matrices.
struct UcResult {
    double ratio = 0.0;  // sqrt(min rhs^2 / lhs^2)
    double max_ratio = 0.0;
    Eigen::VectorXd coefficients;
    TerminalData minimizer;
    int basis_size = 0;
    double conditioning = 0.0;  // largest / smallest eigenvalue of the lhs Gram matrix
};
UcResult uc_extremal_search(const ObsSampleSpec& spec, int basis_size);
// same search on explicitly given data; throws when the data span no nonzero lhs
UcResult uc_extremal_search(const std::vector<TerminalData>& basis, const ModelParams& p, const Grid& g);

struct AssemblyEntry {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double quotient() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

struct AssemblyReport {
    std::vector<AssemblyEntry> entries;
    bool ordering_2t0 = false;  // quotient at t = 2 T0 does not exceed the one at t = 0
    const AssemblyEntry& get(const std::string& name) const;
};

// Evaluates both sides of each estimate of the observability chain on a solved adjoint
// trajectory with recovered velocity, using the shared Carleman weights.
AssemblyReport assembly_check(const AdjointTrajectory& traj, const EtaProfile& eta, const CarlemanParams& cp,
                              const ModelParams& p, const Grid& g);

}  // namespace fsiobs
