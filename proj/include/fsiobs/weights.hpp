#pragma once

#include "fsiobs/params.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace fsiobs {

// Polynomial on [0,1] stored by ascending coefficients.
struct Poly {
    std::vector<double> c;
    double eval(double u, int order = 0) const;
    Poly integral() const;
};

// Generalized smoothstep of order n: degree 2n+1, S(0)=0, S(1)=1, first n derivatives vanish at both ends.
Poly smoothstep(int n);
// order-th derivative of a smoothstep, mirrored near u = 1 so the flat end stays exact
double smoothstep_eval(const Poly& S, double u, int order = 0);

struct CarlemanParams {
    double s = 4.0;
    double lambda = 8.0;
    void validate() const;
};

// Spatial profile on the torus: a max plateau and a min plateau inside the two
// allowed critical zones, joined by a strictly decreasing arc through the channel
// and a strictly increasing arc through the far side.
class EtaProfile {
public:
    EtaProfile(const ModelParams& params, double eta_max, double eta_min);

    // k-th derivative at y, k in 0..6
    double eval(double y, int k = 0) const;
    double max_value() const { return eta_max_; }
    double min_value() const { return eta_min_; }
    double core_slope() const { return slope_; }
    // allowed critical zones (open intervals in torus coordinates)
    std::array<std::pair<double, double>, 2> allowed_zones() const;
    const ModelParams& params() const { return params_; }

private:
    double wrap(double y) const;

    ModelParams params_;
    double eta_max_, eta_min_, slope_, tau_, width_;
    Poly s6_, s6_int_;
};

EtaProfile build_eta(const ModelParams& params);
EtaProfile build_eta(const ModelParams& params, double eta_max, double eta_min);

// Time weight: 1/t^2 near 0, 1 on [2T0, T-2T1], 1/(T-t)^2 near T, C^4 smoothstep blends in between.
// `side` picks the branch used at a joint: -1 left, +1 right, 0 automatic.
double theta(const ModelParams& p, double t, int order = 0, int side = 0);
std::vector<double> theta_joints(const ModelParams& p);

struct WeightValues {
    double theta = 0.0;
    double eta0 = 0.0;
    double phi = 0.0;
    double xi = 0.0;
    // [t-order][x-order], defined for t-order <= 2 and t-order + x-order <= 4
    double dphi[3][5] = {};
    double dxi[3][5] = {};
};

// Evaluates all weights and derivatives at (x,t). Endpoints t=0 and t=T give +inf
// markers only when allow_endpoints is set; t outside [0,T] is an error.
WeightValues eval_weights(const EtaProfile& eta, const CarlemanParams& cp, const ModelParams& p, double x,
                          double t, bool allow_endpoints = false);

// Reference level of phi (its minimum over the cylinder); exp(-2 s (phi - phi_ref)) <= 1.
double phi_reference(const EtaProfile& eta, const CarlemanParams& cp);

// max |(d_t + u_bar1 d_x) eta0| with analytic derivatives; `traveling=false`
// evaluates the frozen profile eta(x) as a negative control.
double transport_identity_residual(const EtaProfile& eta, const ModelParams& p, const Grid& g,
                                   bool traveling = true);

struct BoundEntry {
    std::string name;
    double empirical_C = 0.0;
    bool has_margin = false;
    double margin = 0.0;
    bool pass = false;
};

struct BoundReport {
    std::vector<BoundEntry> entries;
    double identity_residual = 0.0;    // max relative |phi + xi - theta e^{6 lambda M}|
    double transport_residual = 0.0;
    double lambda_star = 0.0;          // smallest sampled lambda from which positivity holds up to 32
    bool lambda_star_found = false;
    bool pass = false;
};

BoundReport verify_bounds(const EtaProfile& eta, const CarlemanParams& cp, const ModelParams& p, const Grid& g,
                          double c_margin = 0.0, int samples = 256);

// Weights sampled at (x_i, t_n). Endpoint slices carry w = 0 and xi = 1.
struct WeightTable {
    int nx = 0;
    int nt = 0;
    Eigen::MatrixXd w;   // exp(-2 s (phi - phi_ref)), nx x (nt+1)
    Eigen::MatrixXd xi;  // nx x (nt+1)
    Eigen::MatrixXd phi_x;
    CarlemanParams cp;
    double phi_ref = 0.0;
};

WeightTable make_weight_table(const EtaProfile& eta, const CarlemanParams& cp, const ModelParams& p,
                              const Grid& g);
// Same quantities at the interval midpoints t_{n+1/2}, n = 0..nt-1 (nt columns, none singular).
WeightTable make_midpoint_weight_table(const EtaProfile& eta, const CarlemanParams& cp, const ModelParams& p,
                                       const Grid& g);

}  // namespace fsiobs
