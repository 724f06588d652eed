#pragma once

#include "fsiobs/fields.hpp"
#include "fsiobs/weights.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fsiobs {

// Backward: -sigma_t - u sigma_x + a sigma = f4, sigma(T) = data.
// Forward:   sigma_t + u sigma_x + a sigma = f4, sigma(0) = data.
// `reaction` is a: P'(rho)/nu for the standalone equation, P'(rho) rho/nu inside the coupled system.
struct TransportProblem {
    Field data;
    Trajectory<Field> f4;  // empty means zero
    double reaction = 0.0;
    Direction direction = Direction::backward;
};

// The reaction coefficients used by the standalone and coupled forms.
double standalone_reaction(const ModelParams& p);
double coupled_reaction(const ModelParams& p);

// Exact per-mode integration: phase shift for the advection, integrating factor for the
// reaction, trapezoidal rule for the source. z is a passive parameter.
Trajectory<Field> solve_transport(const TransportProblem& tp, const ModelParams& p, const Grid& g);

// Forward equation integrated backward from sigma(T) = 0 (the second half of the gluing).
Trajectory<Field> solve_transport_from_final(const Trajectory<Field>& f4, double reaction, const ModelParams& p,
                                             const Grid& g);

// Cutoff of the gluing construction: chi(x,t) = N(x - u t, t) / N(x - u t, T) with
// N(y,t) = int_0^t beta(y + u s) ds, where beta vanishes on a neighbourhood of [0,d].
// chi(.,0) = 0, chi(.,T) = 1 and (d_t + u d_x) chi = beta(x) / N(x - u t, T) vanishes outside omega.
class GlueCutoff {
public:
    GlueCutoff(const ModelParams& p);
    double beta(double x) const;
    double chi(double x, double t) const;
    double transport_derivative(double x, double t) const;  // (d_t + u d_x) chi
    double min_occupation() const { return min_occupation_; }
    double inner_margin() const { return margin_; }

private:
    double occupation(double y, double t) const;  // N(y,t)

    ModelParams p_;
    double margin_, width_, min_occupation_;
};

struct GlueResult {
    Trajectory<Field> sigma;    // glued controlled trajectory
    Trajectory<Field> control;  // v, supported in omega
    Trajectory<Field> sigma_forward;
    Trajectory<Field> sigma_backward;
    double endpoint_residual = 0.0;  // max(||sigma(0)||, ||sigma(T)||) / max_t ||sigma(t)||
    double outside_ratio = 0.0;      // max |v| outside omega / max |v|
    double reproduction_error = 0.0; // forward solve with f4 + v from 0 vs sigma, relative space-time
    double reproduced_final = 0.0;   // ||forward solve at T|| / max_t ||sigma(t)||
    bool pass = false;
};

GlueResult transport_glue_control(const Trajectory<Field>& f4_tilde, double reaction, const ModelParams& p,
                                  const Grid& g);

struct TransportFunctionals {
    std::vector<std::pair<std::string, double>> values;
    double get(const std::string& name) const;
    // obs:   sigma / (f4 + sigma_obs)
    // grad:  grad sigma / (grad f4 + grad sigma_obs)
    // dt:    dt sigma / (grad f4 + f4 + sigma_obs + grad sigma_obs)
    // linf:  sup-in-time sigma / (f4 + s lambda sigma_obs)
    double quotient(const std::string& which) const;
};

TransportFunctionals transport_obs_functionals(const Trajectory<Field>& sigma, const Trajectory<Field>& f4,
                                               double reaction, const WeightTable& wt, const ModelParams& p,
                                               const Grid& g);

}  // namespace fsiobs
