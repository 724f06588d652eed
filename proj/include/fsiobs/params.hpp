#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace fsiobs {

// Raised when model or grid data violate a structural invariant.
struct InvariantError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ModelParams {
    double rho_bar = 1.0;
    double u_bar1 = 1.0;
    double mu = 0.5;
    double mu_prime = 0.0;
    double a = 1.0;
    double gamma = 1.4;
    double d = 1.0;
    double T = 1.5;
    double T0 = 0.1;
    double T1 = 0.1;

    double nu() const { return mu_prime + 2.0 * mu; }
    double P_prime() const;
    double L() const { return 3.0 * u_bar1 * T; }
    double torus_len() const { return d + 2.0 * L(); }

    void validate() const;
};

struct Grid {
    int nx = 0;
    int nz = 0;
    int nt = 0;
    double torus_len = 0.0;
    double x_left = 0.0;  // torus identified with [x_left, x_left + torus_len)
    double d = 0.0;
    double dx = 0.0;
    double dz = 0.0;
    double dt = 0.0;
    double T = 0.0;

    double x(int i) const { return x_left + (i + 0.5) * dx; }
    double z(int j) const { return j * dz; }
    double zh(int j) const { return (j + 0.5) * dz; }
    double t(int n) const { return n * dt; }
    int modes() const { return nx / 2 + 1; }
    int nyquist() const { return nx / 2; }
    double wavenumber(int m) const;

    bool same_shape(const Grid& o) const { return nx == o.nx && nz == o.nz && nt == o.nt; }
};

Grid make_grid(const ModelParams& params, int nx, int nz, int nt);

// x mapped into [x_left, x_left + torus_len)
double wrap_x(const Grid& g, double x);
double wrap_x(const ModelParams& p, double x);

// omega = ((-L,0) U (d, d+L]) on the torus, i.e. the complement of [0,d]
bool in_omega(const ModelParams& p, double x);
bool in_omega(const Grid& g, double x);

// 1 on cell centres inside omega, 0 elsewhere
Eigen::VectorXd omega_indicator(const Grid& g);

}  // namespace fsiobs
