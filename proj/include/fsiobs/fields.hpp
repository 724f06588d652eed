#pragma once

#include "fsiobs/params.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace fsiobs {

using cplx = std::complex<double>;

// rows index x (fastest in memory), columns index z nodes
using Field = Eigen::MatrixXd;
// function on T_L x {0} or T_L x {1}
using Trace = Eigen::VectorXd;
// rows index the non-negative x-modes 0..nx/2, columns index z
using Spectrum = Eigen::MatrixXcd;

template <typename T>
struct Trajectory {
    std::vector<double> t;
    std::vector<T> snap;

    std::size_t size() const { return snap.size(); }
    const T& operator[](std::size_t n) const { return snap[n]; }
    T& operator[](std::size_t n) { return snap[n]; }
};

template <typename T>
Trajectory<T> make_trajectory(const Grid& g, const T& fill)
{
    Trajectory<T> tr;
    tr.t.resize(g.nt + 1);
    tr.snap.assign(g.nt + 1, fill);
    for (int n = 0; n <= g.nt; ++n) tr.t[n] = g.t(n);
    return tr;
}

enum class Axis { x, z };
enum class Space { L2, H1, H2, H3 };
enum class Wall { bottom, top };
enum class Direction { forward, backward };

Field zero_field(const Grid& g);
Trace zero_trace(const Grid& g);

// Fourier transform in x, coefficients c_m = (1/nx) sum_i f_i exp(-i k_m (x_i - x_0))
Spectrum fourier_x(const Field& f);
Field inverse_fourier_x(const Spectrum& c, int nx);
Eigen::VectorXcd fourier_trace(const Trace& f);
Trace inverse_fourier_trace(const Eigen::VectorXcd& c, int nx);

// symbol of d^p/dx^p for mode m; odd orders vanish on the Nyquist mode
cplx dx_symbol(const Grid& g, int m, int order);

Field diff(const Field& f, const Grid& g, Axis axis, int order);
Trace diff_trace(const Trace& f, const Grid& g, int order);

// trapezoid weights in z (dz/2 at walls, dz inside)
Eigen::VectorXd z_weights(const Grid& g);

double inner(const Field& f, const Field& h, const Grid& g);
double norm(const Field& f, const Grid& g, Space s);
double norm(const Trace& f, const Grid& g, Space s);
// space-time norm: L2 in time (trapezoid) of the spatial norm
double norm(const Trajectory<Field>& f, const Grid& g, Space s);
double norm(const Trajectory<Trace>& f, const Grid& g, Space s);

Trace trace(const Field& f, Wall w);

bool all_finite(const Field& f);

void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);
void write_trajectory(const std::string& path, const Trajectory<Field>& tr);
// times are reconstructed as n * T / nt
Trajectory<Field> read_trajectory(const std::string& path, double T);

}  // namespace fsiobs
