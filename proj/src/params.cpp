#include "fsiobs/params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fsiobs {

double ModelParams::P_prime() const { return a * gamma * std::pow(rho_bar, gamma - 1.0); }

void ModelParams::validate() const
{
    auto fail = [](const std::string& what) { throw InvariantError(what); };
    if (!(rho_bar > 0)) fail("rho_bar must be positive");
    if (!(u_bar1 > 0)) fail("u_bar1 must be positive");
    if (!(mu > 0)) fail("mu must be positive");
    if (!(mu_prime + 2.0 * mu > 0)) fail("mu_prime + 2 mu must be positive");
    if (!(a > 0)) fail("pressure coefficient a must be positive");
    if (!(gamma > 1)) fail("gamma must exceed 1");
    if (!(d > 0)) fail("channel length d must be positive");
    if (!(T > 0)) fail("time horizon T must be positive");
    if (!(T > d / u_bar1)) fail("horizon too short: T must exceed d/u_bar1 (observability time)");
    if (!(T0 > 0) || !(T1 > 0)) fail("ramp times T0, T1 must be positive");
    if (!(2.0 * T0 + 2.0 * T1 < T - d / u_bar1))
        fail("ramp times too long: 2 T0 + 2 T1 must be below T - d/u_bar1");
    if (!(2.0 * T0 < 1.0) || !(2.0 * T1 < 1.0))
        fail("ramp times too long: 2 T0 and 2 T1 must stay below 1 so the time weight ramps down to 1");
}

double Grid::wavenumber(int m) const { return 2.0 * std::numbers::pi * m / torus_len; }

Grid make_grid(const ModelParams& params, int nx, int nz, int nt)
{
    params.validate();
    if (nx <= 0 || nz <= 0 || nt <= 0) throw InvariantError("grid counts must be positive");
    if (nx % 2 != 0) throw InvariantError("nx must be even");
    if (nx < 8) throw InvariantError("nx must be at least 8");
    if (nz < 5) throw InvariantError("nz must be at least 5");
    if (nt < 2) throw InvariantError("nt must be at least 2");
    Grid g;
    g.nx = nx;
    g.nz = nz;
    g.nt = nt;
    g.torus_len = params.torus_len();
    g.x_left = -params.L();
    g.d = params.d;
    g.dx = g.torus_len / nx;
    g.dz = 1.0 / (nz - 1);
    g.T = params.T;
    g.dt = params.T / nt;
    return g;
}

static double wrap_impl(double x, double left, double len)
{
    double y = std::fmod(x - left, len);
    if (y < 0) y += len;
    if (y >= len) y -= len;
    return left + y;
}

double wrap_x(const Grid& g, double x) { return wrap_impl(x, g.x_left, g.torus_len); }
double wrap_x(const ModelParams& p, double x) { return wrap_impl(x, -p.L(), p.torus_len()); }

static bool omega_impl(double y, double d) { return y < 0.0 || y > d; }

bool in_omega(const ModelParams& p, double x) { return omega_impl(wrap_x(p, x), p.d); }
bool in_omega(const Grid& g, double x) { return omega_impl(wrap_x(g, x), g.d); }

Eigen::VectorXd omega_indicator(const Grid& g)
{
    Eigen::VectorXd chi(g.nx);
    for (int i = 0; i < g.nx; ++i) chi(i) = in_omega(g, g.x(i)) ? 1.0 : 0.0;
    return chi;
}

}  // namespace fsiobs
