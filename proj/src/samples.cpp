#include "fsiobs/samples.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fsiobs {

Field smooth_random_field(const Grid& g, unsigned seed, int modes_x, int modes_z)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const double pi = std::numbers::pi;
    Field f = zero_field(g);
    for (int m = 0; m <= modes_x; ++m)
        for (int l = 0; l <= modes_z; ++l) {
            const double a = n01(rng) / (1.0 + m * m + l * l), ph = n01(rng);
            const double k = 2.0 * pi * m / g.torus_len;
            for (int j = 0; j < g.nz; ++j)
                for (int i = 0; i < g.nx; ++i)
                    f(i, j) += a * std::cos(k * (g.x(i) - g.x_left) + ph) * std::cos(pi * l * g.z(j));
        }
    return f;
}

Trace smooth_random_trace(const Grid& g, unsigned seed, int modes_x)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Trace f = zero_trace(g);
    for (int m = 0; m <= modes_x; ++m) {
        const double a = n01(rng) / (1.0 + m * m), ph = n01(rng);
        const double k = 2.0 * std::numbers::pi * m / g.torus_len;
        for (int i = 0; i < g.nx; ++i) f(i) += a * std::cos(k * (g.x(i) - g.x_left) + ph);
    }
    return f;
}

double smooth_pulse(double t, double t0, double t1)
{
    if (t <= t0 || t >= t1) return 0.0;
    const double u = (t - t0) / (t1 - t0);
    return std::exp(-1.0 / (u * (1.0 - u)) + 4.0);
}

Trajectory<Field> pulse_source(const ModelParams& p, const Grid& g, unsigned seed)
{
    Trajectory<Field> f = make_trajectory(g, zero_field(g));
    const Field shape = smooth_random_field(g, seed);
    for (int n = 0; n <= g.nt; ++n) f[n] = smooth_pulse(g.t(n), 2.0 * p.T0, p.T - 2.0 * p.T1) * shape;
    return f;
}

}  // namespace fsiobs
