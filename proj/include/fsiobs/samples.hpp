#pragma once

#include "fsiobs/fields.hpp"
#include "fsiobs/params.hpp"

namespace fsiobs {

// Smooth seeded field: cosine series in x and z with coefficients decaying like 1 / (1 + m^2 + l^2).
Field smooth_random_field(const Grid& g, unsigned seed, int modes_x = 4, int modes_z = 3);
Trace smooth_random_trace(const Grid& g, unsigned seed, int modes_x = 4);

// C-infinity bump in time supported in (t0, t1), equal to 1 at the midpoint
double smooth_pulse(double t, double t0, double t1);

// smooth_random_field(seed) modulated by a pulse supported in (2 T0, T - 2 T1)
Trajectory<Field> pulse_source(const ModelParams& p, const Grid& g, unsigned seed);

}  // namespace fsiobs
