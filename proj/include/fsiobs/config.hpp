#pragma once

#include "fsiobs/params.hpp"
#include "fsiobs/weights.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fsiobs {

// Raised for malformed or invalid configuration; the message carries the location or the violated rule.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ModelParams params;
    int nx = 64, nz = 33, nt = 300;
    CarlemanParams cp;
    unsigned seed = 1;
    std::string output_dir = "fsiobs_out";

    // observability and unique continuation
    int n_samples = 50;
    double decay = 2.0;
    int modes_x = 4;
    int modes_z = 1;
    int basis_size = 8;
    bool refine = false;  // also run at doubled resolution and report the change

    // HUM
    double hum_tol = 1e-8;
    int hum_max_iter = 500;

    // adjoint solve
    bool fixed_point = false;
    double window = 0.0;  // fixed-point window, 0 means T / 20
    bool audit = false;
    bool dump = false;  // write trajectory snapshots next to the reports

    // numeric keys given as ranges or lists, in file order; expanded by runs()
    std::vector<std::pair<std::string, std::vector<double>>> sweeps;

    // Cartesian product over the sweeps, each run validated; a config without sweeps yields itself
    std::vector<RunConfig> runs() const;
    // re-checks every invariant, throwing ConfigError with the violated rule
    void validate() const;
};

// Flat `key = value` lines, `#` starts a comment. A numeric value may be a sweep:
// `a:r:b` is the geometric range a, a r, a r^2, ... up to b, and `v1, v2, ...` is a list.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig parse_config(const std::string& path);
// applies one `key=value` override on top of an existing config
void apply_override(RunConfig& cfg, const std::string& assignment);

// every key the parser accepts
std::vector<std::string> config_keys();

}  // namespace fsiobs
