#include "fsiobs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace fsiobs {

namespace {

enum class Kind { real, integer, boolean, text };

struct KeySpec {
    Kind kind;
    std::function<void(RunConfig&, double)> set_number;
    std::function<void(RunConfig&, const std::string&)> set_text;
};

template <typename M>
KeySpec real_key(M RunConfig::*m)
{
    return {Kind::real, [m](RunConfig& c, double v) { c.*m = v; }, nullptr};
}
template <typename M>
KeySpec int_key(M RunConfig::*m)
{
    return {Kind::integer, [m](RunConfig& c, double v) { c.*m = static_cast<M>(v); }, nullptr};
}
KeySpec param_key(double ModelParams::*m)
{
    return {Kind::real, [m](RunConfig& c, double v) { c.params.*m = v; }, nullptr};
}
KeySpec bool_key(bool RunConfig::*m)
{
    return {Kind::boolean, nullptr, [m](RunConfig& c, const std::string& v) {
                if (v == "true" || v == "1" || v == "yes") c.*m = true;
                else if (v == "false" || v == "0" || v == "no") c.*m = false;
                else throw ConfigError("expected true or false, got '" + v + "'");
            }};
}

const std::vector<std::pair<std::string, KeySpec>>& key_table()
{
    static const std::vector<std::pair<std::string, KeySpec>> table = {
        {"rho_bar", param_key(&ModelParams::rho_bar)},
        {"u_bar1", param_key(&ModelParams::u_bar1)},
        {"mu", param_key(&ModelParams::mu)},
        {"mu_prime", param_key(&ModelParams::mu_prime)},
        {"a", param_key(&ModelParams::a)},
        {"gamma", param_key(&ModelParams::gamma)},
        {"d", param_key(&ModelParams::d)},
        {"T", param_key(&ModelParams::T)},
        {"T0", param_key(&ModelParams::T0)},
        {"T1", param_key(&ModelParams::T1)},
        {"nx", int_key(&RunConfig::nx)},
        {"nz", int_key(&RunConfig::nz)},
        {"nt", int_key(&RunConfig::nt)},
        {"s", {Kind::real, [](RunConfig& c, double v) { c.cp.s = v; }, nullptr}},
        {"lambda", {Kind::real, [](RunConfig& c, double v) { c.cp.lambda = v; }, nullptr}},
        {"seed", int_key(&RunConfig::seed)},
        {"output_dir", {Kind::text, nullptr, [](RunConfig& c, const std::string& v) { c.output_dir = v; }}},
        {"n_samples", int_key(&RunConfig::n_samples)},
        {"decay", real_key(&RunConfig::decay)},
        {"modes_x", int_key(&RunConfig::modes_x)},
        {"modes_z", int_key(&RunConfig::modes_z)},
        {"basis_size", int_key(&RunConfig::basis_size)},
        {"refine", bool_key(&RunConfig::refine)},
        {"hum_tol", real_key(&RunConfig::hum_tol)},
        {"hum_max_iter", int_key(&RunConfig::hum_max_iter)},
        {"fixed_point", bool_key(&RunConfig::fixed_point)},
        {"window", real_key(&RunConfig::window)},
        {"audit", bool_key(&RunConfig::audit)},
        {"dump", bool_key(&RunConfig::dump)},
    };
    return table;
}

const KeySpec* find_key(const std::string& k)
{
    for (const auto& [name, spec] : key_table())
        if (name == k) return &spec;
    return nullptr;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s)
{
    const std::string t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        throw ConfigError("not a number: '" + t + "'");
    return v;
}

std::vector<double> parse_values(const std::string& v)
{
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(v);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("a range needs the form start:ratio:stop, got '" + v + "'");
        const double a = parse_number(parts[0]), r = parse_number(parts[1]), b = parse_number(parts[2]);
        if (!(a > 0.0) || !(r > 1.0) || b < a)
            throw ConfigError("a range start:ratio:stop needs start > 0, ratio > 1 and stop >= start");
        for (double x = a; x <= b * (1.0 + 1e-12); x *= r) {
            out.push_back(x);
            if (out.size() > 10000) throw ConfigError("range '" + v + "' is too long");
        }
    } else if (v.find(',') != std::string::npos) {
        std::stringstream ss(v);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_number(p));
    } else {
        out.push_back(parse_number(v));
    }
    return out;
}

void check_integer(const std::string& key, double v)
{
    if (v != std::floor(v) || v < 0.0 || v > 2e9)
        throw ConfigError("key '" + key + "' needs a non-negative integer value");
}

void assign(RunConfig& cfg, const std::string& key, const std::string& value)
{
    const KeySpec* ks = find_key(key);
    if (!ks) throw ConfigError("unknown key '" + key + "'");
    if (ks->kind == Kind::text || ks->kind == Kind::boolean) {
        ks->set_text(cfg, value);
        return;
    }
    const std::vector<double> vals = parse_values(value);
    if (vals.empty()) throw ConfigError("key '" + key + "' has an empty sweep");
    for (double v : vals)
        if (ks->kind == Kind::integer) check_integer(key, v);
    std::erase_if(cfg.sweeps, [&](const auto& s) { return s.first == key; });
    ks->set_number(cfg, vals.front());
    if (vals.size() > 1) cfg.sweeps.emplace_back(key, vals);
}

}  // namespace

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& kv : key_table()) out.push_back(kv.first);
    return out;
}

void RunConfig::validate() const
{
    auto fail = [](const std::string& what) { throw ConfigError("invalid configuration: " + what); };
    try {
        make_grid(params, nx, nz, nt);
        cp.validate();
    } catch (const InvariantError& e) {
        fail(e.what());
    }
    if (n_samples < 1) fail("n_samples must be at least 1");
    if (decay < 2.0) fail("decay must be at least 2");
    if (modes_x < 1 || modes_z < 1) fail("modes_x and modes_z must be at least 1");
    if (basis_size < 1) fail("basis_size must be at least 1");
    if (!(hum_tol > 0.0)) fail("hum_tol must be positive");
    if (hum_max_iter < 1) fail("hum_max_iter must be at least 1");
    if (window < 0.0) fail("window must be non-negative");
    if (output_dir.empty()) fail("output_dir must not be empty");
}

std::vector<RunConfig> RunConfig::runs() const
{
    RunConfig base = *this;
    base.sweeps.clear();
    std::vector<RunConfig> out{base};
    for (const auto& [key, vals] : sweeps) {
        const KeySpec* ks = find_key(key);
        std::vector<RunConfig> next;
        for (const auto& r : out)
            for (double v : vals) {
                RunConfig c = r;
                ks->set_number(c, v);
                next.push_back(c);
            }
        out = std::move(next);
    }
    for (const auto& r : out) r.validate();
    return out;
}

RunConfig parse_config_text(const std::string& text, const std::string& source)
{
    RunConfig cfg;
    std::vector<std::string> seen;
    std::stringstream in(text);
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "missing key");
        if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError(where + "duplicate key '" + key + "'");
        seen.push_back(key);
        try {
            assign(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    cfg.runs();
    return cfg;
}

RunConfig parse_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' needs the form key=value");
    try {
        assign(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    } catch (const ConfigError& e) {
        throw ConfigError("override '" + assignment + "': " + e.what());
    }
}

}  // namespace fsiobs
