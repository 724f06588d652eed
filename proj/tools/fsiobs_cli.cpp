#include "fsiobs/beam.hpp"
#include "fsiobs/config.hpp"
#include "fsiobs/coupled.hpp"
#include "fsiobs/heat.hpp"
#include "fsiobs/obs.hpp"
#include "fsiobs/parallel.hpp"
#include "fsiobs/primal.hpp"
#include "fsiobs/samples.hpp"
#include "fsiobs/transport.hpp"
#include "fsiobs/weights.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace fsiobs;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

std::vector<std::string> nums(std::initializer_list<double> v)
{
    std::vector<std::string> out;
    for (double x : v) out.push_back(fmt(x));
    return out;
}

// Result of one run of a subcommand.
struct Outcome {
    json report = json::object();
    std::vector<std::string> failures;
    std::map<std::string, Table> tables;

    void require(bool ok, const std::string& what)
    {
        if (!ok) failures.push_back(what);
    }
};

struct Options {
    bool audit = false;
    bool fixed_point = false;
    bool dump = false;
    bool refine = false;
};

Grid grid_of(const RunConfig& c) { return make_grid(c.params, c.nx, c.nz, c.nt); }

RunConfig refined(const RunConfig& c)
{
    RunConfig f = c;
    f.nx *= 2;
    f.nz = 2 * (c.nz - 1) + 1;
    f.nt *= 2;
    return f;
}

json params_json(const RunConfig& c)
{
    const ModelParams& p = c.params;
    return {{"rho_bar", p.rho_bar}, {"u_bar1", p.u_bar1}, {"mu", p.mu},       {"mu_prime", p.mu_prime},
            {"a", p.a},             {"gamma", p.gamma},   {"d", p.d},         {"T", p.T},
            {"T0", p.T0},           {"T1", p.T1},         {"nx", c.nx},       {"nz", c.nz},
            {"nt", c.nt},           {"s", c.cp.s},        {"lambda", c.cp.lambda}, {"seed", c.seed}};
}

std::string dump_path(const RunConfig& c, const std::string& name)
{
    return (std::filesystem::path(c.output_dir) / name).string();
}

// ---- weights ----

Outcome weights_check(const RunConfig& c, const Options&)
{
    Outcome o;
    const Grid g = grid_of(c);
    const BoundReport br = verify_bounds(build_eta(c.params), c.cp, c.params, g);
    o.report["identity_residual"] = br.identity_residual;
    o.report["transport_residual"] = br.transport_residual;
    o.report["lambda_star_found"] = br.lambda_star_found;
    o.report["lambda_star"] = br.lambda_star;
    Table& t = o.tables["bounds"];
    t.header = {"name", "empirical_C", "has_margin", "margin", "pass"};
    for (const auto& e : br.entries) {
        t.add({e.name, fmt(e.empirical_C), e.has_margin ? "1" : "0", fmt(e.margin), e.pass ? "1" : "0"});
        o.require(e.pass, "weight bound '" + e.name + "' violated");
    }
    o.require(br.identity_residual < 1e-12, "weight identity residual above 1e-12");
    o.require(br.transport_residual < 1e-12, "traveling-profile transport residual above 1e-12");
    o.require(br.lambda_star_found, "no lambda up to 32 certifies the positivity bounds");
    o.require(br.pass, "weight certification failed");
    return o;
}

// ---- carleman functionals ----

struct Quot {
    double lhs, rhs;
    double q() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

Quot beam_quotient(const RunConfig& c)
{
    const Grid g = grid_of(c);
    const WeightTable wt = make_weight_table(build_eta(c.params), c.cp, c.params, g);
    Trajectory<Trace> f = make_trajectory(g, zero_trace(g));
    const Trace shape = smooth_random_trace(g, c.seed + 2);
    for (int n = 0; n <= g.nt; ++n) f[n] = smooth_pulse(g.t(n), 2.0 * c.params.T0, c.params.T - 2.0 * c.params.T1) * shape;
    const auto tr = solve_beam_adjoint(smooth_random_trace(g, c.seed), smooth_random_trace(g, c.seed + 1), f, g);
    const BeamCarleman b = beam_carleman_functionals(tr, f, wt, g);
    return {b.lhs, b.rhs_interior + b.rhs_obs};
}

std::pair<Quot, Quot> heat_quotients(const RunConfig& c)
{
    const Grid g = grid_of(c);
    const WeightTable wt = make_weight_table(build_eta(c.params), c.cp, c.params, g);
    HeatProblem hp;
    hp.data = smooth_random_field(g, c.seed);
    hp.capacity = c.params.rho_bar / c.params.nu();
    const auto q = solve_heat_neumann(hp, Direction::backward, g);
    const HeatCarleman a = heat_carleman_functionals(q, {}, {}, wt, g, HeatFamily::standard);
    const HeatCarleman b = heat_carleman_functionals(q, {}, {}, wt, g, HeatFamily::low_power);
    return {{a.lhs(), a.rhs()}, {b.lhs(), b.rhs()}};
}

TransportFunctionals transport_functionals(const RunConfig& c)
{
    const Grid g = grid_of(c);
    const WeightTable wt = make_weight_table(build_eta(c.params), c.cp, c.params, g);
    TransportProblem tp;
    tp.data = smooth_random_field(g, c.seed);
    tp.f4 = pulse_source(c.params, g, c.seed + 1);
    tp.reaction = standalone_reaction(c.params);
    const auto sigma = solve_transport(tp, c.params, g);
    return transport_obs_functionals(sigma, tp.f4, tp.reaction, wt, c.params, g);
}

void quotient_entry(Outcome& o, const std::string& name, Quot coarse, const Quot* fine)
{
    o.report[name] = {{"lhs", coarse.lhs}, {"rhs", coarse.rhs}, {"quotient", coarse.q()}};
    o.require(std::isfinite(coarse.q()) && coarse.rhs > 0.0, name + ": quotient not finite");
    std::vector<std::string> row{name, fmt(coarse.lhs), fmt(coarse.rhs), fmt(coarse.q())};
    if (fine) {
        const double delta = std::abs(fine->q() / coarse.q() - 1.0);
        o.report[name]["refined_quotient"] = fine->q();
        o.report[name]["refinement_delta"] = delta;
        o.require(delta < 0.2, name + ": quotient changes by more than 20% under refinement");
        row.push_back(fmt(fine->q()));
        row.push_back(fmt(delta));
    }
    Table& t = o.tables["quotients"];
    t.header = {"name", "lhs", "rhs", "quotient"};
    if (fine) {
        t.header.push_back("refined_quotient");
        t.header.push_back("refinement_delta");
    }
    t.add(row);
}

Outcome carleman_beam(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const Quot a = beam_quotient(c);
    Quot b{};
    if (opt.refine) b = beam_quotient(refined(c));
    quotient_entry(o, "beam", a, opt.refine ? &b : nullptr);
    return o;
}

Outcome carleman_heat(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const auto a = heat_quotients(c);
    std::pair<Quot, Quot> b{};
    if (opt.refine) b = heat_quotients(refined(c));
    quotient_entry(o, "heat_standard", a.first, opt.refine ? &b.first : nullptr);
    quotient_entry(o, "heat_low_power", a.second, opt.refine ? &b.second : nullptr);
    return o;
}

Outcome carleman_transport(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const TransportFunctionals a = transport_functionals(c);
    TransportFunctionals b;
    if (opt.refine) b = transport_functionals(refined(c));
    json vals = json::object();
    for (const auto& [k, v] : a.values) vals[k] = v;
    o.report["functionals"] = vals;
    Table& t = o.tables["quotients"];
    t.header = {"name", "quotient"};
    if (opt.refine) {
        t.header.push_back("refined_quotient");
        t.header.push_back("refinement_delta");
    }
    for (const std::string w : {"obs", "grad", "dt", "linf"}) {
        const double q = a.quotient(w);
        o.report["quotient_" + w] = q;
        o.require(std::isfinite(q) && q > 0.0, "transport quotient '" + w + "' not finite");
        std::vector<std::string> row{w, fmt(q)};
        if (opt.refine) {
            const double qf = b.quotient(w), delta = std::abs(qf / q - 1.0);
            o.report["refinement_delta_" + w] = delta;
            o.require(delta < 0.2, "transport quotient '" + w + "' changes by more than 20% under refinement");
            row.push_back(fmt(qf));
            row.push_back(fmt(delta));
        }
        t.add(row);
    }
    return o;
}

// ---- HUM and gluing ----

Outcome hum_run(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const Grid g = grid_of(c);
    const EtaProfile eta = build_eta(c.params);
    HeatProblem hp;
    hp.data = smooth_random_field(g, c.seed);
    hp.capacity = c.params.rho_bar / c.params.nu();
    const auto q = solve_heat_neumann(hp, Direction::backward, g);
    HumOptions ho;
    ho.cg_tol = c.hum_tol;
    ho.max_iter = c.hum_max_iter;
    const HumSolution s = hum_minimize(hum_source_from(q, make_weight_table(eta, c.cp, c.params, g), g), eta, c.cp,
                                       c.params, g, ho);
    o.report["cg_iters"] = s.cg_iters;
    o.report["converged"] = s.converged;
    o.report["J_min"] = s.J_min;
    o.report["controllability_residual"] = s.controllability_residual;
    o.report["consistency"] = s.consistency;
    o.report["control_estimate_quotient"] = s.inYH_quotient();
    Table& t = o.tables["cg"];
    t.header = {"iteration", "residual"};
    for (std::size_t k = 0; k < s.cg_residual_history.size(); ++k)
        t.add({std::to_string(k), fmt(s.cg_residual_history[k])});
    o.require(s.converged, "conjugate gradients did not converge");
    o.require(s.cg_iters <= c.hum_max_iter, "conjugate gradients exceeded the iteration cap");
    o.require(s.controllability_residual < 1e-6, "controlled state does not vanish at the final time");
    if (opt.dump) {
        write_trajectory(dump_path(c, "hum_control.fsiobs"), s.H);
        write_trajectory(dump_path(c, "hum_state.fsiobs"), s.Y);
    }
    return o;
}

Outcome transport_glue(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const Grid g = grid_of(c);
    const GlueResult r = transport_glue_control(pulse_source(c.params, g, c.seed), standalone_reaction(c.params), c.params, g);
    o.report["endpoint_residual"] = r.endpoint_residual;
    o.report["outside_ratio"] = r.outside_ratio;
    o.report["reproduction_error"] = r.reproduction_error;
    o.report["reproduced_final"] = r.reproduced_final;
    o.require(r.endpoint_residual < 1e-10, "glued trajectory does not vanish at both ends");
    o.require(r.outside_ratio < 1e-9, "control is not supported in the control region");
    o.require(r.pass, "gluing check failed");
    Table& t = o.tables["norms"];
    t.header = {"t", "sigma_max", "control_max"};
    for (int n = 0; n <= g.nt; ++n)
        t.add(nums({g.t(n), r.sigma[n].cwiseAbs().maxCoeff(), r.control[n].cwiseAbs().maxCoeff()}));
    if (opt.dump) {
        write_trajectory(dump_path(c, "glue_sigma.fsiobs"), r.sigma);
        write_trajectory(dump_path(c, "glue_control.fsiobs"), r.control);
    }
    return o;
}

// ---- adjoint and primal ----

RandomDataSpec data_spec(const RunConfig& c, unsigned offset = 0)
{
    RandomDataSpec s;
    s.seed = c.seed + offset;
    s.modes_x = c.modes_x;
    s.modes_z = c.modes_z;
    s.decay = c.decay;
    return s;
}

Outcome solve_adjoint(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const Grid g = grid_of(c);
    const TerminalData td = random_compatible_data(data_spec(c), c.params, g);
    const CompatReport cr = check_compat(td, c.params, g);
    o.report["compat"] = {{"normal_top", cr.normal_top},   {"normal_bottom", cr.normal_bottom},
                          {"curl_walls", cr.curl_walls},   {"flux_top", cr.flux_top},
                          {"flux_bottom", cr.flux_bottom}, {"tol", cr.tol},
                          {"pass", cr.pass}};
    o.require(cr.pass, "terminal data violate the compatibility conditions");
    FixedPointOptions fo;
    fo.window = c.window;
    const bool fp = c.fixed_point || opt.fixed_point;
    AdjointTrajectory tr =
        solve_sigma_q_psi(td, fp ? SolveMode::fixed_point : SolveMode::monolithic, c.params, g, fo);
    recover_v(tr, td.v_T, c.params, g);
    const StructuralReport sr = structural_residuals(tr, c.params, g);
    o.report["mode"] = fp ? "fixed_point" : "monolithic";
    o.report["flux_identity"] = sr.flux_identity;
    o.report["trace_identity"] = sr.trace_identity;
    o.report["curl_cross_check"] = curl_cross_check(tr, c.params, g);
    o.require(sr.flux_identity < 1e-6, "flux identity residual above 1e-6");
    o.require(sr.trace_identity < 1e-6, "top-wall trace identity residual above 1e-6");
    if (fp) {
        o.report["fixed_point"] = {{"window", tr.fixed_point.window},
                                   {"windows", tr.fixed_point.windows},
                                   {"max_ratio", tr.fixed_point.max_ratio},
                                   {"converged", tr.fixed_point.converged}};
        o.require(tr.fixed_point.converged && tr.fixed_point.max_ratio < 1.0, "fixed-point iteration does not contract");
        const AdjointTrajectory mono = solve_sigma_q_psi(td, SolveMode::monolithic, c.params, g);
        double e = 0.0, r = 0.0;
        for (int n = 0; n <= g.nt; ++n) {
            e = std::max(e, (tr.q[n] - mono.q[n]).cwiseAbs().maxCoeff());
            r = std::max(r, mono.q[n].cwiseAbs().maxCoeff());
        }
        o.report["fixed_point"]["monolithic_difference"] = r > 0.0 ? e / r : e;
        o.require((r > 0.0 ? e / r : e) < 1e-8, "fixed-point and monolithic solves disagree");
        Table& t = o.tables["fixed_point"];
        t.header = {"window", "iterations", "max_ratio"};
        for (std::size_t k = 0; k < tr.fixed_point.iterations.size(); ++k)
            t.add({std::to_string(k), std::to_string(tr.fixed_point.iterations[k]),
                   fmt(tr.fixed_point.window_ratio[k])});
    }
    Table& t = o.tables["norms"];
    t.header = {"t", "sigma_L2", "q_L2", "v1_L2", "psi_L2", "psi_t_L2"};
    for (int n = 0; n <= g.nt; ++n)
        t.add(nums({g.t(n), norm(tr.sigma[n], g, Space::L2), norm(tr.q[n], g, Space::L2),
                    norm(tr.v[n].v1, g, Space::L2), norm(tr.psi[n], g, Space::L2), norm(tr.psi_t[n], g, Space::L2)}));
    if (c.audit || opt.audit) {
        const AuditReport ar = audit_adjoint(tr, td, c.params, g);
        Table& a = o.tables["audit"];
        std::vector<std::string> row;
        for (const auto& [name, v] : ar.residuals) {
            a.header.push_back(name);
            row.push_back(fmt(v));
            o.report["audit"][name] = v;
        }
        a.header.push_back("wellposed_quotient");
        row.push_back(fmt(ar.wellposed_quotient()));
        a.add(row);
        o.report["audit"]["wellposed_quotient"] = ar.wellposed_quotient();
    }
    if (opt.dump || c.dump) {
        write_trajectory(dump_path(c, "adjoint_sigma.fsiobs"), tr.sigma);
        write_trajectory(dump_path(c, "adjoint_q.fsiobs"), tr.q);
    }
    return o;
}

Outcome solve_primal_cmd(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const Grid g = grid_of(c);
    const Controls ctrl = random_controls(c.seed + 1, g);
    const auto tr = solve_primal(random_primal_data(data_spec(c), c.params, g), ctrl, c.params, g);
    Table& t = o.tables["norms"];
    t.header = {"t", "sigma_L2", "u1_L2", "beta_L2", "beta_t_L2", "energy"};
    bool finite = true;
    for (int n = 0; n <= g.nt; ++n) {
        const double e = energy_terms(tr[n], c.params, g).energy;
        finite = finite && std::isfinite(e);
        t.add(nums({g.t(n), norm(tr[n].sigma, g, Space::L2), norm(tr[n].u.v1, g, Space::L2),
                    norm(tr[n].beta, g, Space::L2), norm(tr[n].beta_t, g, Space::L2), e}));
    }
    o.report["controls_supported"] = controls_supported(ctrl, g);
    o.report["final_energy"] = energy_terms(tr[g.nt], c.params, g).energy;
    o.require(finite, "primal solution is not finite");
    o.require(controls_supported(ctrl, g), "controls leak outside the control regions");
    if (opt.dump || c.dump) {
        Trajectory<Field> s = make_trajectory(g, zero_field(g));
        for (int n = 0; n <= g.nt; ++n) s[n] = tr[n].sigma;
        write_trajectory(dump_path(c, "primal_sigma.fsiobs"), s);
    }
    return o;
}

Outcome check_duality(const RunConfig& c, const Options&)
{
    Outcome o;
    const Grid g = grid_of(c);
    const Controls ctrl = random_controls(c.seed + 1, g);
    const auto primal = solve_primal(random_primal_data(data_spec(c), c.params, g), ctrl, c.params, g);
    const auto adj = solve_adjoint_full(random_compatible_data(data_spec(c, 1000), c.params, g), c.params, g);
    const DualityReport r = duality_residual(primal, adj, ctrl, c.params, g);
    o.report["control_term"] = r.control_term;
    o.report["terminal_pairing"] = r.terminal_pairing;
    o.report["initial_pairing"] = r.initial_pairing;
    o.report["residual"] = r.residual;
    o.require(r.residual < 1e-10, "duality residual above 1e-10");
    return o;
}

Outcome check_energy(const RunConfig& c, const Options&)
{
    Outcome o;
    const Grid g = grid_of(c);
    const auto tr = solve_primal(random_primal_data(data_spec(c), c.params, g), Controls{}, c.params, g);
    const EnergyReport r = energy_balance(tr, Controls{}, c.params, g);
    o.report["max_balance"] = r.max_balance;
    o.report["max_increase"] = r.max_increase;
    o.report["non_increasing"] = r.non_increasing;
    o.require(r.non_increasing, "energy increases without controls");
    Table& t = o.tables["energy"];
    t.header = {"t", "energy", "dissipation", "wall_work", "balance"};
    for (int n = 0; n <= g.nt; ++n)
        t.add(nums({g.t(n), r.energy[n], r.dissipation[n], r.wall_work[n], r.balance[n]}));
    return o;
}

// ---- observability ----

ObsSampleSpec obs_spec(const RunConfig& c)
{
    ObsSampleSpec s;
    s.seed = c.seed;
    s.n_samples = c.n_samples;
    s.decay = c.decay;
    s.modes_x = c.modes_x;
    s.modes_z = c.modes_z;
    s.nx = c.nx;
    s.nz = c.nz;
    s.nt = c.nt;
    s.cp = c.cp;
    s.params = c.params;
    return s;
}

Outcome observability_run(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const ObsReport r = observability_report(obs_spec(c));
    o.report["counted"] = r.counted;
    o.report["max_quotient"] = r.max_quotient;
    o.report["median_quotient"] = r.median_quotient;
    o.require(r.counted > 0, "no sample passed the rhs floor");
    o.require(std::isfinite(r.max_quotient), "observability quotient not finite");
    Table& t = o.tables["samples"];
    t.header = {"seed", "lhs", "rhs", "quotient", "counted", "sigma0", "v0", "beam0",
                "psi_obs", "v_l2h2", "v_h1h1", "sigma_obs"};
    for (const auto& s : r.samples) {
        const ObsNorms& n = s.norms;
        std::vector<std::string> row{std::to_string(s.seed), fmt(n.lhs()), fmt(n.rhs()), fmt(s.quotient),
                                     s.counted ? "1" : "0"};
        for (double v : {n.sigma0, n.v0, n.beam0, n.psi_obs, n.v_l2h2, n.v_h1h1, n.sigma_obs}) row.push_back(fmt(v));
        t.add(row);
    }
    if (opt.refine || c.refine) {
        const ObsReport f = observability_report(obs_spec(refined(c)));
        const double delta = refinement_delta(r, f);
        o.report["refined_max_quotient"] = f.max_quotient;
        o.report["refinement_delta"] = delta;
        o.require(delta < 0.2, "max observability quotient changes by more than 20% under refinement");
    }
    return o;
}

double omega_fraction(const TerminalData& td, const Grid& g)
{
    const Eigen::VectorXd chi = omega_indicator(g);
    double in = 0.0, all = 0.0;
    for (const Field* f : {&td.sigma_T, &td.v_T.v1, &td.v_T.v2})
        for (int i = 0; i < g.nx; ++i) {
            const double m = f->row(i).squaredNorm();
            all += m;
            in += chi(i) * m;
        }
    return all > 0.0 ? in / all : 0.0;
}

Outcome uc_search(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const UcResult r = uc_extremal_search(obs_spec(c), c.basis_size);
    o.report["ratio"] = r.ratio;
    o.report["max_ratio"] = r.max_ratio;
    o.report["basis_size"] = r.basis_size;
    o.report["conditioning"] = r.conditioning;
    o.report["minimizer_omega_fraction"] = omega_fraction(r.minimizer, grid_of(c));
    std::vector<double> coef(r.coefficients.data(), r.coefficients.data() + r.coefficients.size());
    o.report["coefficients"] = coef;
    o.require(r.ratio > 0.0, "minimized observation ratio is zero");
    Table& t = o.tables["coefficients"];
    t.header = {"basis", "coefficient"};
    for (std::size_t k = 0; k < coef.size(); ++k) t.add({std::to_string(k), fmt(coef[k])});
    if (opt.refine || c.refine) {
        const UcResult f = uc_extremal_search(obs_spec(refined(c)), c.basis_size);
        const double delta = std::abs(f.ratio / r.ratio - 1.0);
        o.report["refined_ratio"] = f.ratio;
        o.report["refinement_delta"] = delta;
        o.require(f.ratio > 0.0 && delta < 0.5, "minimized ratio changes by more than 50% under refinement");
    }
    if (opt.dump || c.dump) {
        write_field(dump_path(c, "uc_minimizer_sigma.fsiobs"), r.minimizer.sigma_T);
        write_field(dump_path(c, "uc_minimizer_v1.fsiobs"), r.minimizer.v_T.v1);
        write_field(dump_path(c, "uc_minimizer_v2.fsiobs"), r.minimizer.v_T.v2);
    }
    return o;
}

AssemblyReport assembly_of(const RunConfig& c)
{
    const Grid g = grid_of(c);
    const auto tr = solve_adjoint_full(random_compatible_data(data_spec(c), c.params, g), c.params, g);
    return assembly_check(tr, build_eta(c.params), c.cp, c.params, g);
}

Outcome assembly_check_cmd(const RunConfig& c, const Options& opt)
{
    Outcome o;
    const AssemblyReport r = assembly_of(c);
    AssemblyReport f;
    const bool refine = opt.refine || c.refine;
    if (refine) f = assembly_of(refined(c));
    o.report["ordering_2t0"] = r.ordering_2t0;
    o.require(r.ordering_2t0, "intermediate-time quotient exceeds the initial-time quotient");
    Table& t = o.tables["entries"];
    t.header = {"name", "lhs", "rhs", "quotient"};
    if (refine) {
        t.header.push_back("refined_quotient");
        t.header.push_back("refinement_delta");
    }
    for (std::size_t k = 0; k < r.entries.size(); ++k) {
        const auto& e = r.entries[k];
        o.report["entries"][e.name] = {{"lhs", e.lhs}, {"rhs", e.rhs}, {"quotient", e.quotient()}};
        o.require(e.rhs > 0.0 && std::isfinite(e.quotient()), e.name + ": quotient not finite");
        std::vector<std::string> row{e.name, fmt(e.lhs), fmt(e.rhs), fmt(e.quotient())};
        if (refine) {
            const double qf = f.entries[k].quotient(), delta = std::abs(qf / e.quotient() - 1.0);
            o.report["entries"][e.name]["refinement_delta"] = delta;
            o.require(delta < 0.2, e.name + ": quotient changes by more than 20% under refinement");
            row.push_back(fmt(qf));
            row.push_back(fmt(delta));
        }
        t.add(row);
    }
    return o;
}

// ---- orchestration ----

void write_csv(const std::string& path, const Table& t, bool with_run, const std::vector<int>& run_of_row)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (with_run) out << "run,";
    for (std::size_t k = 0; k < t.header.size(); ++k) out << (k ? "," : "") << t.header[k];
    out << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (with_run) out << run_of_row[r] << ',';
        for (std::size_t k = 0; k < t.rows[r].size(); ++k) out << (k ? "," : "") << t.rows[r][k];
        out << '\n';
    }
}

int execute(const std::string& name, const std::function<Outcome(const RunConfig&, const Options&)>& fn,
            const RunConfig& cfg, const Options& opt)
{
    const std::vector<RunConfig> runs = cfg.runs();
    std::filesystem::create_directories(cfg.output_dir);
    json report = {{"command", name}, {"threads", worker_count()}, {"runs", json::array()}};
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<int>> run_rows;
    std::vector<std::string> failures;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        Outcome o;
        try {
            o = fn(runs[k], opt);
        } catch (const InvariantError& e) {
            o.failures.push_back(std::string("invariant violated: ") + e.what());
        }
        json run = {{"config", params_json(runs[k])}, {"results", o.report}, {"failures", o.failures},
                    {"pass", o.failures.empty()}};
        report["runs"].push_back(run);
        for (const auto& f : o.failures)
            failures.push_back(runs.size() > 1 ? "run " + std::to_string(k) + ": " + f : f);
        for (auto& [tname, t] : o.tables) {
            Table& dst = tables[tname];
            if (dst.header.empty()) dst.header = t.header;
            for (auto& row : t.rows) {
                dst.rows.push_back(row);
                run_rows[tname].push_back(int(k));
            }
        }
    }
    report["failures"] = failures;
    report["pass"] = failures.empty();
    const std::filesystem::path dir(cfg.output_dir);
    std::ofstream(dir / (name + ".json")) << report.dump(2) << '\n';
    for (const auto& [tname, t] : tables)
        write_csv((dir / (name + "_" + tname + ".csv")).string(), t, runs.size() > 1, run_rows[tname]);
    for (const auto& f : failures) std::cerr << "FAIL " << name << ": " << f << '\n';
    std::cout << name << ": " << (failures.empty() ? "pass" : "FAIL") << " (" << runs.size() << " run"
              << (runs.size() > 1 ? "s" : "") << ", report " << (dir / (name + ".json")).string() << ")\n";
    return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Solver and verification harness for the linearized compressible fluid-beam system"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    Options opt;
    app.add_option("-c,--config", config_path, "configuration file of key = value lines")->check(CLI::ExistingFile);
    app.add_option("-s,--set", overrides, "override a configuration key, key=value");
    app.add_option("-o,--out", out_dir, "output directory for reports");
    app.fallthrough();

    using Fn = std::function<Outcome(const RunConfig&, const Options&)>;
    std::string selected;
    Fn selected_fn;
    auto leaf = [&](CLI::App* group, const std::string& sub, const std::string& help, Fn fn) {
        CLI::App* s = group->add_subcommand(sub, help);
        s->fallthrough();
        const std::string full = group->get_name() + "_" + sub;
        s->callback([&, full, fn] {
            selected = full;
            selected_fn = fn;
        });
        return s;
    };
    auto group = [&](const std::string& name, const std::string& help) {
        CLI::App* g = app.add_subcommand(name, help);
        g->require_subcommand(1);
        g->fallthrough();
        return g;
    };

    CLI::App* weights = group("weights", "Carleman weight construction");
    leaf(weights, "check", "certify the weight identities and bounds", weights_check);
    CLI::App* carleman = group("carleman", "Carleman functionals of the single equations");
    for (auto [n, fn] : std::vector<std::pair<std::string, Fn>>{
             {"beam", carleman_beam}, {"heat", carleman_heat}, {"transport", carleman_transport}})
        leaf(carleman, n, "evaluate the " + n + " Carleman functionals", fn)
            ->add_flag("--refine", opt.refine, "also run at doubled resolution");
    CLI::App* hum = group("hum", "variational control of the heat equation");
    leaf(hum, "run", "minimize the control functional and verify null control", hum_run)
        ->add_flag("--dump", opt.dump, "write control and state trajectories");
    CLI::App* transport = group("transport", "transport equation");
    leaf(transport, "glue", "build the glued control and verify it", transport_glue)
        ->add_flag("--dump", opt.dump, "write trajectories");
    CLI::App* solve = group("solve", "forward and adjoint solves");
    CLI::App* adj = leaf(solve, "adjoint", "solve the coupled adjoint system", solve_adjoint);
    adj->add_flag("--audit", opt.audit, "write per-equation residuals");
    adj->add_flag("--fixed-point", opt.fixed_point, "use the windowed fixed-point iteration");
    adj->add_flag("--dump", opt.dump, "write trajectories");
    leaf(solve, "primal", "solve the controlled linearized system", solve_primal_cmd)
        ->add_flag("--dump", opt.dump, "write the density trajectory");
    CLI::App* check = group("check", "identities linking the primal and adjoint systems");
    leaf(check, "duality", "discrete duality identity", check_duality);
    leaf(check, "energy", "energy balance without controls", check_energy);
    CLI::App* obs = group("observability", "observability inequality");
    leaf(obs, "run", "sample the observability quotient", observability_run)
        ->add_flag("--refine", opt.refine, "compare with doubled resolution");
    CLI::App* uc = group("uc", "unique continuation");
    CLI::App* ucs = leaf(uc, "search", "minimize the observation ratio over a random basis", uc_search);
    ucs->add_flag("--refine", opt.refine, "compare with doubled resolution");
    ucs->add_flag("--dump", opt.dump, "write the minimizing terminal data");
    CLI::App* assembly = group("assembly", "assembly of the observability chain");
    leaf(assembly, "check", "evaluate every estimate of the chain", assembly_check_cmd)
        ->add_flag("--refine", opt.refine, "compare with doubled resolution");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = parse_config(config_path);
        for (const auto& s : overrides) apply_override(cfg, s);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        cfg.runs();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    }
    try {
        return execute(selected, selected_fn, cfg, opt);
    } catch (const std::exception& e) {
        std::cerr << "FAIL " << selected << ": " << e.what() << '\n';
        return 1;
    }
}
