#include "fsiobs/obs.hpp"

#include "fsiobs/beam.hpp"
#include "fsiobs/heat.hpp"
#include "fsiobs/parallel.hpp"
#include "fsiobs/transport.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>

namespace fsiobs {

namespace {

using Features = std::vector<double>;

double time_weight(int n, const Grid& g) { return (n == 0 || n == g.nt) ? 0.5 * g.dt : g.dt; }

// Values of f and all its mixed derivatives up to `order`, each scaled so that the sum of
// squares is the weighted Sobolev seminorm sum over the masked columns.
void sobolev_features(const Field& f, const Grid& g, int order, const Eigen::VectorXd& mask, double tw, Features& out)
{
    const Eigen::VectorXd wz = z_weights(g);
    std::vector<Field> zlevel{f};
    for (int oz = 1; oz <= order; ++oz) zlevel.push_back(diff(zlevel.back(), g, Axis::z, 1));
    for (int oz = 0; oz <= order; ++oz) {
        Field cur = zlevel[oz];
        for (int ox = 0; ox + oz <= order; ++ox) {
            for (int j = 0; j < g.nz; ++j)
                for (int i = 0; i < g.nx; ++i)
                    if (mask(i) != 0.0) out.push_back(std::sqrt(tw * g.dx * wz(j) * mask(i)) * cur(i, j));
            if (ox + oz < order) cur = diff(cur, g, Axis::x, 1);
        }
    }
}

void trace_features(const Trace& f, const Grid& g, int order, const Eigen::VectorXd& mask, double tw, Features& out)
{
    for (int o = 0; o <= order; ++o) {
        const Trace d = diff_trace(f, g, o);
        for (int i = 0; i < g.nx; ++i)
            if (mask(i) != 0.0) out.push_back(std::sqrt(tw * g.dx * mask(i)) * d(i));
    }
}

double sq_sum(const Features& f)
{
    double s = 0.0;
    for (double v : f) s += v * v;
    return s;
}

template <typename T>
T time_derivative(const Trajectory<T>& tr, int n, const Grid& g)
{
    const int nt = g.nt;
    if (n == 0) return (-3.0 * tr[0] + 4.0 * tr[1] - tr[2]) / (2.0 * g.dt);
    if (n == nt) return (3.0 * tr[nt] - 4.0 * tr[nt - 1] + tr[nt - 2]) / (2.0 * g.dt);
    return (tr[n + 1] - tr[n - 1]) / (2.0 * g.dt);
}

enum Group { g_psi, g_v_l2h2, g_v_h1h1, g_sigma, g_count };

// observation features at time node n, split by norm
std::array<Features, g_count> rhs_features(const AdjointTrajectory& tr, int n, const Grid& g,
                                           const Eigen::VectorXd& chi)
{
    std::array<Features, g_count> out;
    const double tw = time_weight(n, g);
    const Field v1 = tr.v[n].v1, v2 = v2_at_nodes(tr.v[n], tr.psi[n]);
    auto v2_at = [&](int k) { return v2_at_nodes(tr.v[k], tr.psi[k]); };
    Field v1t, v2t;
    if (n == 0) {
        v1t = (-3.0 * tr.v[0].v1 + 4.0 * tr.v[1].v1 - tr.v[2].v1) / (2.0 * g.dt);
        v2t = (-3.0 * v2 + 4.0 * v2_at(1) - v2_at(2)) / (2.0 * g.dt);
    } else if (n == g.nt) {
        v1t = (3.0 * v1 - 4.0 * tr.v[n - 1].v1 + tr.v[n - 2].v1) / (2.0 * g.dt);
        v2t = (3.0 * v2 - 4.0 * v2_at(n - 1) + v2_at(n - 2)) / (2.0 * g.dt);
    } else {
        v1t = (tr.v[n + 1].v1 - tr.v[n - 1].v1) / (2.0 * g.dt);
        v2t = (v2_at(n + 1) - v2_at(n - 1)) / (2.0 * g.dt);
    }
    trace_features(tr.psi[n], g, 0, chi, tw, out[g_psi]);
    sobolev_features(v1, g, 2, chi, tw, out[g_v_l2h2]);
    sobolev_features(v2, g, 2, chi, tw, out[g_v_l2h2]);
    sobolev_features(v1, g, 1, chi, tw, out[g_v_h1h1]);
    sobolev_features(v2, g, 1, chi, tw, out[g_v_h1h1]);
    sobolev_features(v1t, g, 1, chi, tw, out[g_v_h1h1]);
    sobolev_features(v2t, g, 1, chi, tw, out[g_v_h1h1]);
    sobolev_features(tr.sigma[n], g, 1, chi, tw, out[g_sigma]);
    return out;
}

enum LhsGroup { l_sigma, l_v, l_beam, l_count };

std::array<Features, l_count> lhs_features(const AdjointTrajectory& tr, const Grid& g)
{
    std::array<Features, l_count> out;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.nx);
    sobolev_features(tr.sigma[0], g, 1, ones, 1.0, out[l_sigma]);
    sobolev_features(tr.v[0].v1, g, 2, ones, 1.0, out[l_v]);
    sobolev_features(v2_at_nodes(tr.v[0], tr.psi[0]), g, 2, ones, 1.0, out[l_v]);
    trace_features(tr.psi[0], g, 3, ones, 1.0, out[l_beam]);
    trace_features(tr.psi_t[0], g, 1, ones, 1.0, out[l_beam]);
    return out;
}

double terminal_scale(const TerminalData& td, const ModelParams& p, const Grid& g)
{
    return norm(td.sigma_T, g, Space::H1) + norm(td.v_T.v1, g, Space::H2) +
           norm(v2_at_nodes(td.v_T, td.psi_T), g, Space::H2) + norm(td.psi_T, g, Space::H3) +
           norm(td.psi1_T, g, Space::H1) + 0.0 * p.rho_bar;
}

TerminalData combine(const std::vector<TerminalData>& basis, const Eigen::VectorXd& c)
{
    TerminalData out = basis[0];
    out.sigma_T *= c(0);
    out.v_T *= c(0);
    out.psi_T *= c(0);
    out.psi1_T *= c(0);
    for (std::size_t k = 1; k < basis.size(); ++k) {
        out.sigma_T += c(k) * basis[k].sigma_T;
        VelocityField v = basis[k].v_T;
        v *= c(k);
        out.v_T += v;
        out.psi_T += c(k) * basis[k].psi_T;
        out.psi1_T += c(k) * basis[k].psi1_T;
    }
    return out;
}

// node values of the half-node vorticity with the wall values 0
Field curl_at_nodes(const VelocityField& v, const Grid& g)
{
    const Field w = staggered_curl(v, g);
    const int J = g.nz - 1;
    Field out = Field::Zero(g.nx, g.nz);
    for (int j = 1; j < J; ++j) out.col(j) = 0.5 * (w.col(j - 1) + w.col(j));
    return out;
}

}  // namespace

void ObsSampleSpec::validate() const
{
    if (n_samples < 1) throw InvariantError("observability sampling needs n_samples >= 1");
    if (decay < 2.0) throw InvariantError("mode-decay exponent must be at least 2");
    cp.validate();
    params.validate();
}

RandomDataSpec ObsSampleSpec::data_spec(int sample) const
{
    RandomDataSpec s;
    s.seed = seed * 7919u + unsigned(sample);
    s.modes_x = modes_x;
    s.modes_z = modes_z;
    s.decay = decay;
    return s;
}

ObsNorms observability_norms(const AdjointTrajectory& traj, const ModelParams& p, const Grid& g)
{
    (void)p;
    if (!traj.has_v) throw InvariantError("observability norms need the recovered velocity");
    const Eigen::VectorXd chi = omega_indicator(g);
    std::vector<std::array<double, g_count>> parts(g.nt + 1);
    parallel_for(g.nt + 1, [&](int n) {
        const auto f = rhs_features(traj, n, g, chi);
        for (int k = 0; k < g_count; ++k) parts[n][k] = sq_sum(f[k]);
    });
    std::array<double, g_count> tot{};
    for (const auto& a : parts)
        for (int k = 0; k < g_count; ++k) tot[k] += a[k];
    const auto l = lhs_features(traj, g);
    ObsNorms r;
    r.sigma0 = std::sqrt(sq_sum(l[l_sigma]));
    r.v0 = std::sqrt(sq_sum(l[l_v]));
    r.beam0 = std::sqrt(sq_sum(l[l_beam]));
    r.psi_obs = std::sqrt(tot[g_psi]);
    r.v_l2h2 = std::sqrt(tot[g_v_l2h2]);
    r.v_h1h1 = std::sqrt(tot[g_v_h1h1]);
    r.sigma_obs = std::sqrt(tot[g_sigma]);
    return r;
}

ObsSample observability_sample(const TerminalData& td, const ModelParams& p, const Grid& g)
{
    ObsSample s;
    s.data_scale = terminal_scale(td, p, g);
    const auto tr = solve_adjoint_full(td, p, g);
    s.norms = observability_norms(tr, p, g);
    s.counted = s.norms.rhs() > kObsFloor * s.data_scale && s.data_scale > 0.0;
    s.quotient = s.counted ? s.norms.lhs() / s.norms.rhs() : 0.0;
    return s;
}

ObsReport observability_report(const ObsSampleSpec& spec)
{
    spec.validate();
    const Grid g = spec.grid();
    ObsReport r;
    std::vector<double> q;
    for (int k = 0; k < spec.n_samples; ++k) {
        const RandomDataSpec ds = spec.data_spec(k);
        ObsSample s = observability_sample(random_compatible_data(ds, spec.params, g), spec.params, g);
        s.seed = ds.seed;
        if (s.counted) {
            q.push_back(s.quotient);
            r.max_quotient = std::max(r.max_quotient, s.quotient);
        }
        r.samples.push_back(s);
    }
    r.counted = int(q.size());
    if (!q.empty()) {
        std::sort(q.begin(), q.end());
        const std::size_t h = q.size() / 2;
        r.median_quotient = q.size() % 2 ? q[h] : 0.5 * (q[h - 1] + q[h]);
    }
    return r;
}

double refinement_delta(const ObsReport& coarse, const ObsReport& fine)
{
    if (coarse.max_quotient <= 0.0) throw InvariantError("refinement delta needs a counted coarse sample");
    return std::abs(fine.max_quotient / coarse.max_quotient - 1.0);
}

UcResult uc_extremal_search(const std::vector<TerminalData>& basis, const ModelParams& p, const Grid& g)
{
    const int K = int(basis.size());
    if (K < 1) throw InvariantError("unique continuation search needs a nonempty basis");
    std::vector<AdjointTrajectory> sol;
    sol.reserve(K);
    for (const auto& td : basis) sol.push_back(solve_adjoint_full(td, p, g));

    auto gram = [&](const std::vector<Features>& f) {
        const std::size_t len = f[0].size();
        Eigen::MatrixXd F(len, K);
        for (int k = 0; k < K; ++k) F.col(k) = Eigen::Map<const Eigen::VectorXd>(f[k].data(), Eigen::Index(len));
        return Eigen::MatrixXd(F.transpose() * F);
    };
    const Eigen::VectorXd chi = omega_indicator(g);
    std::vector<Eigen::MatrixXd> slices(g.nt + 1);
    parallel_for(g.nt + 1, [&](int n) {
        std::vector<Features> f(K);
        for (int k = 0; k < K; ++k) {
            const auto groups = rhs_features(sol[k], n, g, chi);
            for (const auto& grp : groups) f[k].insert(f[k].end(), grp.begin(), grp.end());
        }
        slices[n] = gram(f);
    });
    Eigen::MatrixXd GR = Eigen::MatrixXd::Zero(K, K);
    for (const auto& s : slices) GR += s;
    std::vector<Features> lf(K);
    for (int k = 0; k < K; ++k) {
        const auto groups = lhs_features(sol[k], g);
        for (const auto& grp : groups) lf[k].insert(lf[k].end(), grp.begin(), grp.end());
    }
    const Eigen::MatrixXd GL = gram(lf);

    // normalize every basis element to unit lhs before solving
    const Eigen::VectorXd diag = GL.diagonal();
    if (diag.maxCoeff() <= 0.0)
        throw InvariantError("lhs normalization impossible: the basis spans no nonzero terminal data");
    Eigen::VectorXd scale(K);
    for (int k = 0; k < K; ++k) scale(k) = diag(k) > 0.0 ? 1.0 / std::sqrt(diag(k)) : 0.0;
    std::vector<int> keep;
    for (int k = 0; k < K; ++k)
        if (diag(k) > 1e-300) keep.push_back(k);
    const Eigen::MatrixXd S = scale.asDiagonal();
    const Eigen::MatrixXd A = (S * GR * S)(keep, keep), B = (S * GL * S)(keep, keep);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bl(B);
    const double bmin = bl.eigenvalues().minCoeff(), bmax = bl.eigenvalues().maxCoeff();
    if (bmin <= 1e-13 * bmax)
        throw InvariantError("lhs normalization impossible: the basis is linearly dependent");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(A, B);
    UcResult r;
    r.basis_size = K;
    r.conditioning = bmax / bmin;
    r.ratio = std::sqrt(std::max(0.0, ge.eigenvalues()(0)));
    r.max_ratio = std::sqrt(std::max(0.0, ge.eigenvalues()(ge.eigenvalues().size() - 1)));
    r.coefficients = Eigen::VectorXd::Zero(K);
    const Eigen::VectorXd c = ge.eigenvectors().col(0);
    for (std::size_t i = 0; i < keep.size(); ++i) r.coefficients(keep[i]) = c(Eigen::Index(i)) * scale(keep[i]);
    r.minimizer = combine(basis, r.coefficients);
    return r;
}

UcResult uc_extremal_search(const ObsSampleSpec& spec, int basis_size)
{
    spec.validate();
    if (basis_size < 1) throw InvariantError("unique continuation search needs basis_size >= 1");
    const Grid g = spec.grid();
    std::vector<TerminalData> basis;
    for (int k = 0; k < basis_size; ++k) basis.push_back(random_compatible_data(spec.data_spec(k), spec.params, g));
    return uc_extremal_search(basis, spec.params, g);
}

const AssemblyEntry& AssemblyReport::get(const std::string& name) const
{
    for (const auto& e : entries)
        if (e.name == name) return e;
    throw InvariantError("unknown assembly entry: " + name);
}

AssemblyReport assembly_check(const AdjointTrajectory& traj, const EtaProfile& eta, const CarlemanParams& cp,
                              const ModelParams& p, const Grid& g)
{
    if (!traj.has_v) throw InvariantError("the assembly check needs the recovered velocity");
    const int nt = g.nt, J = g.nz - 1;
    const double rho = p.rho_bar, u = p.u_bar1, nu = p.nu(), kappa = nu / rho, a = coupled_reaction(p);
    const double s = cp.s, lam = cp.lambda;
    const WeightTable wt = make_weight_table(eta, cp, p, g);
    const Eigen::VectorXd chi = omega_indicator(g), ones = Eigen::VectorXd::Ones(g.nx);
    AssemblyReport rep;

    // beam driven by the material derivative of the wall flux
    Trajectory<BeamState> beam = make_trajectory(g, BeamState{zero_trace(g), zero_trace(g)});
    Trajectory<Trace> f_psi = make_trajectory(g, zero_trace(g));
    Trajectory<Trace> qJ = make_trajectory(g, zero_trace(g));
    for (int n = 0; n <= nt; ++n) {
        beam[n] = {traj.psi[n], traj.psi_t[n]};
        qJ[n] = traj.q[n].col(J);
    }
    for (int n = 0; n <= nt; ++n) f_psi[n] = time_derivative(qJ, n, g) + u * diff_trace(qJ[n], g, 1);
    const BeamCarleman bc = beam_carleman_functionals(beam, f_psi, wt, g);
    rep.entries.push_back({"beam", bc.lhs, bc.rhs_interior + bc.rhs_obs});

    // heat estimates for q and its time and x derivatives
    Trajectory<Field> f1 = make_trajectory(g, zero_field(g));
    Trajectory<Trace> f2 = make_trajectory(g, zero_trace(g));
    parallel_for(nt + 1, [&](int n) {
        f1[n] = (u * diff(traj.q[n], g, Axis::x, 1) + a * traj.q[n] - a * rho * traj.sigma[n]) / kappa;
        f2[n] = -rho * (traj.psi_t[n] + u * diff_trace(traj.psi[n], g, 1));
    });
    auto heat_entry = [&](const std::string& name, const Trajectory<Field>& q, const Trajectory<Field>& h1,
                          const Trajectory<Trace>& h2) {
        const HeatCarleman hc = heat_carleman_functionals(q, h1, h2, wt, g, HeatFamily::low_power);
        rep.entries.push_back({name, hc.lhs(), hc.rhs()});
    };
    heat_entry("heat_q", traj.q, f1, f2);
    {
        Trajectory<Field> qt = traj.q, f1t = f1;
        Trajectory<Trace> f2t = f2;
        for (int n = 0; n <= nt; ++n) {
            qt[n] = time_derivative(traj.q, n, g);
            f1t[n] = time_derivative(f1, n, g);
            f2t[n] = time_derivative(f2, n, g);
        }
        heat_entry("heat_dt_q", qt, f1t, f2t);
    }
    {
        Trajectory<Field> qx = traj.q, f1x = f1;
        Trajectory<Trace> f2x = f2;
        for (int n = 0; n <= nt; ++n) {
            qx[n] = diff(traj.q[n], g, Axis::x, 1);
            f1x[n] = diff(f1[n], g, Axis::x, 1);
            f2x[n] = diff_trace(f2[n], g, 1);
        }
        heat_entry("heat_dx_q", qx, f1x, f2x);
    }

    // transport estimates for sigma with the flux as source
    Trajectory<Field> f4 = traj.q;
    for (int n = 0; n <= nt; ++n) f4[n] *= p.P_prime() / nu;
    const TransportFunctionals tf = transport_obs_functionals(traj.sigma, f4, a, wt, p, g);
    const double obs = tf.get("sigma_obs") + tf.get("grad_sigma_obs"), src = tf.get("f4") + tf.get("grad_f4");
    rep.entries.push_back({"transport", (tf.get("sigma") + tf.get("grad_sigma") + tf.get("dt_sigma")) / (s * lam),
                           (obs + src) / (s * lam)});
    rep.entries.push_back({"transport_linf", (tf.get("sigma_linf") + tf.get("grad_sigma_linf")) / (s * s * lam * lam),
                           obs / (s * lam) + src / (s * s * lam * lam)});

    // intermediate-time and initial-time estimates of (sigma, q, psi)
    double q_obs = 0.0, psi_obs = 0.0, sigma_obs = 0.0;
    {
        std::vector<std::array<double, 3>> parts(nt + 1);
        parallel_for(nt + 1, [&](int n) {
            const double tw = time_weight(n, g);
            Features fq, fp, fs;
            sobolev_features(traj.q[n], g, 1, chi, tw, fq);
            sobolev_features(time_derivative(traj.q, n, g), g, 0, chi, tw, fq);
            trace_features(traj.psi[n], g, 0, chi, tw, fp);
            sobolev_features(traj.sigma[n], g, 1, chi, tw, fs);
            parts[n] = {sq_sum(fq), sq_sum(fp), sq_sum(fs)};
        });
        for (const auto& pt : parts) {
            q_obs += pt[0];
            psi_obs += pt[1];
            sigma_obs += pt[2];
        }
    }
    const double obs_sqp = std::sqrt(psi_obs) + std::sqrt(q_obs) + std::sqrt(sigma_obs);
    auto state_norm = [&](int n) {
        return std::sqrt(std::pow(norm(traj.psi[n], g, Space::H3), 2) + std::pow(norm(traj.psi_t[n], g, Space::H1), 2)) +
               norm(traj.q[n], g, Space::H2) + norm(traj.sigma[n], g, Space::H1);
    };
    const int n2 = std::clamp(int(std::lround(2.0 * p.T0 / g.dt)), 0, nt);
    rep.entries.push_back({"sigma_q_psi_2T0", state_norm(n2), obs_sqp});
    rep.entries.push_back({"sigma_q_psi_0", state_norm(0), obs_sqp});
    rep.ordering_2t0 = rep.get("sigma_q_psi_2T0").quotient() <= rep.get("sigma_q_psi_0").quotient();

    // initial divergence and curl of the velocity
    const ObsNorms on = observability_norms(traj, p, g);
    const double beam0 = std::sqrt(std::pow(norm(traj.psi[0], g, Space::H3), 2) +
                                   std::pow(norm(traj.psi_t[0], g, Space::H1), 2));
    const double div0 = norm(staggered_div(traj.v[0], traj.psi[0], g), g, Space::H1);
    rep.entries.push_back({"sigma_div_psi", norm(traj.sigma[0], g, Space::H1) + div0 + beam0, on.rhs()});
    double curl_obs = 0.0;
    {
        std::vector<double> parts(nt + 1);
        parallel_for(nt + 1, [&](int n) {
            Features f;
            sobolev_features(curl_at_nodes(traj.v[n], g), g, 0, chi, time_weight(n, g), f);
            parts[n] = sq_sum(f);
        });
        for (double v : parts) curl_obs += v;
    }
    rep.entries.push_back({"curl", norm(curl_at_nodes(traj.v[0], g), g, Space::H1), std::sqrt(curl_obs)});
    rep.entries.push_back({"observability", on.lhs(), on.rhs()});
    (void)ones;
    return rep;
}

}  // namespace fsiobs
