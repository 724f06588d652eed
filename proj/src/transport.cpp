#include "fsiobs/transport.hpp"

#include "fsiobs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace fsiobs {

double standalone_reaction(const ModelParams& p) { return p.P_prime() / p.nu(); }
double coupled_reaction(const ModelParams& p) { return p.P_prime() * p.rho_bar / p.nu(); }

namespace {

void check_source(const Trajectory<Field>& f, const Grid& g)
{
    if (f.size() == 0) return;
    if (int(f.size()) != g.nt + 1) throw InvariantError("transport source must have nt+1 snapshots");
    for (const auto& s : f.snap) {
        if (s.rows() != g.nx || s.cols() != g.nz) throw InvariantError("transport source does not match the grid");
        if (!s.allFinite()) throw InvariantError("transport source must be finite");
    }
}

// One exact step of c' = -z/dt c + f with f linear in time between the two nodes:
// c_to = E c_from + w_from f_from + w_to f_to.
struct StepWeights {
    cplx E, w_from, w_to;
};

StepWeights exact_step(cplx z, double dt)
{
    StepWeights w;
    w.E = std::exp(-z);
    if (std::abs(z) < 1e-3) {
        // series of (1 - (1+z)e^{-z})/z^2 and (z - 1 + e^{-z})/z^2
        w.w_from = dt * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0);
        w.w_to = dt * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0);
    } else {
        w.w_from = dt * (1.0 - (1.0 + z) * w.E) / (z * z);
        w.w_to = dt * (z - 1.0 + w.E) / (z * z);
    }
    return w;
}

Trajectory<Field> march(const Field& start, const Trajectory<Field>& f, const Grid& g, bool backward_in_time,
                        const std::function<StepWeights(int)>& weights)
{
    const bool forced = f.size() > 0;
    const int M = g.modes();
    std::vector<Spectrum> fh;
    if (forced)
        for (const auto& s : f.snap) fh.push_back(fourier_x(s));
    std::vector<Spectrum> out(g.nt + 1, Spectrum::Zero(M, g.nz));
    const int first = backward_in_time ? g.nt : 0;
    out[first] = fourier_x(start);
    parallel_for(M, [&](int m) {
        const StepWeights w = weights(m);
        for (int step = 0; step < g.nt; ++step) {
            const int from = backward_in_time ? g.nt - step : step;
            const int to = backward_in_time ? from - 1 : from + 1;
            Eigen::RowVectorXcd next = w.E * out[from].row(m);
            if (forced) next += w.w_from * fh[from].row(m) + w.w_to * fh[to].row(m);
            out[to].row(m) = next;
        }
    });
    Trajectory<Field> tr = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= g.nt; ++n) tr[n] = inverse_fourier_x(out[n], g.nx);
    return tr;
}

}  // namespace

Trajectory<Field> solve_transport(const TransportProblem& tp, const ModelParams& p, const Grid& g)
{
    if (tp.data.rows() != g.nx || tp.data.cols() != g.nz) throw InvariantError("transport data do not match the grid");
    if (!tp.data.allFinite()) throw InvariantError("transport data must be finite");
    if (!std::isfinite(tp.reaction)) throw InvariantError("transport reaction must be finite");
    check_source(tp.f4, g);
    const double u = p.u_bar1, a = tp.reaction;
    if (tp.direction == Direction::backward) {
        // in reversed time c' = -(a - iku) c + f
        return march(tp.data, tp.f4, g, true,
                     [&](int m) { return exact_step((a - u * dx_symbol(g, m, 1)) * g.dt, g.dt); });
    }
    return march(tp.data, tp.f4, g, false,
                 [&](int m) { return exact_step((a + u * dx_symbol(g, m, 1)) * g.dt, g.dt); });
}

Trajectory<Field> solve_transport_from_final(const Trajectory<Field>& f4, double reaction, const ModelParams& p,
                                             const Grid& g)
{
    check_source(f4, g);
    const double u = p.u_bar1;
    // inverts the forward step: c_n = (c_{n+1} - w_from f_n - w_to f_{n+1}) / E
    return march(zero_field(g), f4, g, true, [&](int m) {
        const StepWeights fw = exact_step((reaction + u * dx_symbol(g, m, 1)) * g.dt, g.dt);
        return StepWeights{1.0 / fw.E, -fw.w_to / fw.E, -fw.w_from / fw.E};
    });
}

GlueCutoff::GlueCutoff(const ModelParams& p) : p_(p)
{
    p.validate();
    const double gap = 0.5 * (p.u_bar1 * p.T - p.d);
    margin_ = 0.2 * gap;
    width_ = 0.5 * p.u_bar1 * p.T;
    // worst characteristic: the one whose sweep is centred on [0,d]
    min_occupation_ = 1e300;
    const int samples = 400;
    for (int k = 0; k < samples; ++k) {
        const double y = -p.L() + p.torus_len() * (k + 0.5) / samples;
        min_occupation_ = std::min(min_occupation_, occupation(y, p.T));
    }
    min_occupation_ = std::min(min_occupation_, occupation(-gap, p.T));
    if (!(min_occupation_ > 0.0))
        throw InvariantError("gluing cutoff transition escapes omega: horizon too short for the channel");
}

double GlueCutoff::beta(double x) const
{
    const double y = wrap_x(p_, x);
    const double dist = std::max({-y, y - p_.d, 0.0});
    const double u = (dist - margin_) / width_;
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    static const Poly S = smoothstep(3);
    return smoothstep_eval(S, u, 0);
}

double GlueCutoff::occupation(double y, double t) const
{
    if (t <= 0.0) return 0.0;
    const double a = y, b = y + p_.u_bar1 * t;
    const double ell = p_.torus_len();
    // beta is a polynomial between consecutive breakpoints
    const double base[] = {-margin_ - width_, -margin_, p_.d + margin_, p_.d + margin_ + width_, -p_.L()};
    std::vector<double> cuts{a, b};
    const int k0 = int(std::floor((a - p_.d - p_.L()) / ell)) - 1, k1 = int(std::ceil((b + p_.L()) / ell)) + 1;
    for (int k = k0; k <= k1; ++k)
        for (double c : base) {
            const double x = c + k * ell;
            if (x > a && x < b) cuts.push_back(x);
        }
    std::sort(cuts.begin(), cuts.end());
    static const double gx[] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static const double gw[] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int q = 0; q < 4; ++q) total += gw[q] * half * beta(mid + half * gx[q]);
    }
    return total / p_.u_bar1;
}

double GlueCutoff::chi(double x, double t) const
{
    if (t <= 0.0) return 0.0;
    if (t >= p_.T) return 1.0;
    const double y = x - p_.u_bar1 * t;
    return occupation(y, t) / occupation(y, p_.T);
}

double GlueCutoff::transport_derivative(double x, double t) const
{
    const double b = beta(x);
    if (b == 0.0) return 0.0;
    return b / occupation(x - p_.u_bar1 * t, p_.T);
}

GlueResult transport_glue_control(const Trajectory<Field>& f4_tilde, double reaction, const ModelParams& p,
                                  const Grid& g)
{
    check_source(f4_tilde, g);
    const GlueCutoff cut(p);
    GlueResult r;
    TransportProblem fw;
    fw.data = zero_field(g);
    fw.f4 = f4_tilde;
    fw.reaction = reaction;
    fw.direction = Direction::forward;
    r.sigma_forward = solve_transport(fw, p, g);
    r.sigma_backward = solve_transport_from_final(f4_tilde, reaction, p, g);

    r.sigma = make_trajectory(g, zero_field(g));
    r.control = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= g.nt; ++n) {
        const Field D = r.sigma_backward[n] - r.sigma_forward[n];
        for (int i = 0; i < g.nx; ++i) {
            const double c = cut.chi(g.x(i), g.t(n));
            const double dc = cut.transport_derivative(g.x(i), g.t(n));
            r.sigma[n].row(i) = (1.0 - c) * r.sigma_forward[n].row(i) + c * r.sigma_backward[n].row(i);
            r.control[n].row(i) = dc * D.row(i);
        }
    }

    double smax = 0.0;
    for (int n = 0; n <= g.nt; ++n) smax = std::max(smax, norm(r.sigma[n], g, Space::L2));
    const double ends = std::max(norm(r.sigma[0], g, Space::L2), norm(r.sigma[g.nt], g, Space::L2));
    r.endpoint_residual = smax > 0.0 ? ends / smax : 0.0;

    const Eigen::VectorXd chi_omega = omega_indicator(g);
    double vmax = 0.0, vout = 0.0;
    for (int n = 0; n <= g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) {
            const double m = r.control[n].row(i).cwiseAbs().maxCoeff();
            vmax = std::max(vmax, m);
            if (chi_omega(i) == 0.0) vout = std::max(vout, m);
        }
    r.outside_ratio = vmax > 0.0 ? vout / vmax : 0.0;

    // independent audit: the controlled forward problem started from zero reproduces sigma
    TransportProblem audit = fw;
    audit.f4 = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= g.nt; ++n) audit.f4[n] = (f4_tilde.size() ? f4_tilde[n] : zero_field(g)) + r.control[n];
    const auto again = solve_transport(audit, p, g);
    auto diff = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= g.nt; ++n) diff[n] = again[n] - r.sigma[n];
    const double ref = norm(r.sigma, g, Space::L2);
    r.reproduction_error = ref > 0.0 ? norm(diff, g, Space::L2) / ref : 0.0;
    r.reproduced_final = smax > 0.0 ? norm(again[g.nt], g, Space::L2) / smax : 0.0;
    r.pass = r.endpoint_residual < 1e-10 && r.outside_ratio < 1e-9;
    return r;
}

double TransportFunctionals::get(const std::string& name) const
{
    for (const auto& [k, v] : values)
        if (k == name) return v;
    throw std::out_of_range("unknown transport functional: " + name);
}

double TransportFunctionals::quotient(const std::string& which) const
{
    if (which == "obs") return get("sigma") / (get("f4") + get("sigma_obs"));
    if (which == "grad") return get("grad_sigma") / (get("grad_f4") + get("grad_sigma_obs"));
    if (which == "dt")
        return get("dt_sigma") / (get("grad_f4") + get("f4") + get("sigma_obs") + get("grad_sigma_obs"));
    if (which == "linf") return get("sigma_linf") / (get("f4") + get("s_lambda") * get("sigma_obs"));
    throw std::out_of_range("unknown transport quotient: " + which);
}

TransportFunctionals transport_obs_functionals(const Trajectory<Field>& sigma, const Trajectory<Field>& f4,
                                               double reaction, const WeightTable& wt, const ModelParams& p,
                                               const Grid& g)
{
    const bool forced = f4.size() > 0;
    const Eigen::VectorXd wz = z_weights(g);
    const Eigen::VectorXd chi = omega_indicator(g);
    double s_sig = 0, s_grad = 0, s_dt = 0, s_obs = 0, s_gobs = 0, s_f = 0, s_gf = 0, linf = 0, glinf = 0;
    for (int n = 0; n <= g.nt; ++n) {
        const Field& sg = sigma[n];
        const Field f = forced ? f4[n] : zero_field(g);
        const Field sx = diff(sg, g, Axis::x, 1), sz = diff(sg, g, Axis::z, 1);
        const Field fx = diff(f, g, Axis::x, 1), fz = diff(f, g, Axis::z, 1);
        // the equation gives sigma_t = -u sigma_x + a sigma - f4
        const Field st = -p.u_bar1 * sx + reaction * sg - f;
        const double tw = (n == 0 || n == g.nt) ? 0.5 * g.dt : g.dt;
        double slice = 0.0, gslice = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            const double w = wt.w(i, n), xi = wt.xi(i, n);
            if (w == 0.0) continue;
            double a = 0, b = 0, c = 0, d = 0, e = 0;
            for (int j = 0; j < g.nz; ++j) {
                a += wz(j) * sg(i, j) * sg(i, j);
                b += wz(j) * (sx(i, j) * sx(i, j) + sz(i, j) * sz(i, j));
                c += wz(j) * st(i, j) * st(i, j);
                d += wz(j) * f(i, j) * f(i, j);
                e += wz(j) * (fx(i, j) * fx(i, j) + fz(i, j) * fz(i, j));
            }
            const double k = g.dx * w / xi;
            s_sig += tw * k * a;
            s_grad += tw * k * b;
            s_dt += tw * k * c;
            s_f += tw * k * d;
            s_gf += tw * k * e;
            s_obs += tw * k * chi(i) * a;
            s_gobs += tw * k * chi(i) * b;
            slice += k * a / (xi * xi);
            gslice += k * b / (xi * xi);
        }
        linf = std::max(linf, slice);
        glinf = std::max(glinf, gslice);
    }
    TransportFunctionals out;
    out.values = {{"sigma", s_sig},        {"grad_sigma", s_grad}, {"dt_sigma", s_dt},
                  {"sigma_obs", s_obs},    {"grad_sigma_obs", s_gobs}, {"f4", s_f},
                  {"grad_f4", s_gf},       {"sigma_linf", linf},   {"grad_sigma_linf", glinf},
                  {"s_lambda", wt.cp.s * wt.cp.lambda}};
    return out;
}

}  // namespace fsiobs
