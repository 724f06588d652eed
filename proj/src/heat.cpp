#include "fsiobs/heat.hpp"

#include "fsiobs/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace fsiobs {

namespace {

// Real tridiagonal system with complex right-hand sides, factored once.
struct Tridiag {
    Eigen::VectorXd lower, diag, upper;  // lower(j) couples j to j-1, upper(j) couples j to j+1
    Eigen::VectorXd c_prime, denom;

    void factor()
    {
        const int n = int(diag.size());
        c_prime.resize(n);
        denom.resize(n);
        denom(0) = diag(0);
        if (denom(0) == 0.0) throw std::runtime_error("singular tridiagonal system");
        c_prime(0) = upper(0) / denom(0);
        for (int j = 1; j < n; ++j) {
            denom(j) = diag(j) - lower(j) * c_prime(j - 1);
            if (denom(j) == 0.0) throw std::runtime_error("singular tridiagonal system");
            c_prime(j) = (j + 1 < n) ? upper(j) / denom(j) : 0.0;
        }
    }

    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const
    {
        const int n = int(diag.size());
        Eigen::VectorXcd d(n);
        d(0) = rhs(0) / denom(0);
        for (int j = 1; j < n; ++j) d(j) = (rhs(j) - lower(j) * d(j - 1)) / denom(j);
        for (int j = n - 2; j >= 0; --j) d(j) -= c_prime(j) * d(j + 1);
        return d;
    }
};

// (alpha I - beta (Lz - k^2)) with ghost-node Neumann rows
Tridiag heat_matrix(int nz, double dz, double k2, double alpha, double beta)
{
    Tridiag T;
    T.lower = Eigen::VectorXd::Zero(nz);
    T.upper = Eigen::VectorXd::Zero(nz);
    T.diag = Eigen::VectorXd::Constant(nz, alpha + beta * (2.0 / (dz * dz) + k2));
    const double off = -beta / (dz * dz);
    for (int j = 1; j < nz; ++j) T.lower(j) = off;
    for (int j = 0; j + 1 < nz; ++j) T.upper(j) = off;
    T.upper(0) = 2.0 * off;
    T.lower(nz - 1) = 2.0 * off;
    T.factor();
    return T;
}

Eigen::VectorXcd spectral_laplacian_col(const Eigen::VectorXcd& f, double dz, double k2, cplx flux = 0.0)
{
    return neumann_lz(f, dz, flux) - k2 * f;
}

Spectrum spectral_laplacian(const Spectrum& c, const Grid& g)
{
    Spectrum out(c.rows(), c.cols());
    for (int m = 0; m < c.rows(); ++m) {
        const double k2 = -dx_symbol(g, m, 2).real();
        out.row(m) = spectral_laplacian_col(c.row(m).transpose(), g.dz, k2).transpose();
    }
    return out;
}

}  // namespace

Eigen::VectorXcd neumann_lz(const Eigen::VectorXcd& f, double dz, cplx flux)
{
    const int n = int(f.size());
    const int J = n - 1;
    const double h2 = dz * dz;
    Eigen::VectorXcd out(n);
    out(0) = 2.0 * (f(1) - f(0)) / h2;
    for (int j = 1; j < J; ++j) out(j) = (f(j + 1) - 2.0 * f(j) + f(j - 1)) / h2;
    out(J) = 2.0 * (f(J - 1) - f(J)) / h2 + 2.0 * flux / dz;
    return out;
}

Field neumann_laplacian(const Field& f, const Grid& g)
{
    return inverse_fourier_x(spectral_laplacian(fourier_x(f), g), g.nx);
}

Trajectory<Field> solve_heat_neumann(const HeatProblem& p, Direction dir, const Grid& g)
{
    if (p.data.rows() != g.nx || p.data.cols() != g.nz) throw InvariantError("heat data do not match the grid");
    if (!p.data.allFinite()) throw InvariantError("heat data must be finite");
    const bool has_f1 = p.f1.size() > 0, has_f2 = p.f2.size() > 0;
    if ((has_f1 && int(p.f1.size()) != g.nt + 1) || (has_f2 && int(p.f2.size()) != g.nt + 1))
        throw InvariantError("heat sources must have nt+1 snapshots");
    const double c = p.capacity;
    const int M = g.modes();

    std::vector<Spectrum> f1hat;
    std::vector<Eigen::VectorXcd> f2hat;
    if (has_f1)
        for (const auto& f : p.f1.snap) f1hat.push_back(fourier_x(f));
    if (has_f2)
        for (const auto& f : p.f2.snap) f2hat.push_back(fourier_trace(f));

    std::vector<Spectrum> out(g.nt + 1, Spectrum::Zero(M, g.nz));
    const int start = dir == Direction::backward ? g.nt : 0;
    out[start] = fourier_x(p.data);

    parallel_for(M, [&](int m) {
        const double k2 = -dx_symbol(g, m, 2).real();
        const Tridiag T = heat_matrix(g.nz, g.dz, k2, c / g.dt, 0.5);
        Eigen::VectorXcd cur = out[start].row(m).transpose();
        for (int step = 0; step < g.nt; ++step) {
            const int from = dir == Direction::backward ? g.nt - step : step;
            const int to = dir == Direction::backward ? from - 1 : from + 1;
            cplx flux = 0.0;
            if (has_f2) flux = 0.5 * (f2hat[from](m) + f2hat[to](m));
            Eigen::VectorXcd rhs = (c / g.dt) * cur + 0.5 * spectral_laplacian_col(cur, g.dz, k2);
            rhs(g.nz - 1) += 2.0 * flux / g.dz;
            if (has_f1) rhs += 0.5 * (f1hat[from].row(m).transpose() + f1hat[to].row(m).transpose());
            cur = T.solve(rhs);
            out[to].row(m) = cur.transpose();
        }
    });

    Trajectory<Field> tr = make_trajectory(g, zero_field(g));
    for (int n = 0; n <= g.nt; ++n) tr[n] = inverse_fourier_x(out[n], g.nx);
    return tr;
}

double weighted_grad_sq(const Field& f, const Grid& g, const Eigen::VectorXd& weight_x)
{
    const Eigen::VectorXd wz = z_weights(g);
    const Field fx = diff(f, g, Axis::x, 1);
    double total = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        double s = 0.0;
        for (int j = 0; j < g.nz; ++j) s += wz(j) * fx(i, j) * fx(i, j);
        for (int j = 0; j + 1 < g.nz; ++j) {
            const double dzf = (f(i, j + 1) - f(i, j)) / g.dz;
            s += g.dz * dzf * dzf;
        }
        total += weight_x(i) * s;
    }
    return g.dx * total;
}

HeatCarleman heat_carleman_functionals(const Trajectory<Field>& q, const Trajectory<Field>& f1,
                                       const Trajectory<Trace>& f2, const WeightTable& wt, const Grid& g,
                                       HeatFamily family)
{
    const double s = wt.cp.s, lam = wt.cp.lambda;
    const Eigen::VectorXd wz = z_weights(g);
    const Eigen::VectorXd chi = omega_indicator(g);
    const bool has_f1 = f1.size() > 0, has_f2 = f2.size() > 0;
    const bool low = family == HeatFamily::low_power;
    HeatCarleman out;
    for (int n = 1; n < g.nt; ++n) {
        const Eigen::VectorXd w = wt.w.col(n);
        const Eigen::VectorXd xi = wt.xi.col(n);
        Eigen::VectorXd grad_w(g.nx), field_w(g.nx), top_w(g.nx), f1_w(g.nx), f2_w(g.nx);
        for (int i = 0; i < g.nx; ++i) {
            if (low) {
                grad_w(i) = w(i) / (s * xi(i));
                field_w(i) = s * lam * lam * xi(i) * w(i);
                top_w(i) = lam * w(i);
                f1_w(i) = w(i) / (s * s * lam * lam * xi(i) * xi(i));
                f2_w(i) = w(i) / (s * lam * xi(i));
            } else {
                grad_w(i) = s * lam * lam * xi(i) * w(i);
                field_w(i) = std::pow(s, 3) * std::pow(lam, 4) * std::pow(xi(i), 3) * w(i);
                top_w(i) = s * s * std::pow(lam, 3) * xi(i) * xi(i) * w(i);
                f1_w(i) = w(i);
                f2_w(i) = s * lam * xi(i) * w(i);
            }
        }
        out.lhs_grad += g.dt * weighted_grad_sq(q[n], g, grad_w);
        for (int i = 0; i < g.nx; ++i) {
            double col = 0.0, col_f1 = 0.0;
            for (int j = 0; j < g.nz; ++j) {
                col += wz(j) * q[n](i, j) * q[n](i, j);
                if (has_f1) col_f1 += wz(j) * f1[n](i, j) * f1[n](i, j);
            }
            const double cell = g.dx * g.dt;
            const double qt = q[n](i, g.nz - 1);
            out.lhs_field += cell * field_w(i) * col;
            out.rhs_obs += cell * chi(i) * field_w(i) * col;
            out.lhs_boundary += cell * top_w(i) * qt * qt;
            out.rhs_f1 += cell * f1_w(i) * col_f1;
            if (has_f2) out.rhs_f2 += cell * f2_w(i) * f2[n](i) * f2[n](i);
        }
    }
    return out;
}

Trajectory<Field> hum_source_from(const Trajectory<Field>& q, const WeightTable& wt, const Grid& g)
{
    Trajectory<Field> G = make_trajectory(g, zero_field(g));
    for (int n = 1; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) {
            const double f = std::pow(wt.xi(i, n), 3) * wt.w(i, n);
            G[n].row(i) = f * q[n].row(i);
        }
    return G;
}

namespace {

// Discrete HUM operator A = L^T W L + M on the active node slices [na, nb].
// L maps node slices to midpoint slices: r_h = -c (v_{h+1} - v_h)/dt - Lap (v_{h+1} + v_h)/2.
struct HumOperator {
    const Grid& g;
    double c;
    int na, nb;
    Eigen::MatrixXd wh;  // midpoint weights nx x nt
    Eigen::MatrixXd m;   // omega term at nodes nx x (nt+1)
    Eigen::VectorXd wz;

    using Vec = std::vector<Field>;  // index n - na

    int count() const { return nb - na + 1; }

    double inner(const Vec& a, const Vec& b) const
    {
        double s = 0.0;
        for (std::size_t n = 0; n < a.size(); ++n) s += fsiobs::inner(a[n], b[n], g);
        return g.dt * s;
    }

    // r on midpoint slices h = na-1 .. nb, returned with index h - (na - 1)
    Vec apply_L(const Vec& v) const
    {
        Vec lap(v.size());
        for (std::size_t n = 0; n < v.size(); ++n) lap[n] = neumann_laplacian(v[n], g);
        Vec r(v.size() + 1);
        const Field zero = zero_field(g);
        for (std::size_t h = 0; h <= v.size(); ++h) {
            const Field& lo = h == 0 ? zero : v[h - 1];
            const Field& hi = h == v.size() ? zero : v[h];
            const Field& llo = h == 0 ? zero : lap[h - 1];
            const Field& lhi = h == v.size() ? zero : lap[h];
            r[h] = -(c / g.dt) * (hi - lo) - 0.5 * (lhi + llo);
        }
        return r;
    }

    Vec apply_LT(const Vec& Y) const
    {
        Vec lap(Y.size());
        for (std::size_t h = 0; h < Y.size(); ++h) lap[h] = neumann_laplacian(Y[h], g);
        Vec out(Y.size() - 1);
        for (std::size_t n = 0; n + 1 < Y.size(); ++n)
            out[n] = (c / g.dt) * (Y[n + 1] - Y[n]) - 0.5 * (lap[n] + lap[n + 1]);
        return out;
    }

    Vec weighted(const Vec& r) const
    {
        Vec Y(r.size());
        for (std::size_t h = 0; h < r.size(); ++h) Y[h] = wh.col(na - 1 + int(h)).asDiagonal() * r[h];
        return Y;
    }

    Vec apply(const Vec& v) const
    {
        Vec out = apply_LT(weighted(apply_L(v)));
        for (std::size_t n = 0; n < v.size(); ++n) out[n] += m.col(na + int(n)).asDiagonal() * v[n];
        return out;
    }
};

// Weights and the omega term depend on (x, t) only, and the cosines cos(pi l z / dz J)
// diagonalize the ghost-node Neumann difference in z. The operator therefore splits into
// one block-tridiagonal (in time) system per cosine mode, with dense x blocks; each is
// factored by block Cholesky. In exact arithmetic this inverts the operator.
struct HumPreconditioner {
    const HumOperator& op;
    Eigen::MatrixXd dxx;     // spectral second x-derivative, nx x nx
    Eigen::MatrixXd basis;   // cosine modes, nz x nz, column l
    Eigen::VectorXd eig;     // Lz basis.col(l) = -eig(l) basis.col(l)
    Eigen::VectorXd mass;    // trapezoid norm of each cosine mode

    explicit HumPreconditioner(const HumOperator& o) : op(o)
    {
        const Grid& g = op.g;
        dxx.resize(g.nx, g.nx);
        for (int i = 0; i < g.nx; ++i) {
            Field e = Field::Zero(g.nx, 1);
            e(i, 0) = 1.0;
            Grid g1 = g;
            g1.nz = 1;
            dxx.col(i) = diff(e, g1, Axis::x, 2).col(0);
        }
        const int J = g.nz - 1;
        basis.resize(g.nz, g.nz);
        eig.resize(g.nz);
        mass.resize(g.nz);
        for (int l = 0; l < g.nz; ++l) {
            for (int j = 0; j < g.nz; ++j) basis(j, l) = std::cos(M_PI * l * j / J);
            eig(l) = 2.0 / (g.dz * g.dz) * (1.0 - std::cos(M_PI * l / J));
            mass(l) = basis.col(l).cwiseProduct(op.wz).dot(basis.col(l));
        }
    }

    HumOperator::Vec apply(const HumOperator::Vec& r) const
    {
        const Grid& g = op.g;
        const int N = op.count();
        // coefficients per cosine mode: coef[n] is nx x nz with column l
        std::vector<Eigen::MatrixXd> coef(N), sol(N, Eigen::MatrixXd::Zero(g.nx, g.nz));
        const Eigen::MatrixXd proj = op.wz.asDiagonal() * basis * mass.cwiseInverse().asDiagonal();
        for (int n = 0; n < N; ++n) coef[n] = r[n] * proj;
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(g.nx, g.nx);
        parallel_for(g.nz, [&](int l) {
            const Eigen::MatrixXd D = dxx - eig(l) * I;
            const Eigen::MatrixXd Bp = -(op.c / g.dt) * I - 0.5 * D;
            const Eigen::MatrixXd Bm = (op.c / g.dt) * I - 0.5 * D;
            std::vector<Eigen::LLT<Eigen::MatrixXd>> S(N);
            std::vector<Eigen::MatrixXd> low(N);  // couples slice n to n-1
            std::vector<Eigen::VectorXd> y(N);
            for (int n = 0; n < N; ++n) {
                const Eigen::VectorXd wlo = op.wh.col(op.na - 1 + n), whi = op.wh.col(op.na + n);
                Eigen::MatrixXd Dn = Bp * wlo.asDiagonal() * Bp + Bm * whi.asDiagonal() * Bm;
                Dn.diagonal() += op.m.col(op.na + n);
                Eigen::VectorXd b = coef[n].col(l);
                if (n > 0) {
                    low[n] = Bp * wlo.asDiagonal() * Bm;
                    Dn -= low[n] * S[n - 1].solve(Eigen::MatrixXd(low[n].transpose()));
                    b -= low[n] * S[n - 1].solve(y[n - 1]);
                }
                S[n].compute(Dn);
                y[n] = b;
            }
            Eigen::VectorXd z;
            for (int n = N - 1; n >= 0; --n) {
                Eigen::VectorXd b = y[n];
                if (n + 1 < N) b -= low[n + 1].transpose() * z;
                z = S[n].solve(b);
                sol[n].col(l) = z;
            }
        });
        HumOperator::Vec out(N);
        for (int n = 0; n < N; ++n) out[n] = sol[n] * basis.transpose();
        return out;
    }
};

void axpy(HumOperator::Vec& y, double a, const HumOperator::Vec& x)
{
    for (std::size_t n = 0; n < y.size(); ++n) y[n] += a * x[n];
}

}  // namespace

HumSolution hum_minimize(const Trajectory<Field>& G, const EtaProfile& eta, const CarlemanParams& cp,
                         const ModelParams& p, const Grid& g, const HumOptions& opt)
{
    if (int(G.size()) != g.nt + 1) throw InvariantError("HUM source must have nt+1 snapshots");
    if (!(opt.weight_cutoff > 0.0 && opt.weight_cutoff < 1.0))
        throw InvariantError("HUM weight cutoff must lie in (0, 1)");
    if (opt.max_iter < 1 || !(opt.cg_tol > 0.0)) throw InvariantError("HUM needs max_iter >= 1 and cg_tol > 0");
    const WeightTable wn = make_weight_table(eta, cp, p, g);
    const WeightTable wh = make_midpoint_weight_table(eta, cp, p, g);
    const double c = p.rho_bar / p.nu();
    const double s = cp.s, lam = cp.lambda;
    const Eigen::VectorXd chi = omega_indicator(g);

    // active midpoint slices by mean weight; active nodes need both neighbours active
    Eigen::VectorXd wbar(g.nt);
    for (int h = 0; h < g.nt; ++h) wbar(h) = wh.w.col(h).mean();
    const double wmax = wbar.maxCoeff();
    int na = -1, nb = -1;
    for (int n = 1; n < g.nt; ++n) {
        if (std::min(wbar(n - 1), wbar(n)) > 0.0 && std::min(wbar(n - 1), wbar(n)) >= opt.weight_cutoff * wmax) {
            if (na < 0) na = n;
            nb = n;
        }
    }
    if (na < 0) throw InvariantError("no time slice carries a usable weight; grid too coarse in time");

    HumOperator op{g, c, na, nb, wh.w, Eigen::MatrixXd::Zero(g.nx, g.nt + 1), z_weights(g)};
    for (int n = 1; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i)
            op.m(i, n) = chi(i) * std::pow(s, 3) * std::pow(lam, 4) * std::pow(wn.xi(i, n), 3) * wn.w(i, n);

    const int N = op.count();
    HumOperator::Vec b(N), x(N, zero_field(g));
    for (int n = 0; n < N; ++n) b[n] = G[na + n];

    HumSolution sol;
    const double bnorm = std::sqrt(op.inner(b, b));
    if (bnorm > 0.0) {
        const HumPreconditioner pre(op);
        HumOperator::Vec r = b;
        HumOperator::Vec z = pre.apply(r);
        HumOperator::Vec d = z;
        double rz = op.inner(r, z);
        sol.cg_residual_history.push_back(1.0);
        for (int it = 1; it <= opt.max_iter; ++it) {
            const HumOperator::Vec Ad = op.apply(d);
            const double alpha = rz / op.inner(d, Ad);
            axpy(x, alpha, d);
            axpy(r, -alpha, Ad);
            const double rel = std::sqrt(op.inner(r, r)) / bnorm;
            sol.cg_residual_history.push_back(rel);
            sol.cg_iters = it;
            if (rel < opt.cg_tol) {
                sol.converged = true;
                break;
            }
            z = pre.apply(r);
            const double rz_new = op.inner(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (int n = 0; n < N; ++n) d[n] = z[n] + beta * d[n];
        }
    } else {
        sol.converged = true;
    }

    // J(x) = 1/2 (A x, x) - (G, x)
    const HumOperator::Vec Ax = op.apply(x);
    sol.J_min = 0.5 * op.inner(Ax, x) - op.inner(b, x);

    const HumOperator::Vec rr = op.apply_L(x);
    const HumOperator::Vec Yw = op.weighted(rr);  // midpoint slices na-1 .. nb

    sol.theta = make_trajectory(g, zero_field(g));
    sol.H = make_trajectory(g, zero_field(g));
    for (int n = 0; n < N; ++n) {
        sol.theta[na + n] = x[n];
        sol.H[na + n] = -(op.m.col(na + n).asDiagonal() * x[n]);
    }

    // forward Crank-Nicolson march of c Y_t - Lap Y = G + H over the midpoint slices from zero
    std::vector<Field> Ym(g.nt, zero_field(g));
    {
        std::vector<Spectrum> src(g.nt + 1);
        for (int n = 0; n <= g.nt; ++n) src[n] = fourier_x(Field(G[n] + sol.H[n]));
        std::vector<Spectrum> Ys(g.nt, Spectrum::Zero(g.modes(), g.nz));
        parallel_for(g.modes(), [&](int mode) {
            const double k2 = -dx_symbol(g, mode, 2).real();
            const Tridiag T = heat_matrix(g.nz, g.dz, k2, c / g.dt, 0.5);
            Eigen::VectorXcd cur = Eigen::VectorXcd::Zero(g.nz);
            for (int n = 1; n < g.nt; ++n) {
                Eigen::VectorXcd rhs = (c / g.dt) * cur + 0.5 * spectral_laplacian_col(cur, g.dz, k2) +
                                       src[n].row(mode).transpose();
                cur = T.solve(rhs);
                Ys[n].row(mode) = cur.transpose();
            }
        });
        for (int h = 0; h < g.nt; ++h) Ym[h] = inverse_fourier_x(Ys[h], g.nx);
    }
    double st = 0.0, diff2 = 0.0, ref2 = 0.0;
    for (int h = 0; h < g.nt; ++h) {
        const double nrm = norm(Ym[h], g, Space::L2);
        st += g.dt * nrm * nrm;
        const int idx = h - (na - 1);
        const Field Yh = (idx >= 0 && idx < int(Yw.size())) ? Yw[idx] : zero_field(g);
        const double dn = norm(Field(Ym[h] - Yh), g, Space::L2), rn = norm(Yh, g, Space::L2);
        diff2 += g.dt * dn * dn;
        ref2 += g.dt * rn * rn;
    }
    const double final_norm = norm(Ym[g.nt - 1], g, Space::L2);
    sol.controllability_residual = st > 0.0 ? final_norm / std::sqrt(st) : 0.0;
    sol.consistency = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : 0.0;

    sol.Y = make_trajectory(g, zero_field(g));
    for (int n = 1; n < g.nt; ++n) sol.Y[n] = 0.5 * (Ym[n - 1] + Ym[n]);
    sol.Y[g.nt] = Ym[g.nt - 1];

    // weighted estimate: Y = w r, so |Y|^2 e^{2 s phi} = w |r|^2 (up to the common reference factor)
    const Eigen::VectorXd wz = z_weights(g);
    for (std::size_t idx = 0; idx < rr.size(); ++idx) {
        const int h = na - 1 + int(idx);
        const Field& r = rr[idx];
        const Field rx = diff(r, g, Axis::x, 1);
        for (int i = 0; i < g.nx; ++i) {
            const double w = wh.w(i, h), xi = wh.xi(i, h), px = wh.phi_x(i, h);
            double field = 0.0, grad = 0.0;
            for (int j = 0; j < g.nz; ++j) {
                field += wz(j) * r(i, j) * r(i, j);
                const double gx = rx(i, j) - 2.0 * s * r(i, j) * px;
                grad += wz(j) * gx * gx;
            }
            for (int j = 0; j + 1 < g.nz; ++j) {
                const double gz = (r(i, j + 1) - r(i, j)) / g.dz;
                grad += g.dz * gz * gz;
            }
            const double rt = r(i, g.nz - 1);
            const double cell = g.dx * g.dt * w;
            sol.inYH_lhs += cell * (std::pow(s, 3) * std::pow(lam, 4) * field + s * lam * lam * grad / (xi * xi) +
                                    s * s * std::pow(lam, 3) * rt * rt / xi);
        }
    }
    for (int n = 1; n < g.nt; ++n) {
        for (int i = 0; i < g.nx; ++i) {
            const double w = wn.w(i, n), xi = wn.xi(i, n);
            double hsum = 0.0, gsum = 0.0;
            for (int j = 0; j < g.nz; ++j) {
                hsum += wz(j) * sol.theta[n](i, j) * sol.theta[n](i, j);
                gsum += wz(j) * G[n](i, j) * G[n](i, j);
            }
            const double cell = g.dx * g.dt;
            sol.inYH_lhs += cell * chi(i) * std::pow(s, 6) * std::pow(lam, 8) * std::pow(xi, 3) * w * hsum;
            if (w > 0.0)
                sol.inYH_rhs += cell * gsum / (std::pow(xi, 3) * w);
            else if (gsum > 0.0)
                sol.inYH_rhs = std::numeric_limits<double>::infinity();
        }
    }
    return sol;
}

}  // namespace fsiobs
