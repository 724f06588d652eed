#include "fsiobs/fields.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace fsiobs {

namespace {

Eigen::FFT<double>& fft_engine()
{
    thread_local Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return fft;
}

void forward_column(const double* in, int nx, cplx* out)
{
    std::vector<double> buf(in, in + nx);
    std::vector<cplx> spec;
    fft_engine().fwd(spec, buf);
    const double s = 1.0 / nx;
    for (int m = 0; m <= nx / 2; ++m) out[m] = spec[m] * s;
}

void inverse_column(const cplx* in, int nx, double* out)
{
    std::vector<cplx> spec(in, in + nx / 2 + 1);
    // a real signal has real DC and Nyquist coefficients
    spec[0] = cplx(spec[0].real(), 0.0);
    spec[nx / 2] = cplx(spec[nx / 2].real(), 0.0);
    for (auto& c : spec) c *= double(nx);
    std::vector<double> buf;
    fft_engine().inv(buf, spec, nx);
    for (int i = 0; i < nx; ++i) out[i] = buf[i];
}

double dz1(const Eigen::VectorXd& f, int j, double dz)
{
    const int J = int(f.size()) - 1;
    if (j == 0) return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * dz);
    if (j == J) return (3.0 * f(J) - 4.0 * f(J - 1) + f(J - 2)) / (2.0 * dz);
    return (f(j + 1) - f(j - 1)) / (2.0 * dz);
}

double dz2(const Eigen::VectorXd& f, int j, double dz)
{
    const int J = int(f.size()) - 1;
    const double h2 = dz * dz;
    if (j == 0) return (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2;
    if (j == J) return (2.0 * f(J) - 5.0 * f(J - 1) + 4.0 * f(J - 2) - f(J - 3)) / h2;
    return (f(j + 1) - 2.0 * f(j) + f(j - 1)) / h2;
}

double sq_l2(const Field& f, const Grid& g)
{
    const Eigen::VectorXd w = z_weights(g);
    return g.dx * (f.array().square().colwise().sum().transpose() * w.array()).sum();
}

double sq_l2(const Trace& f, const Grid& g) { return g.dx * f.squaredNorm(); }

double sq_sobolev(const Field& f, const Grid& g, int order)
{
    // sum over all mixed derivatives of total order <= `order`
    double total = 0.0;
    std::vector<Field> zlevel{f};
    for (int oz = 1; oz <= order; ++oz) zlevel.push_back(diff(zlevel.back(), g, Axis::z, 1));
    for (int oz = 0; oz <= order; ++oz) {
        Field cur = zlevel[oz];
        for (int ox = 0; ox + oz <= order; ++ox) {
            total += sq_l2(cur, g);
            if (ox + oz < order) cur = diff(cur, g, Axis::x, 1);
        }
    }
    return total;
}

int space_order(Space s)
{
    switch (s) {
    case Space::L2: return 0;
    case Space::H1: return 1;
    case Space::H2: return 2;
    case Space::H3: return 3;
    }
    return 0;
}

void write_header_and_data(std::ofstream& out, const Field& f)
{
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(f.data()), std::streamsize(sizeof(double) * f.size()));
    } else {
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            auto u = std::bit_cast<std::uint64_t>(f.data()[i]);
            u = __builtin_bswap64(u);
            out.write(reinterpret_cast<const char*>(&u), sizeof(u));
        }
    }
}

void read_data(std::ifstream& in, Field& f, const std::string& path)
{
    in.read(reinterpret_cast<char*>(f.data()), std::streamsize(sizeof(double) * f.size()));
    if (!in) throw std::runtime_error("truncated snapshot file: " + path);
    if constexpr (std::endian::native != std::endian::little) {
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            auto u = std::bit_cast<std::uint64_t>(f.data()[i]);
            f.data()[i] = std::bit_cast<double>(__builtin_bswap64(u));
        }
    }
}

}  // namespace

Field zero_field(const Grid& g) { return Field::Zero(g.nx, g.nz); }
Trace zero_trace(const Grid& g) { return Trace::Zero(g.nx); }

Spectrum fourier_x(const Field& f)
{
    const int nx = int(f.rows());
    Spectrum c(nx / 2 + 1, f.cols());
    for (Eigen::Index j = 0; j < f.cols(); ++j) forward_column(f.col(j).data(), nx, c.col(j).data());
    return c;
}

Field inverse_fourier_x(const Spectrum& c, int nx)
{
    Field f(nx, c.cols());
    for (Eigen::Index j = 0; j < c.cols(); ++j) inverse_column(c.col(j).data(), nx, f.col(j).data());
    return f;
}

Eigen::VectorXcd fourier_trace(const Trace& f)
{
    Eigen::VectorXcd c(f.size() / 2 + 1);
    forward_column(f.data(), int(f.size()), c.data());
    return c;
}

Trace inverse_fourier_trace(const Eigen::VectorXcd& c, int nx)
{
    Trace f(nx);
    inverse_column(c.data(), nx, f.data());
    return f;
}

cplx dx_symbol(const Grid& g, int m, int order)
{
    if (order == 0) return 1.0;
    if (m == g.nyquist() && order % 2 == 1) return 0.0;
    const cplx ik(0.0, g.wavenumber(m));
    cplx s = 1.0;
    for (int p = 0; p < order; ++p) s *= ik;
    return s;
}

Field diff(const Field& f, const Grid& g, Axis axis, int order)
{
    if (order < 0) throw InvariantError("derivative order must be nonnegative");
    if (order == 0) return f;
    if (axis == Axis::x) {
        if (order > 4) throw InvariantError("unresolved request: x-derivative order above 4");
        Spectrum c = fourier_x(f);
        for (int m = 0; m < c.rows(); ++m) c.row(m) *= dx_symbol(g, m, order);
        return inverse_fourier_x(c, int(f.rows()));
    }
    if (order > 2) throw InvariantError("unresolved request: z-derivative order above 2 (compose first and second differences)");
    if (f.cols() < 4) throw InvariantError("z-differences need at least 4 nodes");
    Field out(f.rows(), f.cols());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const Eigen::VectorXd col = f.row(i).transpose();
        for (Eigen::Index j = 0; j < f.cols(); ++j)
            out(i, j) = order == 1 ? dz1(col, int(j), g.dz) : dz2(col, int(j), g.dz);
    }
    return out;
}

Trace diff_trace(const Trace& f, const Grid& g, int order)
{
    if (order < 0 || order > 4) throw InvariantError("unresolved request: trace derivative order must be 0..4");
    Eigen::VectorXcd c = fourier_trace(f);
    for (int m = 0; m < c.size(); ++m) c(m) *= dx_symbol(g, m, order);
    return inverse_fourier_trace(c, int(f.size()));
}

Eigen::VectorXd z_weights(const Grid& g)
{
    Eigen::VectorXd w = Eigen::VectorXd::Constant(g.nz, g.dz);
    w(0) = w(g.nz - 1) = 0.5 * g.dz;
    return w;
}

double inner(const Field& f, const Field& h, const Grid& g)
{
    const Eigen::VectorXd w = z_weights(g);
    return g.dx * ((f.array() * h.array()).colwise().sum().transpose() * w.array()).sum();
}

double norm(const Field& f, const Grid& g, Space s) { return std::sqrt(sq_sobolev(f, g, space_order(s))); }

double norm(const Trace& f, const Grid& g, Space s)
{
    double total = 0.0;
    Trace cur = f;
    const int order = space_order(s);
    for (int p = 0; p <= order; ++p) {
        total += sq_l2(cur, g);
        if (p < order) cur = diff_trace(cur, g, 1);
    }
    return std::sqrt(total);
}

template <typename T>
static double space_time_norm(const Trajectory<T>& f, const Grid& g, Space s)
{
    const std::size_t N = f.size();
    if (N < 2) return N == 1 ? norm(f[0], g, s) : 0.0;
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const double v = norm(f[n], g, s);
        const double w = (n == 0 || n + 1 == N) ? 0.5 : 1.0;
        total += w * v * v;
    }
    const double dt = (f.t.back() - f.t.front()) / double(N - 1);
    return std::sqrt(dt * total);
}

double norm(const Trajectory<Field>& f, const Grid& g, Space s) { return space_time_norm(f, g, s); }
double norm(const Trajectory<Trace>& f, const Grid& g, Space s) { return space_time_norm(f, g, s); }

Trace trace(const Field& f, Wall w) { return w == Wall::bottom ? Trace(f.col(0)) : Trace(f.col(f.cols() - 1)); }

bool all_finite(const Field& f) { return f.allFinite(); }

void write_field(const std::string& path, const Field& f)
{
    if (!f.allFinite()) throw InvariantError("refusing to write a field with non-finite entries");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "FSIOBS1 " << f.rows() << ' ' << f.cols() << '\n';
    write_header_and_data(out, f);
}

Field read_field(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot file: " + path);
    std::string line;
    std::getline(in, line);
    std::istringstream hs(line);
    std::string tag;
    long nx = 0, nz = 0;
    if (!(hs >> tag >> nx >> nz) || tag != "FSIOBS1" || nx <= 0 || nz <= 0)
        throw std::runtime_error("bad FSIOBS1 header in " + path);
    Field f(nx, nz);
    read_data(in, f, path);
    if (!f.allFinite()) throw InvariantError("snapshot contains non-finite entries: " + path);
    return f;
}

void write_trajectory(const std::string& path, const Trajectory<Field>& tr)
{
    if (tr.size() < 2) throw InvariantError("trajectory needs at least two snapshots");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "FSIOBS1T " << tr[0].rows() << ' ' << tr[0].cols() << ' ' << tr.size() - 1 << '\n';
    for (const auto& f : tr.snap) {
        if (!f.allFinite()) throw InvariantError("refusing to write a trajectory with non-finite entries");
        write_header_and_data(out, f);
    }
}

Trajectory<Field> read_trajectory(const std::string& path, double T)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
    std::string line;
    std::getline(in, line);
    std::istringstream hs(line);
    std::string tag;
    long nx = 0, nz = 0, nt = 0;
    if (!(hs >> tag >> nx >> nz >> nt) || tag != "FSIOBS1T" || nx <= 0 || nz <= 0 || nt <= 0)
        throw std::runtime_error("bad FSIOBS1T header in " + path);
    Trajectory<Field> tr;
    for (long n = 0; n <= nt; ++n) {
        Field f(nx, nz);
        read_data(in, f, path);
        tr.snap.push_back(std::move(f));
        tr.t.push_back(T * double(n) / double(nt));
    }
    return tr;
}

}  // namespace fsiobs
