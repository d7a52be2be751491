#include "msym/numint.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace msym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t uz(int i) { return static_cast<std::size_t>(i); }

using Array = std::vector<double>;

// Finite-difference access on a section grid; NaN wherever a stencil leaves
// the grid so that invalid values propagate.
struct Mesh {
    int m;
    int levels;
    int nx;
    bool periodic;
    double dt;
    double dx;

    explicit Mesh(const NumericSection& s)
        : m(s.m), levels(s.levels), nx(s.nx), periodic(s.bc == Boundary::Periodic), dt(s.dt), dx(s.dx) {}

    [[nodiscard]] std::size_t size() const { return uz(levels * nx); }

    [[nodiscard]] double get(const Array& f, int it, int ix) const
    {
        if (it < 0 || it >= levels) return kNaN;
        if (periodic) ix = ((ix % nx) + nx) % nx;
        else if (ix < 0 || ix >= nx) return kNaN;
        return f[uz(it * nx + ix)];
    }

    [[nodiscard]] double shifted(const Array& f, int it, int ix, int dir, int k) const
    {
        return dir == 1 ? get(f, it + k, ix) : get(f, it, ix + k);
    }

    [[nodiscard]] Array d1(const Array& f, int dir) const
    {
        const double h = dir == 1 ? dt : dx;
        Array out(size(), kNaN);
        for (int it = 0; it < levels; ++it)
            for (int ix = 0; ix < nx; ++ix)
                out[uz(it * nx + ix)] = (shifted(f, it, ix, dir, -2) - 8.0 * shifted(f, it, ix, dir, -1) +
                                         8.0 * shifted(f, it, ix, dir, 1) - shifted(f, it, ix, dir, 2)) /
                                        (12.0 * h);
        return out;
    }

    [[nodiscard]] Array d2(const Array& f, int dir) const
    {
        const double h = dir == 1 ? dt : dx;
        Array out(size(), kNaN);
        for (int it = 0; it < levels; ++it)
            for (int ix = 0; ix < nx; ++ix)
                out[uz(it * nx + ix)] = (-shifted(f, it, ix, dir, -2) + 16.0 * shifted(f, it, ix, dir, -1) -
                                         30.0 * shifted(f, it, ix, dir, 0) + 16.0 * shifted(f, it, ix, dir, 1) -
                                         shifted(f, it, ix, dir, 2)) /
                                        (12.0 * h * h);
        return out;
    }

    [[nodiscard]] bool interior(int it, int ix, int margin) const
    {
        if (it < margin || it > levels - 1 - margin) return false;
        if (m == 1 || periodic) return true;
        return ix >= margin && ix <= nx - 1 - margin;
    }

    [[nodiscard]] double cell() const { return m == 1 ? dt : dt * dx; }
};

struct NormAccumulator {
    double max = 0.0;
    double sum = 0.0;
    std::size_t points = 0;

    void add(double r)
    {
        const double a = std::abs(r);
        if (!(a <= max)) max = a;  // NaN also lands here
        sum += r * r;
    }
    [[nodiscard]] Norms finish(double cell) const { return {max, std::sqrt(sum * cell), points}; }
};

// Field values and their first and second derivatives on the whole grid.
struct Jet2 {
    std::vector<Array> phi;
    std::vector<std::vector<Array>> d1;                 // [A][alpha]
    std::vector<std::vector<std::vector<Array>>> d2;    // [A][a][b], a <= b filled

    Jet2(const NumericSection& s, const Mesh& mesh, bool second)
    {
        phi = s.phi;
        d1.resize(uz(s.n));
        d2.resize(uz(s.n));
        for (int A = 0; A < s.n; ++A) {
            for (int a = 1; a <= s.m; ++a) d1[uz(A)].push_back(mesh.d1(phi[uz(A)], a));
            if (!second) continue;
            d2[uz(A)].assign(uz(s.m), std::vector<Array>(uz(s.m)));
            for (int a = 1; a <= s.m; ++a)
                for (int b = a; b <= s.m; ++b)
                    d2[uz(A)][uz(a - 1)][uz(b - 1)] = a == b ? mesh.d2(phi[uz(A)], a) : mesh.d1(d1[uz(A)][uz(a - 1)], b);
        }
    }
};

std::vector<Symbol> jet_slots(const LagrangianSystem& sys) { return sys.jet().coords(); }

// Jet coordinates at a grid point, in jet_slots order.
void fill_jet(std::vector<double>& vals, const NumericSection& s, const Jet2& j, int it, int ix)
{
    std::size_t k = 0;
    vals[k++] = s.t(it);
    if (s.m >= 2) vals[k++] = s.x(ix);
    const std::size_t p = uz(it * s.nx + ix);
    for (int A = 0; A < s.n; ++A) vals[k++] = j.phi[uz(A)][p];
    for (int A = 0; A < s.n; ++A)
        for (int a = 0; a < s.m; ++a) vals[k++] = j.d1[uz(A)][uz(a)][p];
}

std::vector<Symbol> section_slots(int m, int n)
{
    std::vector<Symbol> s;
    for (int a = 1; a <= m; ++a) s.push_back(Symbol::base(ChartKind::Section, a));
    for (int A = 1; A <= n; ++A) s.push_back(Symbol::field(A));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) s.push_back(Symbol::field_d1(A, a));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            for (int b = a; b <= m; ++b) s.push_back(Symbol::field_d2(A, a, b));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) s.push_back(Symbol::sec_momentum(A, a));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            for (int b = 1; b <= m; ++b) s.push_back(Symbol::sec_momentum_d1(A, a, b));
    return s;
}

struct MomentumArrays {
    std::vector<std::vector<Array>> p;                 // [A][eta]
    std::vector<std::vector<std::vector<Array>>> dp;   // [A][eta][alpha]
    Array pa;
    std::vector<Array> dpa;                            // [alpha]
};

MomentumArrays momenta(const LagrangianSystem& sys, const NumericSection& s, const Mesh& mesh, const Jet2& j)
{
    const auto slots = jet_slots(sys);
    std::vector<std::vector<CompiledExpr>> cp(uz(s.n));
    for (int A = 1; A <= s.n; ++A)
        for (int e = 1; e <= s.m; ++e) cp[uz(A - 1)].emplace_back(sys.dL_dv(A, e), slots);
    const CompiledExpr cpa(sys.energy_term(), slots);
    MomentumArrays out;
    out.p.assign(uz(s.n), std::vector<Array>(uz(s.m), Array(mesh.size(), kNaN)));
    out.pa.assign(mesh.size(), kNaN);
    std::vector<double> vals(slots.size());
    for (int it = 0; it < s.levels; ++it)
        for (int ix = 0; ix < s.nx; ++ix) {
            fill_jet(vals, s, j, it, ix);
            const std::size_t q = uz(it * s.nx + ix);
            for (int A = 0; A < s.n; ++A)
                for (int e = 0; e < s.m; ++e) out.p[uz(A)][uz(e)][q] = cp[uz(A)][uz(e)](vals);
            out.pa[q] = cpa(vals);
        }
    out.dp.resize(uz(s.n));
    for (int A = 0; A < s.n; ++A) {
        out.dp[uz(A)].resize(uz(s.m));
        for (int e = 0; e < s.m; ++e)
            for (int a = 1; a <= s.m; ++a) out.dp[uz(A)][uz(e)].push_back(mesh.d1(out.p[uz(A)][uz(e)], a));
    }
    for (int a = 1; a <= s.m; ++a) out.dpa.push_back(mesh.d1(out.pa, a));
    return out;
}

double eval_constant(const Expr& e, const std::string& what)
{
    for (const auto& s : free_symbols(e))
        if (!(s.role == Role::Base && s.i == 1)) throw NumericError(what + " must be a constant (found " + s.name() + ")");
    Point p;
    for (const auto& s : free_symbols(e)) p[s] = 0.0;
    return eval_at(e, p);
}

// Whole number of steps covering `span`, no longer than `h`.
int step_count(double span, double h, const std::string& what)
{
    if (!(h > 0.0) || !(span > 0.0)) throw NumericError(what + " interval and step must be positive");
    const auto k = static_cast<long long>(std::ceil(span / h - 1e-9));
    if (k > 50'000'000) throw NumericError(what + " step too small");
    return static_cast<int>(std::max(1LL, k));
}

void require_regular(const LagrangianSystem& sys)
{
    if (classify_regularity(sys).kind != RegularityKind::Regular)
        throw NumericError("numerical integration needs a regular Lagrangian");
}

}  // namespace

Boundary parse_boundary(const std::string& s)
{
    if (s == "periodic") return Boundary::Periodic;
    if (s == "dirichlet") return Boundary::Dirichlet;
    throw NumericError("unknown boundary condition '" + s + "' (periodic or dirichlet)");
}

std::string to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "dirichlet"; }

NumericSection integrate_m1(const LagrangianSystem& sys, const std::vector<double>& y0, const std::vector<double>& v0,
                            const Grid& grid)
{
    if (sys.m() != 1) throw NumericError("integrate_m1 needs m = 1");
    require_regular(sys);
    const int n = sys.n();
    if (y0.size() != uz(n) || v0.size() != uz(n)) throw NumericError("initial data size does not match N");
    const ELCoefficients el = solve_el_coefficients(sys);
    if (!el.consistent || !el.kernel.empty()) throw NumericError("second-order equations are not uniquely solvable");
    const auto slots = jet_slots(sys);
    std::vector<CompiledExpr> G;
    for (int A = 1; A <= n; ++A) G.emplace_back(el.G[uz(sys.gindex(A, 1, 1))], slots);

    NumericSection s;
    s.m = 1;
    s.n = n;
    s.scheme = "rk4";
    const int steps = step_count(grid.t_end, grid.dt, "time");
    s.dt = grid.t_end / steps;
    s.levels = steps + 1;
    s.phi.assign(uz(n), Array(uz(s.levels), 0.0));

    std::vector<double> y = y0, v = v0, vals(slots.size());
    auto accel = [&](double x, const std::vector<double>& yy, const std::vector<double>& vv) {
        vals[0] = x;
        for (int A = 0; A < n; ++A) {
            vals[uz(1 + A)] = yy[uz(A)];
            vals[uz(1 + n + A)] = vv[uz(A)];
        }
        std::vector<double> a(uz(n));
        for (int A = 0; A < n; ++A) a[uz(A)] = G[uz(A)](vals);
        return a;
    };
    for (int A = 0; A < n; ++A) s.phi[uz(A)][0] = y[uz(A)];
    const double h = s.dt;
    for (int k = 0; k < steps; ++k) {
        const double x = k * h;
        std::vector<double> yt(uz(n)), vt(uz(n));
        const auto a1 = accel(x, y, v);
        const auto& k1y = v;
        for (int A = 0; A < n; ++A) {
            yt[uz(A)] = y[uz(A)] + 0.5 * h * k1y[uz(A)];
            vt[uz(A)] = v[uz(A)] + 0.5 * h * a1[uz(A)];
        }
        const auto k2y = vt;
        const auto a2 = accel(x + 0.5 * h, yt, vt);
        for (int A = 0; A < n; ++A) {
            yt[uz(A)] = y[uz(A)] + 0.5 * h * k2y[uz(A)];
            vt[uz(A)] = v[uz(A)] + 0.5 * h * a2[uz(A)];
        }
        const auto k3y = vt;
        const auto a3 = accel(x + 0.5 * h, yt, vt);
        for (int A = 0; A < n; ++A) {
            yt[uz(A)] = y[uz(A)] + h * k3y[uz(A)];
            vt[uz(A)] = v[uz(A)] + h * a3[uz(A)];
        }
        const auto k4y = vt;
        const auto a4 = accel(x + h, yt, vt);
        bool finite = true;
        for (int A = 0; A < n; ++A) {
            y[uz(A)] += h / 6.0 * (k1y[uz(A)] + 2.0 * k2y[uz(A)] + 2.0 * k3y[uz(A)] + k4y[uz(A)]);
            v[uz(A)] += h / 6.0 * (a1[uz(A)] + 2.0 * a2[uz(A)] + 2.0 * a3[uz(A)] + a4[uz(A)]);
            finite = finite && std::isfinite(y[uz(A)]) && std::isfinite(v[uz(A)]);
        }
        if (!finite) {
            s.diagnostic = "non-finite state at x_1 = " + std::to_string(x + h) + "; section truncated";
            s.levels = k + 1;
            for (auto& f : s.phi) f.resize(uz(s.levels));
            break;
        }
        for (int A = 0; A < n; ++A) s.phi[uz(A)][uz(k + 1)] = y[uz(A)];
    }
    return s;
}

namespace {

struct HyperbolicBlocks {
    std::vector<CompiledExpr> tt, xx, rhs;  // N x N row-major, N x N, N
    std::vector<Symbol> slots;
};

HyperbolicBlocks hyperbolic_blocks(const LagrangianSystem& sys)
{
    const int n = sys.n();
    HyperbolicBlocks b;
    b.slots = jet_slots(sys);
    for (int A = 1; A <= n; ++A)
        for (int B = 1; B <= n; ++B) {
            if (!sys.hessian(A, 1, B, 2).is_zero() || !sys.hessian(A, 2, B, 1).is_zero())
                throw NumericError("mixed x_1/x_2 second-order terms are not supported by the leapfrog scheme");
            b.tt.emplace_back(sys.hessian(A, 1, B, 1), b.slots);
            b.xx.emplace_back(sys.hessian(A, 2, B, 2), b.slots);
        }
    for (const auto& r : sys.el_rhs()) b.rhs.emplace_back(r, b.slots);
    return b;
}

struct InitialArrays {
    int nx;
    double dx;
    std::vector<Array> phi, dphi, phix;
};

InitialArrays sample_initial(const LagrangianSystem& sys, const InitialData& init, const Grid& grid)
{
    const int n = sys.n();
    if (init.phi.size() != uz(n) || init.dphi.size() != uz(n)) throw NumericError("initial data size does not match N");
    const int cells = step_count(grid.x_hi - grid.x_lo, grid.dx, "space");
    InitialArrays ia;
    ia.nx = grid.bc == Boundary::Periodic ? cells : cells + 1;
    ia.dx = (grid.x_hi - grid.x_lo) / cells;
    const Symbol t = Symbol::base(ChartKind::Base, 1);
    const Symbol x = Symbol::base(ChartKind::Base, 2);
    for (int A = 0; A < n; ++A) {
        for (const auto& e : {init.phi[uz(A)], init.dphi[uz(A)]})
            for (const auto& s : free_symbols(e))
                if (!(s.chart == ChartKind::Base && (s.i == 1 || s.i == 2)))
                    throw NumericError("initial data may only use x_1 and x_2 (found " + s.name() + ")");
        const Expr phix = differentiate(init.phi[uz(A)], x);
        Array a(uz(ia.nx)), b(uz(ia.nx)), c(uz(ia.nx));
        for (int ix = 0; ix < ia.nx; ++ix) {
            const Point p{{t, 0.0}, {x, grid.x_lo + ix * ia.dx}};
            a[uz(ix)] = eval_at(init.phi[uz(A)], p);
            b[uz(ix)] = eval_at(init.dphi[uz(A)], p);
            c[uz(ix)] = eval_at(phix, p);
        }
        ia.phi.push_back(std::move(a));
        ia.dphi.push_back(std::move(b));
        ia.phix.push_back(std::move(c));
    }
    return ia;
}

}  // namespace

double characteristic_speed(const LagrangianSystem& sys, const InitialData& init, const Grid& grid)
{
    if (sys.m() != 2) throw NumericError("characteristic speeds are defined for m = 2");
    const int n = sys.n();
    const HyperbolicBlocks b = hyperbolic_blocks(sys);
    const InitialArrays ia = sample_initial(sys, init, grid);
    std::vector<double> vals(b.slots.size());
    double cmax = 0.0;
    for (int ix = 0; ix < ia.nx; ++ix) {
        vals[0] = 0.0;
        vals[1] = grid.x_lo + ix * ia.dx;
        for (int A = 0; A < n; ++A) {
            vals[uz(2 + A)] = ia.phi[uz(A)][uz(ix)];
            vals[uz(2 + n + 2 * A)] = ia.dphi[uz(A)][uz(ix)];
            vals[uz(2 + n + 2 * A + 1)] = ia.phix[uz(A)][uz(ix)];
        }
        Eigen::MatrixXd T(n, n), X(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                T(i, j) = b.tt[uz(i * n + j)](vals);
                X(i, j) = -b.xx[uz(i * n + j)](vals);
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(T), ex(X);
        if (et.eigenvalues().minCoeff() <= 0.0 || ex.eigenvalues().minCoeff() <= 0.0)
            throw NumericError("velocity Hessian is not hyperbolic with signature (+, -) per field at x_2 = " +
                               std::to_string(vals[1]));
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> g(X, T);
        cmax = std::max(cmax, std::sqrt(g.eigenvalues().maxCoeff()));
    }
    return cmax;
}

NumericSection integrate_m2(const LagrangianSystem& sys, const InitialData& init, const Grid& grid)
{
    if (sys.m() != 2) throw NumericError("integrate_m2 needs m = 2");
    require_regular(sys);
    const int n = sys.n();
    const double c = characteristic_speed(sys, init, grid);
    const HyperbolicBlocks b = hyperbolic_blocks(sys);
    const InitialArrays ia = sample_initial(sys, init, grid);
    const double dx = ia.dx;
    double dt = grid.dt;
    if (dt <= 0.0) {
        if (c <= 0.0) throw NumericError("cannot choose a time step for zero characteristic speed");
        const int k = static_cast<int>(std::ceil(grid.t_end * c / (grid.cfl * dx) - 1e-9));
        dt = grid.t_end / k;
    }
    if (c * dt > dx * (1.0 + 1e-12))
        throw NumericError("CFL condition violated: dt * c = " + std::to_string(c * dt) + " exceeds dx = " + std::to_string(dx));

    NumericSection s;
    s.m = 2;
    s.n = n;
    s.dt = dt;
    s.dx = dx;
    s.x_lo = grid.x_lo;
    s.nx = ia.nx;
    s.bc = grid.bc;
    s.scheme = "leapfrog";
    const int steps = step_count(grid.t_end, dt, "time");
    dt = grid.t_end / steps;
    s.dt = dt;
    s.levels = steps + 1;
    s.phi.assign(uz(n), Array(uz(s.levels * s.nx), 0.0));
    const int nx = s.nx;
    const bool periodic = grid.bc == Boundary::Periodic;
    auto wrap = [&](int ix) { return periodic ? ((ix % nx) + nx) % nx : ix; };

    std::vector<double> vals(b.slots.size());
    Eigen::MatrixXd T(n, n);
    Eigen::VectorXd r(n);
    // d2 phi / dt2 at level it from given y, time derivative, space derivatives.
    auto accel = [&](int it, int ix, const std::vector<double>& y, const std::vector<double>& vt, const std::vector<double>& vx,
                     const std::vector<double>& xx, std::vector<double>& out) {
        vals[0] = it * dt;
        vals[1] = s.x(ix);
        for (int A = 0; A < n; ++A) {
            vals[uz(2 + A)] = y[uz(A)];
            vals[uz(2 + n + 2 * A)] = vt[uz(A)];
            vals[uz(2 + n + 2 * A + 1)] = vx[uz(A)];
        }
        if (n == 1) {
            out[0] = (b.rhs[0](vals) - b.xx[0](vals) * xx[0]) / b.tt[0](vals);
            return;
        }
        for (int B = 0; B < n; ++B) {
            double rb = b.rhs[uz(B)](vals);
            for (int A = 0; A < n; ++A) {
                rb -= b.xx[uz(A * n + B)](vals) * xx[uz(A)];
                T(B, A) = b.tt[uz(A * n + B)](vals);
            }
            r(B) = rb;
        }
        const Eigen::VectorXd a = T.partialPivLu().solve(r);
        for (int A = 0; A < n; ++A) out[uz(A)] = a(A);
    };

    std::vector<double> y(uz(n)), vt(uz(n)), vx(uz(n)), xx(uz(n)), acc(uz(n));
    std::vector<Array> prev_acc(uz(n), Array(uz(nx), 0.0));
    const int first = periodic ? 0 : 1;
    const int last = periodic ? nx - 1 : nx - 2;
    for (int A = 0; A < n; ++A)
        for (int ix = 0; ix < nx; ++ix) s.at(A + 1, 0, ix) = ia.phi[uz(A)][uz(ix)];

    auto space = [&](int it, int ix) {
        for (int A = 0; A < n; ++A) {
            const double l = s.at(A + 1, it, wrap(ix - 1));
            const double c0 = s.at(A + 1, it, ix);
            const double rr = s.at(A + 1, it, wrap(ix + 1));
            y[uz(A)] = c0;
            vx[uz(A)] = (rr - l) / (2.0 * dx);
            xx[uz(A)] = (rr - 2.0 * c0 + l) / (dx * dx);
        }
    };

    // Taylor first step.
    for (int ix = 0; ix < nx; ++ix) {
        if (ix < first || ix > last) {
            for (int A = 0; A < n; ++A) s.at(A + 1, 1, ix) = s.at(A + 1, 0, ix);
            continue;
        }
        space(0, ix);
        for (int A = 0; A < n; ++A) vt[uz(A)] = ia.dphi[uz(A)][uz(ix)];
        accel(0, ix, y, vt, vx, xx, acc);
        for (int A = 0; A < n; ++A) {
            prev_acc[uz(A)][uz(ix)] = acc[uz(A)];
            s.at(A + 1, 1, ix) = y[uz(A)] + dt * vt[uz(A)] + 0.5 * dt * dt * acc[uz(A)];
        }
    }
    for (int it = 1; it < steps; ++it) {
        bool finite = true;
        for (int ix = 0; ix < nx; ++ix) {
            if (ix < first || ix > last) {
                for (int A = 0; A < n; ++A) s.at(A + 1, it + 1, ix) = s.at(A + 1, it, ix);
                continue;
            }
            space(it, ix);
            for (int A = 0; A < n; ++A)
                vt[uz(A)] = (y[uz(A)] - s.at(A + 1, it - 1, ix)) / dt + 0.5 * dt * prev_acc[uz(A)][uz(ix)];
            accel(it, ix, y, vt, vx, xx, acc);
            for (int A = 0; A < n; ++A) {
                prev_acc[uz(A)][uz(ix)] = acc[uz(A)];
                const double next = 2.0 * y[uz(A)] - s.at(A + 1, it - 1, ix) + dt * dt * acc[uz(A)];
                finite = finite && std::isfinite(next);
                s.at(A + 1, it + 1, ix) = next;
            }
        }
        if (!finite) {
            s.diagnostic = "non-finite values at x_1 = " + std::to_string((it + 1) * dt) + "; section truncated";
            s.levels = it + 1;
            for (auto& f : s.phi) f.resize(uz(s.levels * nx));
            break;
        }
    }
    return s;
}

NumericSection integrate(const LagrangianSystem& sys, const InitialData& init, const Grid& grid)
{
    if (sys.m() == 1) {
        std::vector<double> y0, v0;
        for (const auto& e : init.phi) y0.push_back(eval_constant(e, "init_phi"));
        for (const auto& e : init.dphi) v0.push_back(eval_constant(e, "init_dphi"));
        return integrate_m1(sys, y0, v0, grid);
    }
    if (sys.m() == 2) return integrate_m2(sys, init, grid);
    throw NumericError("numerical integration supports m = 1 and m = 2 only");
}

ELResidual el_residual(const LagrangianSystem& sys, const NumericSection& s)
{
    const Mesh mesh(s);
    const Jet2 j(s, mesh, true);
    const auto slots = section_slots(s.m, s.n);
    std::vector<CompiledExpr> eqs;
    for (const auto& e : euler_lagrange_equations(sys)) eqs.emplace_back(e, slots);
    std::vector<double> vals(slots.size(), 0.0);
    NormAccumulator acc;
    ELResidual out;
    for (int it = 0; it < s.levels; ++it)
        for (int ix = 0; ix < s.nx; ++ix) {
            if (!mesh.interior(it, ix, kResidualMargin)) continue;
            const std::size_t q = uz(it * s.nx + ix);
            std::size_t k = 0;
            vals[k++] = s.t(it);
            if (s.m >= 2) vals[k++] = s.x(ix);
            for (int A = 0; A < s.n; ++A) vals[k++] = j.phi[uz(A)][q];
            for (int A = 0; A < s.n; ++A)
                for (int a = 0; a < s.m; ++a) vals[k++] = j.d1[uz(A)][uz(a)][q];
            for (int A = 0; A < s.n; ++A)
                for (int a = 0; a < s.m; ++a)
                    for (int b = a; b < s.m; ++b) vals[k++] = j.d2[uz(A)][uz(a)][uz(b)][q];
            double worst = 0.0;
            for (const auto& e : eqs) {
                const double r = e(vals);
                acc.add(r);
                worst = std::max(worst, std::abs(r));
            }
            ++acc.points;
            out.field.push_back(worst);
        }
    out.norms = acc.finish(mesh.cell());
    return out;
}

OperatorResidual operator_residual(const FieldOperator& k, const LagrangianSystem& sys, const NumericSection& s)
{
    if (k.m != s.m || k.n != s.n) throw NumericError("operator and section dimensions differ");
    const int m = s.m;
    const int n = s.n;
    const Mesh mesh(s);
    const Jet2 j(s, mesh, false);
    const MomentumArrays mom = momenta(sys, s, mesh, j);
    const auto slots = jet_slots(sys);
    std::vector<CompiledExpr> cf, cg, clx;
    for (const auto& e : k.f) cf.emplace_back(e, slots);
    for (const auto& e : k.g) cg.emplace_back(e, slots);
    for (int a = 1; a <= m; ++a) clx.emplace_back(sys.dL_dx(a), slots);
    const auto nk = static_cast<Eigen::Index>(k.kernel.size());
    const auto ng = static_cast<Eigen::Index>(k.g.size());
    std::vector<std::vector<CompiledExpr>> ck(k.kernel.size());
    for (std::size_t i = 0; i < k.kernel.size(); ++i)
        for (const auto& e : k.kernel[i]) ck[i].emplace_back(e, slots);

    NormAccumulator nf, ngm, nraw, nh, nhp;
    std::vector<double> vals(slots.size());
    Eigen::VectorXd r(ng);
    Eigen::MatrixXd K(ng, nk);
    std::vector<double> gm(uz(static_cast<int>(ng)));
    for (int it = 0; it < s.levels; ++it)
        for (int ix = 0; ix < s.nx; ++ix) {
            if (!mesh.interior(it, ix, kResidualMargin)) continue;
            const std::size_t q = uz(it * s.nx + ix);
            fill_jet(vals, s, j, it, ix);
            for (int A = 0; A < n; ++A)
                for (int a = 0; a < m; ++a) nf.add(j.d1[uz(A)][uz(a)][q] - cf[uz(A * m + a)](vals));
            for (int A = 0; A < n; ++A)
                for (int a = 0; a < m; ++a)
                    for (int e = 0; e < m; ++e) {
                        const auto idx = static_cast<Eigen::Index>((A * m + a) * m + e);
                        gm[uz(static_cast<int>(idx))] = cg[uz(static_cast<int>(idx))](vals);
                        r(idx) = mom.dp[uz(A)][uz(e)][uz(a)][q] - gm[uz(static_cast<int>(idx))];
                        nraw.add(r(idx));
                    }
            if (nk > 0) {
                for (Eigen::Index i = 0; i < nk; ++i)
                    for (Eigen::Index row = 0; row < ng; ++row) K(row, i) = ck[uz(static_cast<int>(i))][uz(static_cast<int>(row))](vals);
                const Eigen::VectorXd c = K.colPivHouseholderQr().solve(r);
                const Eigen::VectorXd shift = K * c;
                for (Eigen::Index row = 0; row < ng; ++row) {
                    gm[uz(static_cast<int>(row))] += shift(row);
                    r(row) -= shift(row);
                }
            }
            for (Eigen::Index row = 0; row < ng; ++row) ngm.add(r(row));
            auto g_at = [&](int A, int a, int e) { return gm[uz((A * m + a) * m + e)]; };
            auto v_at = [&](int A, int a) { return j.d1[uz(A)][uz(a)][q]; };
            for (int a = 0; a < m; ++a) {
                double uni = clx[uz(a)](vals);
                double pri = uni;
                for (int A = 0; A < n; ++A)
                    for (int e = 0; e < m; ++e) {
                        const double term = g_at(A, e, e) * v_at(A, a) - g_at(A, a, e) * v_at(A, e);
                        uni += term;
                        if (e != a) pri += ((e + 1) % 2 == 0) ? -term : term;
                    }
                nh.add(mom.dpa[uz(a)][q] - uni);
                nhp.add(mom.dpa[uz(a)][q] - pri);
            }
            ++nf.points;
            ++ngm.points;
            ++nraw.points;
            ++nh.points;
            ++nhp.points;
        }
    const double cell = mesh.cell();
    return {nf.finish(cell), ngm.finish(cell), nraw.finish(cell), nh.finish(cell), nhp.finish(cell)};
}

HDWResidual hdw_residual(const HamiltonianSystem& h, const LagrangianSystem& sys, const NumericSection& s)
{
    if (h.m != s.m || h.n != s.n) throw NumericError("Hamiltonian and section dimensions differ");
    const int m = s.m;
    const int n = s.n;
    const Mesh mesh(s);
    const Jet2 j(s, mesh, false);
    const MomentumArrays mom = momenta(sys, s, mesh, j);
    const auto slots = section_slots(m, n);
    std::vector<CompiledExpr> eqs;
    for (const auto& e : hdw_equations(h)) eqs.emplace_back(e, slots);
    const std::size_t first = uz(n * m);
    NormAccumulator a1, a2, at;
    std::vector<double> vals(slots.size(), 0.0);
    const std::size_t d2_count = uz(n * m * (m + 1) / 2);
    for (int it = 0; it < s.levels; ++it)
        for (int ix = 0; ix < s.nx; ++ix) {
            if (!mesh.interior(it, ix, kResidualMargin)) continue;
            const std::size_t q = uz(it * s.nx + ix);
            std::size_t k = 0;
            vals[k++] = s.t(it);
            if (m >= 2) vals[k++] = s.x(ix);
            for (int A = 0; A < n; ++A) vals[k++] = j.phi[uz(A)][q];
            for (int A = 0; A < n; ++A)
                for (int a = 0; a < m; ++a) vals[k++] = j.d1[uz(A)][uz(a)][q];
            k += d2_count;
            for (int A = 0; A < n; ++A)
                for (int a = 0; a < m; ++a) vals[k++] = mom.p[uz(A)][uz(a)][q];
            for (int A = 0; A < n; ++A)
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) vals[k++] = mom.dp[uz(A)][uz(a)][uz(b)][q];
            for (std::size_t e = 0; e < eqs.size(); ++e) {
                const double r = eqs[e](vals);
                (e < first ? a1 : a2).add(r);
                at.add(r);
            }
            ++a1.points;
            ++a2.points;
            ++at.points;
        }
    const double cell = mesh.cell();
    return {a1.finish(cell), a2.finish(cell), at.finish(cell)};
}

std::vector<double> energy(const LagrangianSystem& sys, const NumericSection& s)
{
    const Mesh mesh(s);
    const Jet2 j(s, mesh, false);
    const auto slots = jet_slots(sys);
    Expr density = -sys.lagrangian();
    for (int A = 1; A <= s.n; ++A) density += sym(sys.v(A, 1)) * sys.dL_dv(A, 1);
    const CompiledExpr ce(density, slots);
    std::vector<double> vals(slots.size());
    std::vector<double> out;
    for (int it = 2; it < s.levels - 2; ++it) {
        double e = 0.0;
        for (int ix = 0; ix < s.nx; ++ix) {
            if (s.m == 2 && s.bc == Boundary::Dirichlet && (ix < 2 || ix > s.nx - 3)) continue;
            fill_jet(vals, s, j, it, ix);
            e += ce(vals);
        }
        out.push_back(s.m == 1 ? e : e * s.dx);
    }
    return out;
}

double energy_drift(const LagrangianSystem& sys, const NumericSection& s)
{
    const auto e = energy(sys, s);
    if (e.empty()) throw NumericError("section too short for an energy estimate");
    double worst = 0.0;
    const double scale = std::max(std::abs(e.front()), 1e-300);
    for (double v : e) worst = std::max(worst, std::abs(v - e.front()) / scale);
    return worst;
}

NumericSection perturb(const NumericSection& s, double amplitude, std::uint64_t seed)
{
    NumericSection p = s;
    std::mt19937_64 rng(seed);
    const double two_pi = 2.0 * std::numbers::pi;
    const double span = s.bc == Boundary::Periodic ? s.nx * s.dx : std::max((s.nx - 1) * s.dx, 1e-300);
    for (int A = 1; A <= s.n; ++A) {
        const double ph1 = two_pi * unit_uniform(rng);
        const double ph2 = two_pi * unit_uniform(rng);
        const double omega = 3.0 + 2.0 * unit_uniform(rng);
        for (int it = 0; it < s.levels; ++it)
            for (int ix = 0; ix < s.nx; ++ix) {
                double w = std::sin(omega * s.t(it) + ph1);
                if (s.m == 2) w *= std::sin(two_pi * 3.0 * (s.x(ix) - s.x_lo) / span + ph2);
                p.at(A, it, ix) += amplitude * w;
            }
    }
    p.scheme = s.scheme + "+perturbed";
    p.seed = seed;
    return p;
}

void write_csv(std::ostream& os, const NumericSection& s)
{
    os << "x_1";
    if (s.m == 2) os << ",x_2";
    for (int A = 1; A <= s.n; ++A) os << ",phi_" << A;
    os << "\n";
    char buf[64];
    for (int it = 0; it < s.levels; ++it)
        for (int ix = 0; ix < s.nx; ++ix) {
            std::snprintf(buf, sizeof buf, "%.17g", s.t(it));
            os << buf;
            if (s.m == 2) {
                std::snprintf(buf, sizeof buf, "%.17g", s.x(ix));
                os << "," << buf;
            }
            for (int A = 1; A <= s.n; ++A) {
                std::snprintf(buf, sizeof buf, "%.17g", s.at(A, it, ix));
                os << "," << buf;
            }
            os << "\n";
        }
}

}  // namespace msym
