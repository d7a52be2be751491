#include "msym/hamiltonian.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <set>

namespace msym {

namespace {

// Renames base/fiber symbols of a jet expression into another chart.
Expr relabel_base_fiber(const Expr& e, ChartKind from, ChartKind to)
{
    std::map<Symbol, Expr> b;
    for (const auto& s : free_symbols(e)) {
        if (s.chart != from || (s.role != Role::Base && s.role != Role::Fiber)) continue;
        Symbol t = s;
        t.chart = to;
        b[s] = sym(t);
    }
    if (b.empty()) return e;
    return substitute(e, b);
}

std::map<Symbol, Expr> base_fiber_bindings(int m, int n, ChartKind from, ChartKind to)
{
    std::map<Symbol, Expr> b;
    for (int a = 1; a <= m; ++a) b[Symbol::base(from, a)] = sym(Symbol::base(to, a));
    for (int A = 1; A <= n; ++A) b[Symbol::fiber(from, A)] = sym(Symbol::fiber(to, A));
    return b;
}

}  // namespace

CoordMap extended_legendre(const LagrangianSystem& sys)
{
    std::vector<Expr> img;
    for (int a = 1; a <= sys.m(); ++a) img.push_back(sym(sys.x(a)));
    for (int A = 1; A <= sys.n(); ++A) img.push_back(sym(sys.y(A)));
    for (int A = 1; A <= sys.n(); ++A)
        for (int a = 1; a <= sys.m(); ++a) img.push_back(sys.dL_dv(A, a));
    img.push_back(sys.energy_term());
    return {sys.jet(), Chart::extended(sys.m(), sys.n()), std::move(img)};
}

CoordMap restricted_legendre(const LagrangianSystem& sys)
{
    return compose(mu_projection(sys.m(), sys.n()), extended_legendre(sys));
}

CoordMap mu_projection(int m, int n) { return projection(Chart::extended(m, n), Chart::restricted(m, n)); }

DiffForm liouville_theta(int m, int n)
{
    const Chart e = Chart::extended(m, n);
    DiffForm theta = sym(Symbol::affine_momentum()) * volume_form(e);
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            theta = theta + sym(Symbol::momentum(ChartKind::Extended, A, a)) *
                                wedge(DiffForm::basis(e, Symbol::fiber(ChartKind::Extended, A)), volume_minus(e, a));
    return theta;
}

DiffForm liouville_omega(int m, int n) { return -exterior_derivative(liouville_theta(m, n)); }

HamiltonianSystem make_hamiltonian(int m, int n, Expr H, std::string provenance)
{
    HamiltonianSystem h;
    h.m = m;
    h.n = n;
    h.chart = Chart::restricted(m, n);
    for (const auto& s : free_symbols(H))
        if (h.chart.index_of(s) < 0)
            throw std::invalid_argument("Hamiltonian uses " + s.name() + ", which is not a restricted multimomentum coordinate");
    h.H = std::move(H);
    h.provenance = std::move(provenance);
    DiffForm theta = -h.H * volume_form(h.chart);
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            theta = theta + sym(h.p(A, a)) * wedge(DiffForm::basis(h.chart, h.y(A)), volume_minus(h.chart, a));
    h.theta = theta;
    h.omega = -exterior_derivative(theta);
    return h;
}

HamiltonianSystem hamiltonian_from_legendre(const LagrangianSystem& sys, const std::optional<std::map<Symbol, Expr>>& user_inverse,
                                            const ZeroOptions& opts)
{
    const int m = sys.m();
    const int n = sys.n();
    const Chart r = Chart::restricted(m, n);
    std::map<Symbol, Expr> vofp;  // v^A_a -> expression in restricted coordinates
    std::string provenance;

    if (user_inverse) {
        for (const auto& [s, e] : *user_inverse) {
            if (s.role != Role::Velocity || sys.jet().index_of(s) < 0)
                throw HamiltonianError("inverse Legendre entry for " + s.name() + " is not a velocity");
            for (const auto& t : free_symbols(e))
                if (r.index_of(t) < 0) throw HamiltonianError("inverse Legendre expression uses " + t.name());
        }
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a)
                if (!user_inverse->count(sys.v(A, a)))
                    throw HamiltonianError("inverse Legendre map is missing " + sys.v(A, a).name());
        vofp = *user_inverse;
        provenance = "user-inverse";
    } else {
        bool constant = true;
        for (const auto& row : sys.hessian())
            for (const auto& e : row) constant = constant && e.is_number();
        const Expr det = determinant(sys.hessian());
        if (constant && det.is_zero())
            throw HamiltonianError("momenta relations are not invertible (singular Lagrangian); use constraints with a "
                                   "Hamiltonian on the Legendre image");
        if (!constant)
            throw HamiltonianError("automatic velocity inversion needs momenta affine in v with a constant matrix; "
                                   "provide inverse_legendre expressions");
        // p = Hess v + c(x, y)  =>  v = Hess^{-1} (p - c)
        std::map<Symbol, Expr> zero_v;
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a) zero_v[sys.v(A, a)] = Expr();
        std::vector<Expr> rhs;
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a)
                rhs.push_back(sym(Symbol::momentum(ChartKind::Restricted, A, a)) -
                              relabel_base_fiber(substitute(sys.dL_dv(A, a), zero_v), ChartKind::Jet, ChartKind::Restricted));
        const LinearSolution sol = solve_linear(sys.hessian(), rhs, opts);
        if (!sol.consistent || !sol.kernel.empty()) throw HamiltonianError("velocity Hessian is singular");
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a) vofp[sys.v(A, a)] = sol.particular[static_cast<std::size_t>(sys.vindex(A, a))];
        provenance = "legendre-inversion";
    }

    // Round trips: FL o inverse = id on momenta, inverse o FL = id on velocities.
    std::map<Symbol, Expr> to_p = base_fiber_bindings(m, n, ChartKind::Jet, ChartKind::Restricted);
    for (const auto& [s, e] : vofp) to_p[s] = e;
    const CoordMap fl = restricted_legendre(sys);
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) {
            const Expr back = substitute(sys.dL_dv(A, a), to_p) - sym(Symbol::momentum(ChartKind::Restricted, A, a));
            const ZeroResult z1 = is_zero(back, opts);
            if (!z1.zero)
                throw HamiltonianError("inverse Legendre map fails the round trip FL(v(p)) = p for p_" + std::to_string(A) +
                                       "_" + std::to_string(a) + ": residual " + back.str());
            const Expr fwd = fl.pull(vofp.at(sys.v(A, a))) - sym(sys.v(A, a));
            const ZeroResult z2 = is_zero(fwd, opts);
            if (!z2.zero)
                throw HamiltonianError("inverse Legendre map fails the round trip v(FL(v)) = v for " + sys.v(A, a).name() +
                                       ": residual " + fwd.str());
        }

    Expr H = -substitute(sys.lagrangian(), to_p);
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) H += sym(Symbol::momentum(ChartKind::Restricted, A, a)) * vofp.at(sys.v(A, a));
    HamiltonianSystem h = make_hamiltonian(m, n, H, provenance);

    std::vector<Expr> inv_img;
    for (int a = 1; a <= m; ++a) inv_img.push_back(sym(h.x(a)));
    for (int A = 1; A <= n; ++A) inv_img.push_back(sym(h.y(A)));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) inv_img.push_back(vofp.at(sys.v(A, a)));
    h.inverse = CoordMap(r, sys.jet(), std::move(inv_img));

    std::string failing;
    if (!is_zero(pullback(h.theta, fl) - poincare_cartan(sys).theta, opts, &failing).zero)
        throw HamiltonianError("Legendre pullback of the Hamilton-Cartan form differs from the Poincare-Cartan form: " + failing);
    return h;
}

CoordMap hamiltonian_section(const HamiltonianSystem& h)
{
    std::vector<Expr> img;
    for (const auto& s : h.chart.coords()) img.push_back(sym(s));
    img.push_back(-h.H);
    return {h.chart, Chart::extended(h.m, h.n), std::move(img)};
}

namespace {

Expr along_hamiltonian_section(const Expr& e)
{
    std::map<Symbol, Expr> b;
    for (const auto& s : free_symbols(e)) {
        switch (s.role) {
        case Role::Base: b[s] = sym(Symbol::base(ChartKind::Section, s.i)); break;
        case Role::Fiber: b[s] = sym(Symbol::field(s.i)); break;
        case Role::Momentum: b[s] = sym(Symbol::sec_momentum(s.i, s.j)); break;
        default: throw std::invalid_argument(s.name() + " is not a restricted multimomentum coordinate");
        }
    }
    return substitute(e, b, ChartKind::Restricted);
}

}  // namespace

std::vector<Expr> hdw_equations(const HamiltonianSystem& h)
{
    std::vector<Expr> out;
    for (int A = 1; A <= h.n; ++A)
        for (int a = 1; a <= h.m; ++a)
            out.push_back(sym(Symbol::field_d1(A, a)) - along_hamiltonian_section(differentiate(h.H, h.p(A, a))));
    for (int A = 1; A <= h.n; ++A) {
        Expr r = along_hamiltonian_section(differentiate(h.H, h.y(A)));
        for (int a = 1; a <= h.m; ++a) r += sym(Symbol::sec_momentum_d1(A, a, a));
        out.push_back(r);
    }
    return out;
}

MomentumTable default_hdw_table(const HamiltonianSystem& h)
{
    MomentumTable g(static_cast<std::size_t>(h.n * h.m * h.m));
    for (int A = 1; A <= h.n; ++A) {
        const Expr share = -differentiate(h.H, h.y(A)) / Expr(h.m);
        for (int a = 1; a <= h.m; ++a) g[static_cast<std::size_t>(((A - 1) * h.m + (a - 1)) * h.m + (a - 1))] = share;
    }
    return g;
}

MultiVec hdw_multivector(const HamiltonianSystem& h, const std::optional<MomentumTable>& free, const ZeroOptions& opts)
{
    const MomentumTable g = free ? *free : default_hdw_table(h);
    if (g.size() != static_cast<std::size_t>(h.n * h.m * h.m)) throw HamiltonianError("momentum table has the wrong size");
    auto at = [&](int A, int a, int nu) -> const Expr& { return g[static_cast<std::size_t>(((A - 1) * h.m + (a - 1)) * h.m + (nu - 1))]; };
    for (int A = 1; A <= h.n; ++A) {
        Expr tr = differentiate(h.H, h.y(A));
        for (int a = 1; a <= h.m; ++a) tr += at(A, a, a);
        if (!is_zero(tr, opts).zero)
            throw HamiltonianError("trace relation violated for field " + std::to_string(A) + ": residual " + tr.str());
    }
    MultiVec X{h.chart, {}};
    for (int a = 1; a <= h.m; ++a) {
        VectorField v = VectorField::coordinate(h.chart, h.x(a));
        for (int A = 1; A <= h.n; ++A) {
            v.at(h.y(A)) = differentiate(h.H, h.p(A, a));
            for (int nu = 1; nu <= h.m; ++nu) v.at(h.p(A, nu)) = at(A, a, nu);
        }
        X.comps.push_back(std::move(v));
    }
    return X;
}

int hdw_freedom(const HamiltonianSystem& h)
{
    ExprMatrix T(static_cast<std::size_t>(h.n), std::vector<Expr>(static_cast<std::size_t>(h.n * h.m * h.m)));
    for (int A = 1; A <= h.n; ++A)
        for (int a = 1; a <= h.m; ++a) T[static_cast<std::size_t>(A - 1)][static_cast<std::size_t>(((A - 1) * h.m + (a - 1)) * h.m + (a - 1))] = Expr(1);
    std::vector<Expr> rhs;
    for (int A = 1; A <= h.n; ++A) rhs.push_back(-differentiate(h.H, h.y(A)));
    return static_cast<int>(solve_linear(T, rhs).kernel.size());
}

Point project_onto_constraints(const Point& start, const std::vector<Expr>& constraints, double tol)
{
    std::set<Symbol> fs;
    for (const auto& c : constraints)
        for (const auto& s : free_symbols(c)) fs.insert(s);
    const std::vector<Symbol> syms(fs.begin(), fs.end());
    Point p = start;
    for (const auto& s : syms)
        if (!p.count(s)) p[s] = 0.5;
    if (syms.empty()) return p;
    std::vector<CompiledExpr> f;
    std::vector<std::vector<CompiledExpr>> jac;
    for (const auto& c : constraints) {
        f.emplace_back(c, syms);
        std::vector<CompiledExpr> row;
        for (const auto& s : syms) row.emplace_back(differentiate(c, s), syms);
        jac.push_back(std::move(row));
    }
    const auto k = static_cast<Eigen::Index>(constraints.size());
    const auto d = static_cast<Eigen::Index>(syms.size());
    std::vector<double> x(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) x[i] = p.at(syms[i]);
    auto residual = [&](const std::vector<double>& at) {
        Eigen::VectorXd r(k);
        for (Eigen::Index i = 0; i < k; ++i) r(i) = f[static_cast<std::size_t>(i)](at);
        return r;
    };
    Eigen::VectorXd r = residual(x);
    for (int it = 0; it < 100 && r.lpNorm<Eigen::Infinity>() > tol; ++it) {
        Eigen::MatrixXd J(k, d);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < d; ++j) J(i, j) = jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](x);
        const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r);
        double lambda = 1.0;
        bool moved = false;
        for (int h = 0; h < 30; ++h, lambda *= 0.5) {
            std::vector<double> trial = x;
            for (Eigen::Index j = 0; j < d; ++j) trial[static_cast<std::size_t>(j)] += lambda * step(j);
            const Eigen::VectorXd rt = residual(trial);
            if (rt.allFinite() && rt.norm() < r.norm()) {
                x = trial;
                r = rt;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    for (std::size_t i = 0; i < syms.size(); ++i) p[syms[i]] = x[i];
    return p;
}

ZeroOptions on_constraint_locus(const ZeroOptions& base, const std::vector<Expr>& constraints)
{
    ZeroOptions o = base;
    if (constraints.empty()) return o;
    o.project = [constraints, prev = base.project](const Point& p) {
        return project_onto_constraints(prev ? prev(p) : p, constraints);
    };
    return o;
}

ConstraintReport verify_constraints(const LagrangianSystem& sys, const std::vector<std::pair<std::string, Expr>>& constraints,
                                    const ZeroOptions& opts)
{
    ConstraintReport rep;
    const CoordMap fl = restricted_legendre(sys);
    std::vector<Expr> cs;
    for (const auto& [name, c] : constraints) {
        ConstraintCheck chk{name, c, fl.pull(c), {}};
        chk.result = is_zero(chk.pulled, opts);
        rep.all_vanish = rep.all_vanish && chk.result.zero;
        rep.checks.push_back(std::move(chk));
        cs.push_back(c);
    }
    if (cs.empty()) return rep;
    const Chart& r = fl.target;
    ExprMatrix J;
    for (const auto& c : cs) {
        std::vector<Expr> row;
        for (const auto& s : r.coords()) row.push_back(differentiate(c, s));
        J.push_back(std::move(row));
    }
    std::mt19937_64 rng(opts.seed);
    int rank = -1;
    for (int k = 0; k < 32; ++k) {
        const Point p = project_onto_constraints(sample_point(rng, r.coords(), opts.box), cs);
        const int rk = numeric_rank(J, p);
        if (rank >= 0 && rk != rank) rep.rank_constant = false;
        rank = std::max(rank, rk);
    }
    rep.rank = rank;
    return rep;
}

}  // namespace msym
