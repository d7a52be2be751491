#include "msym/lagrangian.hpp"

#include <array>
#include <set>

namespace msym {

LagrangianSystem::LagrangianSystem(int m, int n, Expr lagrangian) : m_(m), n_(n), jet_(Chart::jet(m, n)), L_(std::move(lagrangian))
{
    if (m < 1 || n < 1) throw std::invalid_argument("Lagrangian system needs m >= 1 and N >= 1");
    for (const auto& s : free_symbols(L_))
        if (s.chart != ChartKind::Jet || jet_.index_of(s) < 0)
            throw std::invalid_argument("Lagrangian uses " + s.name() + ", which is not a jet coordinate");
    for (int a = 1; a <= m; ++a) dx_.push_back(differentiate(L_, x(a)));
    for (int A = 1; A <= n; ++A) dy_.push_back(differentiate(L_, y(A)));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) dv_.push_back(differentiate(L_, v(A, a)));
    const std::size_t nm = static_cast<std::size_t>(n * m);
    hess_.assign(nm, std::vector<Expr>(nm));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            for (int B = 1; B <= n; ++B)
                for (int b = 1; b <= m; ++b) {
                    const auto i = static_cast<std::size_t>(vindex(A, a));
                    const auto j = static_cast<std::size_t>(vindex(B, b));
                    if (j < i) {
                        hess_[i][j] = hess_[j][i];
                        continue;
                    }
                    hess_[i][j] = differentiate(dL_dv(A, a), v(B, b));
                }
    affine_ = L_;
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) affine_ -= sym(v(A, a)) * dL_dv(A, a);
    for (int B = 1; B <= n; ++B) {
        Expr r = dL_dy(B);
        for (int nu = 1; nu <= m; ++nu) {
            r -= differentiate(dL_dv(B, nu), x(nu));
            for (int A = 1; A <= n; ++A) r -= differentiate(dL_dv(B, nu), y(A)) * sym(v(A, nu));
        }
        rhs_.push_back(r);
    }
}

PoincareCartan poincare_cartan(const LagrangianSystem& sys)
{
    const Chart& c = sys.jet();
    DiffForm theta = sys.energy_term() * volume_form(c);
    for (int A = 1; A <= sys.n(); ++A)
        for (int a = 1; a <= sys.m(); ++a)
            theta = theta + sys.dL_dv(A, a) * wedge(DiffForm::basis(c, sys.y(A)), volume_minus(c, a));
    return {theta, -exterior_derivative(theta)};
}

DiffForm omega_expanded(const LagrangianSystem& sys)
{
    const Chart& c = sys.jet();
    const int m = sys.m();
    const int n = sys.n();
    DiffForm omega(c, m + 1);
    const DiffForm vol = volume_form(c);
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a) {
            const DiffForm dy_vol = wedge(DiffForm::basis(c, sys.y(A)), volume_minus(c, a));
            for (int B = 1; B <= n; ++B) {
                const Expr lyv = differentiate(sys.dL_dv(A, a), sys.y(B));
                omega = omega - lyv * wedge(DiffForm::basis(c, sys.y(B)), dy_vol);
                for (int nu = 1; nu <= m; ++nu) {
                    const Expr& h = sys.hessian(B, nu, A, a);
                    if (h.is_zero()) continue;
                    const DiffForm dv = DiffForm::basis(c, sys.v(B, nu));
                    omega = omega - h * wedge(dv, dy_vol);
                    omega = omega + (h * sym(sys.v(A, a))) * wedge(dv, vol);
                }
            }
        }
    for (int B = 1; B <= n; ++B) {
        Expr coef = -sys.dL_dy(B);
        for (int a = 1; a <= m; ++a) {
            coef += differentiate(sys.dL_dv(B, a), sys.x(a));
            for (int A = 1; A <= n; ++A) coef += differentiate(sys.dL_dv(A, a), sys.y(B)) * sym(sys.v(A, a));
        }
        omega = omega + coef * wedge(DiffForm::basis(c, sys.y(B)), vol);
    }
    return omega;
}

std::string Regularity::str() const
{
    if (kind == RegularityKind::Singular) return "singular (rank " + std::to_string(rank) + ")";
    return hyper_regular_candidate ? "regular (hyper-regular candidate)" : "regular";
}

Regularity classify_regularity(const LagrangianSystem& sys, const ZeroOptions& opts)
{
    Regularity r;
    r.determinant = determinant(sys.hessian());
    const int full = sys.n() * sys.m();
    bool constant_hessian = true;
    for (const auto& row : sys.hessian())
        for (const auto& e : row) constant_hessian = constant_hessian && e.is_number();
    if (r.determinant.is_number() && !r.determinant.is_zero()) {
        r.rank = full;
        r.hyper_regular_candidate = constant_hessian;
        return r;
    }
    const ZeroResult z = is_zero(r.determinant, opts);
    r.evidence = z.evidence;
    if (!z.zero) {
        r.rank = full;
        return r;
    }
    r.kind = RegularityKind::Singular;
    std::set<Symbol> fs;
    for (const auto& row : sys.hessian())
        for (const auto& e : row)
            for (const auto& s : free_symbols(e)) fs.insert(s);
    const std::vector<Symbol> syms(fs.begin(), fs.end());
    std::mt19937_64 rng(opts.seed);
    int rank = -1;
    const int samples = syms.empty() ? 1 : opts.samples;
    for (int k = 0; k < samples; ++k) {
        Point p = sample_point(rng, syms, opts.box);
        if (opts.project) p = opts.project(p);
        const int rk = numeric_rank(sys.hessian(), p);
        if (rank >= 0 && rk != rank)
            throw RegularityError("non-constant rank of the velocity Hessian (" + std::to_string(rank) + " vs " +
                                  std::to_string(rk) + " at " + format_point(p) + "); almost-regular hypotheses violated");
        rank = rk;
    }
    r.rank = rank;
    r.evidence = syms.empty() ? Evidence::Structural : Evidence::Numeric;
    return r;
}

Expr along_prolongation(const Expr& e)
{
    std::map<Symbol, Expr> b;
    for (const auto& s : free_symbols(e)) {
        switch (s.role) {
        case Role::Base: b[s] = sym(Symbol::base(ChartKind::Section, s.i)); break;
        case Role::Fiber: b[s] = sym(Symbol::field(s.i)); break;
        case Role::Velocity: b[s] = sym(Symbol::field_d1(s.i, s.j)); break;
        default: throw std::invalid_argument("along_prolongation: " + s.name() + " is not a jet coordinate");
        }
    }
    return substitute(e, b, ChartKind::Jet);
}

Expr total_derivative(const Expr& f, int alpha, int m, int n)
{
    Expr d = differentiate(f, Symbol::base(ChartKind::Section, alpha));
    for (int A = 1; A <= n; ++A) {
        d += differentiate(f, Symbol::field(A)) * sym(Symbol::field_d1(A, alpha));
        for (int nu = 1; nu <= m; ++nu) d += differentiate(f, Symbol::field_d1(A, nu)) * sym(Symbol::field_d2(A, nu, alpha));
        for (int nu = 1; nu <= m; ++nu) d += differentiate(f, Symbol::sec_momentum(A, nu)) * sym(Symbol::sec_momentum_d1(A, nu, alpha));
    }
    return d;
}

std::vector<Expr> euler_lagrange_equations(const LagrangianSystem& sys)
{
    std::vector<Expr> out;
    for (int A = 1; A <= sys.n(); ++A) {
        Expr r = along_prolongation(sys.dL_dy(A));
        for (int a = 1; a <= sys.m(); ++a) r -= total_derivative(along_prolongation(sys.dL_dv(A, a)), a, sys.m(), sys.n());
        out.push_back(r);
    }
    return out;
}

ExprMatrix el_system_matrix(const LagrangianSystem& sys)
{
    const int m = sys.m();
    const int n = sys.n();
    ExprMatrix M(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n * m * m)));
    // Row B: sum_{A, a, nu} Hess_{(A,a),(B,nu)} G^A_{nu a}
    for (int B = 1; B <= n; ++B)
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a)
                for (int nu = 1; nu <= m; ++nu)
                    M[static_cast<std::size_t>(B - 1)][static_cast<std::size_t>(sys.gindex(A, nu, a))] = sys.hessian(A, a, B, nu);
    return M;
}

ELCoefficients solve_el_coefficients(const LagrangianSystem& sys, const ZeroOptions& opts)
{
    const int m = sys.m();
    const int n = sys.n();
    const ExprMatrix full = el_system_matrix(sys);
    ELCoefficients out;
    const LinearSolution fsol = solve_linear(full, sys.el_rhs(), opts);
    out.kernel = fsol.kernel;
    out.rank = fsol.rank;

    // Symmetric unknowns s(A, a <= b), with G^A_{ab} = G^A_{ba} = s.
    std::vector<std::array<int, 3>> sidx;
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            for (int b = a; b <= m; ++b) sidx.push_back({A, a, b});
    ExprMatrix S(static_cast<std::size_t>(n), std::vector<Expr>(sidx.size()));
    for (int B = 0; B < n; ++B)
        for (std::size_t k = 0; k < sidx.size(); ++k) {
            const auto [A, a, b] = sidx[k];
            Expr c = full[static_cast<std::size_t>(B)][static_cast<std::size_t>(sys.gindex(A, a, b))];
            if (a != b) c += full[static_cast<std::size_t>(B)][static_cast<std::size_t>(sys.gindex(A, b, a))];
            S[static_cast<std::size_t>(B)][k] = c;
        }
    const LinearSolution ssol = solve_linear(S, sys.el_rhs(), opts);
    out.G.assign(static_cast<std::size_t>(n * m * m), Expr());
    if (ssol.consistent) {
        for (std::size_t k = 0; k < sidx.size(); ++k) {
            const auto [A, a, b] = sidx[k];
            out.G[static_cast<std::size_t>(sys.gindex(A, a, b))] = ssol.particular[k];
            out.G[static_cast<std::size_t>(sys.gindex(A, b, a))] = ssol.particular[k];
        }
    } else {
        out.symmetric = false;
        out.G = fsol.particular;
    }
    out.consistent = fsol.consistent;
    out.obstructions = fsol.obstructions;
    return out;
}

std::vector<Expr> el_coefficient_residuals(const LagrangianSystem& sys, const std::vector<Expr>& G)
{
    const ExprMatrix M = el_system_matrix(sys);
    std::vector<Expr> r = multiply(M, G);
    for (std::size_t B = 0; B < r.size(); ++B) r[B] -= sys.el_rhs()[B];
    return r;
}

MultiVec el_multivector(const LagrangianSystem& sys, const std::vector<Expr>& G, const ZeroOptions& opts)
{
    for (const auto& r : el_coefficient_residuals(sys, G))
        if (!is_zero(r, opts).zero) throw CoefficientError("coefficients do not solve the Euler-Lagrange system: residual " + r.str());
    const Chart& c = sys.jet();
    MultiVec X{c, {}};
    for (int a = 1; a <= sys.m(); ++a) {
        VectorField v = VectorField::coordinate(c, sys.x(a));
        for (int A = 1; A <= sys.n(); ++A) {
            v.at(sys.y(A)) = sym(sys.v(A, a));
            for (int nu = 1; nu <= sys.m(); ++nu) v.at(sys.v(A, nu)) = G[static_cast<std::size_t>(sys.gindex(A, a, nu))];
        }
        X.comps.push_back(std::move(v));
    }
    return X;
}

}  // namespace msym
