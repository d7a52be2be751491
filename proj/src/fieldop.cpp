#include "msym/fieldop.hpp"

#include <sstream>

namespace msym {

namespace {

std::size_t uz(int i) { return static_cast<std::size_t>(i); }

std::vector<Expr> velocities(const LagrangianSystem& sys)
{
    std::vector<Expr> f;
    for (int A = 1; A <= sys.n(); ++A)
        for (int a = 1; a <= sys.m(); ++a) f.push_back(sym(sys.v(A, a)));
    return f;
}

// Contraction of the operator with a form on its target chart, evaluated
// along the Legendre map and pulled back to the jet chart.
DiffForm contract_along(const FieldOperator& k, const DiffForm& omega)
{
    const DiffForm along = omega.map_coefficients([&](const Expr& c) { return k.legendre.pull(c); });
    return pullback(interior_mv(k.multivector(), along), k.legendre);
}

ConditionCheck form_check(const DiffForm& residual, const ZeroOptions& opts)
{
    ConditionCheck c;
    std::string failing;
    const ZeroResult z = is_zero(residual, opts, &failing);
    c.ok = z.zero;
    c.evidence = z.evidence;
    if (!z.zero) {
        c.detail = "component " + failing;
        if (z.witness) c.detail += " nonzero at " + format_point(*z.witness);
    }
    return c;
}

std::string coefficient(const Expr& e)
{
    const std::string s = e.str();
    if (e.kind() == Kind::Number || e.kind() == Kind::Symbol) return s;
    return "(" + s + ")";
}

}  // namespace

MultiVec FieldOperator::multivector() const
{
    const Chart& c = legendre.target;
    const ChartKind kind = c.kind();
    MultiVec X{c, {}};
    for (int a = 1; a <= m; ++a) {
        VectorField v = VectorField::coordinate(c, Symbol::base(kind, a));
        for (int A = 1; A <= n; ++A) {
            v.at(Symbol::fiber(kind, A)) = f_at(A, a);
            for (int eta = 1; eta <= m; ++eta) v.at(Symbol::momentum(kind, A, eta)) = g_at(A, a, eta);
        }
        if (flavor == Flavor::Extended) v.at(Symbol::affine_momentum()) = h[uz(a - 1)];
        X.comps.push_back(std::move(v));
    }
    return X;
}

std::vector<Expr> affine_component(const LagrangianSystem& sys, const std::vector<Expr>& g, AffineSign sign)
{
    const int m = sys.m();
    auto at = [&](int A, int a, int eta) -> const Expr& { return g[uz(sys.gindex(A, a, eta))]; };
    std::vector<Expr> h;
    for (int a = 1; a <= m; ++a) {
        Expr s;
        for (int A = 1; A <= sys.n(); ++A)
            for (int eta = 1; eta <= m; ++eta) {
                const Expr term = at(A, eta, eta) * sym(sys.v(A, a)) - at(A, a, eta) * sym(sys.v(A, eta));
                if (sign == AffineSign::Uniform)
                    s += term;
                else if (eta != a)
                    s += (eta % 2 == 0) ? -term : term;
            }
        h.push_back(sys.dL_dx(a) + s);
    }
    return h;
}

LinearSolution operator_coefficient_system(const LagrangianSystem& sys, const ZeroOptions& opts)
{
    const int m = sys.m();
    const int n = sys.n();
    ExprMatrix T(uz(n), std::vector<Expr>(uz(n * m * m)));
    std::vector<Expr> rhs;
    for (int A = 1; A <= n; ++A) {
        for (int a = 1; a <= m; ++a) T[uz(A - 1)][uz(sys.gindex(A, a, a))] = Expr(1);
        rhs.push_back(sys.dL_dy(A));
    }
    return solve_linear(T, rhs, opts);
}

std::vector<Expr> transport_el_coefficients(const LagrangianSystem& sys, const std::vector<Expr>& G)
{
    const int m = sys.m();
    const int n = sys.n();
    std::vector<Expr> g(uz(n * m * m));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            for (int eta = 1; eta <= m; ++eta) {
                const Expr& p = sys.dL_dv(A, eta);
                Expr e = differentiate(p, sys.x(a));
                for (int B = 1; B <= n; ++B) {
                    e += differentiate(p, sys.y(B)) * sym(sys.v(B, a));
                    for (int nu = 1; nu <= m; ++nu) e += sys.hessian(B, nu, A, eta) * G[uz(sys.gindex(B, a, nu))];
                }
                g[uz(sys.gindex(A, a, eta))] = e;
            }
    return g;
}

namespace {

FieldOperator extended_from_g(const LagrangianSystem& sys, std::vector<Expr> g, const ZeroOptions& opts)
{
    FieldOperator k;
    k.flavor = Flavor::Extended;
    k.m = sys.m();
    k.n = sys.n();
    k.legendre = extended_legendre(sys);
    k.f = velocities(sys);
    k.g = std::move(g);
    k.h = affine_component(sys, k.g);
    k.kernel = operator_coefficient_system(sys, opts).kernel;
    return k;
}

}  // namespace

FieldOperator construct_extended_operator(const LagrangianSystem& sys, const ZeroOptions& opts)
{
    const int m = sys.m();
    const int n = sys.n();
    std::vector<Expr> g;
    const ELCoefficients el = solve_el_coefficients(sys, opts);
    if (m == 1) {
        // The trace relations fix g completely.
        for (int A = 1; A <= n; ++A) g.push_back(sys.dL_dy(A));
    } else if (el.consistent) {
        g = transport_el_coefficients(sys, el.G);
    } else {
        g.assign(uz(n * m * m), Expr());
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a) g[uz(sys.gindex(A, a, a))] = sys.dL_dy(A) / Expr(m);
    }
    return extended_from_g(sys, std::move(g), opts);
}

FieldOperator restrict_operator(const FieldOperator& k)
{
    if (k.flavor != Flavor::Extended) throw OperatorError("operator is already restricted");
    FieldOperator r = k;
    r.flavor = Flavor::Restricted;
    r.h.clear();
    r.legendre = compose(mu_projection(k.m, k.n), k.legendre);
    return r;
}

bool is_semi_holonomic(const FieldOperator& k)
{
    for (int A = 1; A <= k.n; ++A)
        for (int a = 1; a <= k.m; ++a)
            if (!(k.f_at(A, a) == sym(Symbol::velocity(A, a)))) return false;
    return true;
}

DiffForm field_equation_form(const FieldOperator& k)
{
    if (k.flavor != Flavor::Extended) throw OperatorError("field_equation_form needs an extended operator");
    return contract_along(k, liouville_omega(k.m, k.n));
}

OperatorReport check_operator(const FieldOperator& k, const LagrangianSystem& sys, const std::optional<HamiltonianSystem>& h,
                              const ZeroOptions& opts)
{
    OperatorReport rep;
    const MultiVec K = k.multivector();
    const DiffForm vol = interior_mv(K, volume_form(k.legendre.target));
    auto it = vol.terms().find({});
    const Expr nv = it == vol.terms().end() ? Expr() : it->second;
    rep.normalization.ok = nv == Expr(1);
    if (!rep.normalization.ok) rep.normalization.detail = "i(K)(d^m x) = " + nv.str();

    rep.semi_holonomy.ok = true;
    for (int A = 1; A <= k.n && rep.semi_holonomy.ok; ++A)
        for (int a = 1; a <= k.m; ++a)
            if (!(k.f_at(A, a) == sym(sys.v(A, a)))) {
                rep.semi_holonomy.ok = false;
                rep.semi_holonomy.detail = "f_" + std::to_string(A) + "_" + std::to_string(a) + " = " + k.f_at(A, a).str();
                break;
            }

    if (k.flavor == Flavor::Extended) {
        rep.field_equation = form_check(field_equation_form(k), opts);
        FieldOperator printed = k;
        printed.h = affine_component(sys, k.g, AffineSign::Printed);
        rep.printed_sign = form_check(field_equation_form(printed), opts);
    } else if (h) {
        rep.field_equation = form_check(contract_along(k, h->omega), opts);
    } else {
        rep.field_equation.ok = true;
        for (int A = 1; A <= k.n; ++A) {
            Expr tr = -sys.dL_dy(A);
            for (int a = 1; a <= k.m; ++a) tr += k.g_at(A, a, a);
            const ZeroResult z = is_zero(tr, opts);
            if (z.evidence != Evidence::Structural) rep.field_equation.evidence = z.evidence;
            if (!z.zero) {
                rep.field_equation.ok = false;
                rep.field_equation.detail = "trace relation for field " + std::to_string(A) + ": residual " + tr.str();
                break;
            }
        }
    }
    return rep;
}

std::string to_string(ViewKind k)
{
    switch (k) {
    case ViewKind::MultiVector: return "multivector";
    case ViewKind::JetField: return "jet-field";
    case ViewKind::Connection: return "connection";
    }
    return "?";
}

AlongMapView as_view(const FieldOperator& k, ViewKind kind) { return {kind, k}; }

std::string AlongMapView::render() const
{
    const MultiVec K = op.multivector();
    const Chart& c = K.chart;
    auto field = [&](const VectorField& v) {
        std::string s;
        for (int i = 0; i < c.dim(); ++i) {
            const Expr& e = v.comps[uz(i)];
            if (e.is_zero()) continue;
            if (!s.empty()) s += " + ";
            if (!e.is_one()) s += coefficient(e) + "*";
            s += "d/d" + c.coord(i).name();
        }
        return s;
    };
    std::ostringstream os;
    switch (kind) {
    case ViewKind::MultiVector:
        for (int a = 1; a <= op.m; ++a) os << "K_" << a << " = " << field(K.comps[uz(a - 1)]) << "\n";
        os << "K = K_1";
        for (int a = 2; a <= op.m; ++a) os << " ^ K_" << a;
        os << "\n";
        break;
    case ViewKind::JetField: {
        auto join = [](const std::vector<Expr>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].str();
            return s;
        };
        os << "(";
        for (int i = 0; i < c.dim(); ++i) os << (i ? ", " : "") << c.coord(i).name();
        os << ") -> (f: " << join(op.f) << "; g: " << join(op.g);
        if (op.flavor == Flavor::Extended) os << "; h: " << join(op.h);
        os << ")\n";
        break;
    }
    case ViewKind::Connection:
        for (int a = 1; a <= op.m; ++a)
            os << (a > 1 ? "  + " : "") << "dx_" << a << " (x) (" << field(K.comps[uz(a - 1)]) << ")\n";
        break;
    }
    return os.str();
}

FieldOperator operator_from_el(const MultiVec& x, const LagrangianSystem& sys, const ZeroOptions& opts)
{
    const int m = sys.m();
    const int n = sys.n();
    if (!(x.chart == sys.jet()) || x.comps.size() != uz(m)) throw OperatorError("expected an m-vector on the jet chart");
    std::vector<Expr> G(uz(n * m * m));
    for (int a = 1; a <= m; ++a) {
        const VectorField& v = x.comps[uz(a - 1)];
        for (int b = 1; b <= m; ++b)
            if (!(v.at(sys.x(b)) == Expr(a == b ? 1 : 0))) throw OperatorError("m-vector is not in the f=1 normalization");
        for (int A = 1; A <= n; ++A) {
            if (!(v.at(sys.y(A)) == sym(sys.v(A, a))))
                throw OperatorError("m-vector is not semi-holonomic: component " + std::to_string(a) + " has " +
                                    v.at(sys.y(A)).str() + " d/d" + sys.y(A).name());
            for (int nu = 1; nu <= m; ++nu) G[uz(sys.gindex(A, a, nu))] = v.at(sys.v(A, nu));
        }
    }
    for (const auto& r : el_coefficient_residuals(sys, G))
        if (!is_zero(r, opts).zero) throw OperatorError("m-vector does not solve the Euler-Lagrange system: residual " + r.str());
    return extended_from_g(sys, transport_el_coefficients(sys, G), opts);
}

ELFromOperator el_from_operator(const FieldOperator& k, const LagrangianSystem& sys, const ZeroOptions& opts)
{
    if (!is_semi_holonomic(k)) throw OperatorError("operator is not semi-holonomic");
    const int m = sys.m();
    const int n = sys.n();
    const std::size_t size = uz(n * m * m);
    ExprMatrix M(size, std::vector<Expr>(size));
    std::vector<Expr> rhs(size);
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            for (int eta = 1; eta <= m; ++eta) {
                const std::size_t row = uz(sys.gindex(A, a, eta));
                const Expr& p = sys.dL_dv(A, eta);
                Expr r = k.g_at(A, a, eta) - differentiate(p, sys.x(a));
                for (int B = 1; B <= n; ++B) {
                    r -= differentiate(p, sys.y(B)) * sym(sys.v(B, a));
                    for (int nu = 1; nu <= m; ++nu) M[row][uz(sys.gindex(B, a, nu))] = sys.hessian(B, nu, A, eta);
                }
                rhs[row] = r;
            }
    const LinearSolution sol = solve_linear(M, rhs, opts);
    ELFromOperator out;
    out.consistent = sol.consistent;
    out.G = sol.particular;
    out.kernel = sol.kernel;
    out.obstructions = sol.obstructions;
    if (!sol.consistent) return out;
    bool solves = true;
    for (const auto& r : el_coefficient_residuals(sys, out.G))
        if (!is_zero(r, opts).zero) {
            out.obstructions.push_back(r);
            solves = false;
        }
    if (solves) out.field = el_multivector(sys, out.G, opts);
    return out;
}

FieldOperator operator_from_hdw(const MultiVec& xh, const LagrangianSystem& sys, const HamiltonianSystem& h,
                                const ZeroOptions& locus)
{
    const int m = sys.m();
    const int n = sys.n();
    if (!(xh.chart == h.chart) || xh.comps.size() != uz(m)) throw OperatorError("expected an m-vector on the multimomentum chart");
    std::string failing;
    if (!is_zero(interior_mv(xh, h.omega), locus, &failing).zero)
        throw OperatorError("m-vector does not solve the Hamilton-De Donder-Weyl equations: component " + failing);
    const CoordMap fl = restricted_legendre(sys);
    FieldOperator k;
    k.flavor = Flavor::Extended;
    k.m = m;
    k.n = n;
    k.legendre = extended_legendre(sys);
    k.f.assign(uz(n * m), Expr());
    k.g.assign(uz(n * m * m), Expr());
    for (int a = 1; a <= m; ++a) {
        const VectorField& v = xh.comps[uz(a - 1)];
        for (int b = 1; b <= m; ++b)
            if (!(v.at(h.x(b)) == Expr(a == b ? 1 : 0))) throw OperatorError("m-vector is not in the f=1 normalization");
        // Affine component: derivative of the Hamiltonian section pa = -H.
        Expr dpa;
        for (int i = 0; i < h.chart.dim(); ++i) dpa -= v.comps[uz(i)] * differentiate(h.H, h.chart.coord(i));
        k.h.push_back(fl.pull(dpa));
        for (int A = 1; A <= n; ++A) {
            Expr f = fl.pull(v.at(h.y(A)));
            if (is_zero(f - sym(sys.v(A, a)), locus).zero) f = sym(sys.v(A, a));
            k.f[uz(sys.vindex(A, a))] = f;
            for (int eta = 1; eta <= m; ++eta) k.g[uz(sys.gindex(A, a, eta))] = fl.pull(v.at(h.p(A, eta)));
        }
    }
    k.kernel = operator_coefficient_system(sys).kernel;
    return k;
}

MultiVec hdw_from_operator(const FieldOperator& k, const LagrangianSystem& sys, const HamiltonianSystem& h, const ZeroOptions& opts)
{
    if (sys.m() != k.m || sys.n() != k.n || h.m != k.m || h.n != k.n) throw OperatorError("dimension mismatch");
    if (!h.inverse) throw OperatorError("no verified inverse Legendre map; Hamiltonian-side conversion unavailable");
    const CoordMap& inv = *h.inverse;
    MultiVec X{h.chart, {}};
    for (int a = 1; a <= k.m; ++a) {
        VectorField v = VectorField::coordinate(h.chart, h.x(a));
        for (int A = 1; A <= k.n; ++A) {
            v.at(h.y(A)) = inv.pull(k.f_at(A, a));
            for (int eta = 1; eta <= k.m; ++eta) v.at(h.p(A, eta)) = inv.pull(k.g_at(A, a, eta));
        }
        X.comps.push_back(std::move(v));
    }
    for (int A = 1; A <= k.n; ++A) {
        Expr tr = differentiate(h.H, h.y(A));
        for (int a = 1; a <= k.m; ++a) tr += X.comps[uz(a - 1)].at(h.p(A, a));
        if (!is_zero(tr, opts).zero) throw OperatorError("trace relation fails for field " + std::to_string(A) + ": " + tr.str());
    }
    std::string failing;
    if (!is_zero(interior_mv(X, h.omega), opts, &failing).zero)
        throw OperatorError("transported m-vector does not solve the Hamilton-De Donder-Weyl equations: component " + failing);
    return X;
}

std::vector<Expr> transport_constraint(const FieldOperator& k, const Expr& xi)
{
    const Chart& c = k.legendre.target;
    for (const auto& s : free_symbols(xi)) {
        if (s.role == Role::AffineMomentum && k.flavor == Flavor::Restricted)
            throw OperatorError("constraint uses the affine momentum, which a restricted operator does not see");
        if (c.index_of(s) < 0) throw OperatorError("constraint uses " + s.name() + ", which is not a coordinate of the operator's target");
    }
    const MultiVec K = k.multivector();
    std::vector<Expr> out;
    for (const auto& v : K.comps) {
        Expr e;
        for (int i = 0; i < c.dim(); ++i) {
            const Expr d = differentiate(xi, c.coord(i));
            if (!d.is_zero()) e += v.comps[uz(i)] * k.legendre.pull(d);
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace msym
