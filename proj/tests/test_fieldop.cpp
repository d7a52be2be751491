#include <gtest/gtest.h>

#include <random>

#include "corpus.hpp"
#include "msym/fieldop.hpp"

using namespace msym;

namespace {

LagrangianSystem make(int m, int n, const std::string& L) { return {m, n, parse_expr(L, SymbolTable::jet(m, n))}; }
Expr J(const std::string& s, int m, int n) { return parse_expr(s, SymbolTable::jet(m, n)); }
Expr R(const std::string& s, int m, int n) { return parse_expr(s, SymbolTable::restricted(m, n)); }

const std::string kg = "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2";

std::vector<LagrangianSystem> systems()
{
    std::vector<LagrangianSystem> out;
    for (const auto& md : corpus::models()) out.push_back(corpus::system(md));
    out.push_back(make(1, 1, "exp(y_1)*sqrt(1 + v_1_1^2) + x_1*y_1*v_1_1"));
    out.push_back(make(2, 2, "v_1_1^2/2 - v_1_2^2/2 + v_2_1^2/2 - v_2_2^2/2 - y_1*y_2 + v_1_1*v_2_2"));
    out.push_back(make(3, 1, "v_1_1^2/2 - v_1_2^2/2 - v_1_3^2/2 - y_1^4/4"));
    out.push_back(make(2, 1, "(1 + y_1^2)*(v_1_1^2 - v_1_2^2)/2 + x_2*v_1_1"));
    out.push_back(make(1, 2, "v_1_1*v_2_1 - y_1*y_2"));
    return out;
}

HamiltonianSystem hamiltonian_for(const corpus::Model& md, const LagrangianSystem& sys)
{
    if (md.regular) return hamiltonian_from_legendre(sys);
    return make_hamiltonian(md.m, md.n, R(md.hamiltonian, md.m, md.n), "user");
}

}  // namespace

TEST(Construct, AllConditionsHold)
{
    for (const auto& sys : systems()) {
        const FieldOperator k = construct_extended_operator(sys);
        const OperatorReport rep = check_operator(k, sys);
        EXPECT_TRUE(rep.normalization.ok) << sys.lagrangian() << " " << rep.normalization.detail;
        EXPECT_TRUE(rep.semi_holonomy.ok) << sys.lagrangian();
        EXPECT_TRUE(rep.field_equation.ok) << sys.lagrangian() << " " << rep.field_equation.detail;
        EXPECT_EQ(k.freedom(), sys.n() * (sys.m() * sys.m() - 1));
        // Every homogeneous direction keeps the field equation when h is recomputed.
        for (const auto& dir : k.kernel) {
            FieldOperator shifted = k;
            for (std::size_t i = 0; i < dir.size(); ++i) shifted.g[i] += dir[i] * J("x_1*y_1 + 3", sys.m(), sys.n());
            shifted.h = affine_component(sys, shifted.g);
            EXPECT_TRUE(check_operator(shifted, sys).field_equation.ok) << sys.lagrangian();
        }
    }
}

TEST(Construct, OscillatorReducesToMechanics)
{
    auto sys = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    const FieldOperator k = construct_extended_operator(sys);
    EXPECT_EQ(k.f[0], J("v_1_1", 1, 1));
    EXPECT_EQ(k.g[0], J("-y_1", 1, 1));
    EXPECT_TRUE(k.h[0].is_zero());
    EXPECT_EQ(k.freedom(), 0);

    const FieldOperator r = restrict_operator(k);
    EXPECT_EQ(r.flavor, Flavor::Restricted);
    EXPECT_TRUE(r.h.empty());
    EXPECT_EQ(r.f, k.f);
    EXPECT_EQ(r.g, k.g);
    EXPECT_EQ(r.legendre.target, Chart::restricted(1, 1));
    EXPECT_THROW(restrict_operator(r), OperatorError);
    EXPECT_TRUE(check_operator(r, sys).all());
}

TEST(Construct, MechanicsCorpusRestricted)
{
    for (const auto& md : corpus::models()) {
        if (md.m != 1) continue;
        auto sys = corpus::system(md);
        const FieldOperator r = restrict_operator(construct_extended_operator(sys));
        EXPECT_EQ(r.f[0], sym(sys.v(1, 1))) << md.name;
        EXPECT_EQ(r.g[0], sys.dL_dy(1)) << md.name;
    }
}

TEST(Construct, KleinGordonTrace)
{
    auto sys = make(2, 1, kg);
    const FieldOperator k = construct_extended_operator(sys);
    EXPECT_TRUE(is_zero(k.g_at(1, 1, 1) + k.g_at(1, 2, 2) - sys.dL_dy(1)).zero);
    EXPECT_EQ(k.freedom(), 3);
}

TEST(Check, DetectsBrokenConditions)
{
    auto sys = make(2, 1, kg);
    FieldOperator k = construct_extended_operator(sys);
    FieldOperator off = k;
    off.g[0] = off.g[0] + Expr(1);
    OperatorReport rep = check_operator(off, sys);
    EXPECT_FALSE(rep.field_equation.ok);
    EXPECT_FALSE(rep.field_equation.detail.empty());
    EXPECT_TRUE(rep.semi_holonomy.ok);

    FieldOperator flat = k;
    flat.f[0] = Expr();
    rep = check_operator(flat, sys);
    EXPECT_FALSE(rep.semi_holonomy.ok);
    EXPECT_FALSE(is_semi_holonomic(flat));

    // Restricted flavor falls back to the trace relations.
    FieldOperator r = restrict_operator(off);
    EXPECT_FALSE(check_operator(r, sys).field_equation.ok);
}

TEST(Check, AffineSignVariants)
{
    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    EXPECT_TRUE(check_operator(construct_extended_operator(osc), osc).printed_sign->ok);
    // For m = 2 the alternating sign disagrees with the contraction whenever
    // the diagonal g entries do not vanish.
    auto sys = make(2, 1, kg);
    const OperatorReport rep = check_operator(construct_extended_operator(sys), sys);
    EXPECT_TRUE(rep.field_equation.ok);
    EXPECT_FALSE(rep.printed_sign->ok);
}

TEST(Check, RestrictedAgainstHamiltonian)
{
    for (const auto& md : corpus::models()) {
        if (!md.regular) continue;
        auto sys = corpus::system(md);
        auto h = hamiltonian_from_legendre(sys);
        const FieldOperator r = restrict_operator(construct_extended_operator(sys));
        const OperatorReport rep = check_operator(r, sys, h);
        EXPECT_TRUE(rep.all()) << md.name << " " << rep.field_equation.detail;
    }
}

TEST(Views, LosslessAndRendered)
{
    auto sys = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    const FieldOperator k = construct_extended_operator(sys);
    for (ViewKind kind : {ViewKind::MultiVector, ViewKind::JetField, ViewKind::Connection}) {
        const AlongMapView v = as_view(k, kind);
        EXPECT_EQ(v.f(), k.f);
        EXPECT_EQ(v.g(), k.g);
        EXPECT_EQ(v.h(), k.h);
    }
    EXPECT_EQ(as_view(k, ViewKind::MultiVector).render(), "K_1 = d/dx_1 + v_1_1*d/dy_1 + (-y_1)*d/dp_1_1\nK = K_1\n");
    EXPECT_EQ(as_view(k, ViewKind::JetField).render(), "(x_1, y_1, p_1_1, pa) -> (f: v_1_1; g: -y_1; h: 0)\n");
    EXPECT_EQ(as_view(k, ViewKind::Connection).render(), "dx_1 (x) (d/dx_1 + v_1_1*d/dy_1 + (-y_1)*d/dp_1_1)\n");

    const std::string two = as_view(construct_extended_operator(make(2, 1, kg)), ViewKind::Connection).render();
    EXPECT_NE(two.find("dx_1 (x) (d/dx_1 + v_1_1*d/dy_1"), std::string::npos) << two;
    EXPECT_NE(two.find("  + dx_2 (x) (d/dx_2 + v_1_2*d/dy_1"), std::string::npos) << two;
}

TEST(FromEL, OscillatorAndTrace)
{
    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    const FieldOperator k = operator_from_el(el_multivector(osc, solve_el_coefficients(osc).G), osc);
    EXPECT_EQ(k.g[0], J("-y_1", 1, 1));

    for (const auto& sys : systems()) {
        const ELCoefficients el = solve_el_coefficients(sys);
        // Symmetric particular solution and a shifted member of the family.
        std::vector<std::vector<Expr>> tables{el.G};
        if (!el.kernel.empty()) {
            std::vector<Expr> G = el.G;
            for (const auto& dir : el.kernel)
                for (std::size_t i = 0; i < dir.size(); ++i) G[i] += dir[i] * sym(sys.y(1));
            tables.push_back(G);
        }
        for (const auto& G : tables) {
            const FieldOperator t = operator_from_el(el_multivector(sys, G), sys);
            for (int A = 1; A <= sys.n(); ++A) {
                Expr tr = -sys.dL_dy(A);
                for (int a = 1; a <= sys.m(); ++a) tr += t.g_at(A, a, a);
                EXPECT_TRUE(is_zero(tr).zero) << sys.lagrangian();
            }
            EXPECT_TRUE(check_operator(t, sys).all()) << sys.lagrangian();
        }
    }
}

TEST(FromEL, RejectsNonSemiHolonomic)
{
    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    MultiVec x = el_multivector(osc, solve_el_coefficients(osc).G);
    x.comps[0].at(osc.y(1)) = Expr(2);
    EXPECT_THROW(operator_from_el(x, osc), OperatorError);
}

TEST(ToEL, RoundTripAndFamilies)
{
    for (const auto& md : corpus::models()) {
        if (!md.regular) continue;
        auto sys = corpus::system(md);
        const std::vector<Expr> G = solve_el_coefficients(sys).G;
        const ELFromOperator back = el_from_operator(operator_from_el(el_multivector(sys, G), sys), sys);
        ASSERT_TRUE(back.consistent);
        EXPECT_TRUE(back.kernel.empty());
        EXPECT_EQ(back.G, G) << md.name;
        ASSERT_TRUE(back.field.has_value());
    }
    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    EXPECT_EQ(el_from_operator(construct_extended_operator(osc), osc).G[0], J("-y_1", 1, 1));

    auto aff = make(1, 1, "v_1_1");
    const ELFromOperator fam = el_from_operator(construct_extended_operator(aff), aff);
    EXPECT_TRUE(fam.consistent);
    EXPECT_EQ(fam.kernel.size(), 1u);
    EXPECT_TRUE(fam.field.has_value());

    // Hessian zero and g inconsistent with dL/dv derivatives: no G exists.
    FieldOperator bad = construct_extended_operator(aff);
    bad.g[0] = Expr(1);
    const ELFromOperator none = el_from_operator(bad, aff);
    EXPECT_FALSE(none.consistent);
    EXPECT_FALSE(none.obstructions.empty());
}

TEST(FromHDW, RegularCorpus)
{
    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    auto hosc = hamiltonian_from_legendre(osc);
    const FieldOperator k = operator_from_hdw(hdw_multivector(hosc), osc, hosc);
    EXPECT_EQ(k.f[0], J("v_1_1", 1, 1));
    EXPECT_EQ(k.g[0], J("-y_1", 1, 1));

    for (const auto& md : corpus::models()) {
        if (!md.regular) continue;
        auto sys = corpus::system(md);
        auto h = hamiltonian_from_legendre(sys);
        const MultiVec xh = hdw_multivector(h);
        const FieldOperator t = operator_from_hdw(xh, sys, h);
        const OperatorReport rep = check_operator(t, sys);
        EXPECT_TRUE(rep.all()) << md.name << " " << rep.field_equation.detail;
        const MultiVec back = hdw_from_operator(t, sys, h);
        for (std::size_t a = 0; a < xh.comps.size(); ++a) EXPECT_EQ(back.comps[a].comps, xh.comps[a].comps) << md.name;
    }
}

TEST(FromHDW, KleinGordonTrace)
{
    auto sys = make(2, 1, kg);
    auto h = hamiltonian_from_legendre(sys);
    const MultiVec x = hdw_from_operator(construct_extended_operator(sys), sys, h);
    Expr tr = differentiate(h.H, h.y(1));
    for (int a = 1; a <= 2; ++a) tr += x.comps[static_cast<std::size_t>(a - 1)].at(h.p(1, a));
    EXPECT_TRUE(tr.is_zero());
    EXPECT_EQ(differentiate(h.H, h.y(1)), R("y_1", 2, 1));
}

TEST(FromHDW, SingularNotSemiHolonomic)
{
    for (const auto& md : corpus::models()) {
        if (md.regular) continue;
        auto sys = corpus::system(md);
        auto h = hamiltonian_for(md, sys);
        std::vector<Expr> cs;
        for (const auto& c : md.constraints) cs.push_back(R(c, md.m, md.n));
        const FieldOperator k = operator_from_hdw(hdw_multivector(h), sys, h, on_constraint_locus({}, cs));
        EXPECT_FALSE(check_operator(k, sys).semi_holonomy.ok) << md.name;
        EXPECT_THROW(hdw_from_operator(k, sys, h), OperatorError);
    }
}

TEST(FromHDW, RejectsNonSolution)
{
    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    auto h = hamiltonian_from_legendre(osc);
    MultiVec x = hdw_multivector(h);
    x.comps[0].at(h.p(1, 1)) = Expr(0);
    EXPECT_THROW(operator_from_hdw(x, osc, h), OperatorError);
}

TEST(TransportConstraint, Examples)
{
    auto aff = make(1, 1, "v_1_1");
    const FieldOperator ka = restrict_operator(construct_extended_operator(aff));
    const auto t = transport_constraint(ka, R("p_1_1 - 1", 1, 1));
    ASSERT_EQ(t.size(), 1u);
    EXPECT_TRUE(t[0].is_zero());
    EXPECT_TRUE(transport_constraint(ka, Expr(7))[0].is_zero());

    auto free = make(1, 1, "v_1_1^2/2");
    EXPECT_TRUE(transport_constraint(restrict_operator(construct_extended_operator(free)), R("p_1_1", 1, 1))[0].is_zero());

    auto osc = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    EXPECT_EQ(transport_constraint(restrict_operator(construct_extended_operator(osc)), R("p_1_1*y_1", 1, 1))[0],
              J("v_1_1^2 - y_1^2", 1, 1));

    const Expr pa = parse_expr("pa", Chart::extended(1, 1).table());
    EXPECT_THROW(transport_constraint(ka, pa), OperatorError);

    auto sys = make(2, 1, kg);
    const auto two = transport_constraint(restrict_operator(construct_extended_operator(sys)), R("p_1_1", 2, 1));
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0], J("-y_1/2", 2, 1));
    EXPECT_TRUE(two[1].is_zero());
}

TEST(Property, RandomQuadraticLagrangians)
{
    std::mt19937_64 rng(91);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (int trial = 0; trial < 12; ++trial) {
        const int m = 1 + trial % 3;
        const int n = 1 + (trial / 3) % 2;
        std::string L = "0";
        for (int a = 1; a <= n; ++a)
            for (int al = 1; al <= m; ++al) {
                const std::string v = "v_" + std::to_string(a) + "_" + std::to_string(al);
                L += " + " + std::to_string(al == 1 ? 1 + std::abs(coef(rng)) : -1 - std::abs(coef(rng))) + "*" + v + "^2/2";
                L += " + " + std::to_string(coef(rng)) + "*y_" + std::to_string(a) + "*" + v;
            }
        L += " + " + std::to_string(coef(rng)) + "*y_1^3/3";
        const LagrangianSystem sys = make(m, n, L);
        const FieldOperator k = construct_extended_operator(sys);
        EXPECT_TRUE(check_operator(k, sys).all()) << L;
        EXPECT_EQ(k.freedom(), n * (m * m - 1)) << L;
        const FieldOperator kr = restrict_operator(k);
        for (int a = 1; a <= n; ++a)
            for (int al = 1; al <= m; ++al) EXPECT_EQ(kr.f_at(a, al), sym(sys.v(a, al))) << L;
    }
}
