#include <gtest/gtest.h>

#include <random>

#include "msym/geom.hpp"
#include "msym/parse.hpp"

using namespace msym;

namespace {

Expr P(const std::string& s, const Chart& c) { return parse_expr(s, c.table()); }
Symbol S(const std::string& s, const Chart& c) { return *c.table().lookup(s); }
DiffForm dz(const std::string& s, const Chart& c) { return DiffForm::basis(c, S(s, c)); }

DiffForm random_form(std::mt19937_64& rng, const Chart& c, int degree)
{
    DiffForm f(c, degree);
    const auto& syms = c.coords();
    for (int t = 0; t < 3; ++t) {
        DiffForm::Index idx;
        for (int k = 0; k < degree; ++k) idx.push_back(static_cast<int>(rng() % syms.size()));
        Expr coef = sym(syms[rng() % syms.size()]) * sym(syms[rng() % syms.size()]) + Expr(static_cast<int>(rng() % 3));
        if (rng() % 2) coef = sin(coef);
        f.add(idx, coef);
    }
    return f;
}

bool same(const DiffForm& a, const DiffForm& b) { return is_zero(a - b).zero; }

}  // namespace

TEST(Chart, Dimensions)
{
    EXPECT_EQ(Chart::jet(2, 3).dim(), 2 + 3 + 6);
    EXPECT_EQ(Chart::extended(2, 3).dim(), 2 + 3 + 6 + 1);
    EXPECT_EQ(Chart::restricted(2, 3).dim(), 2 + 3 + 6);
    EXPECT_EQ(Chart::base(3).dim(), 3);
}

TEST(Forms, ExteriorDerivativeExamples)
{
    const Chart e = Chart::extended(1, 1);
    // d(p dy ^ d^0 x) = dp ^ dy for m = 1
    DiffForm f = P("p_1_1", e) * wedge(dz("y_1", e), volume_minus(e, 1));
    EXPECT_TRUE(structurally_equal(exterior_derivative(f), wedge(dz("p_1_1", e), dz("y_1", e))));
    EXPECT_TRUE(exterior_derivative(dz("x_1", e)).terms().empty());
}

TEST(Forms, LiouvilleFormsAgree)
{
    // Omega = dy^A ^ dp^a_A ^ d^{m-1}x_a - dp ^ d^m x equals -d Theta.
    for (auto [m, n] : {std::pair{1, 1}, {2, 1}, {2, 2}, {3, 1}}) {
        const Chart e = Chart::extended(m, n);
        DiffForm theta = P("pa", e) * volume_form(e);
        DiffForm omega = -wedge(dz("pa", e), volume_form(e));
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a) {
                const DiffForm dy = DiffForm::basis(e, Symbol::fiber(ChartKind::Extended, A));
                const DiffForm dp = DiffForm::basis(e, Symbol::momentum(ChartKind::Extended, A, a));
                theta = theta + sym(Symbol::momentum(ChartKind::Extended, A, a)) * wedge(dy, volume_minus(e, a));
                omega = omega + wedge(wedge(dy, dp), volume_minus(e, a));
            }
        EXPECT_TRUE(structurally_equal(-exterior_derivative(theta), omega)) << "m=" << m << " n=" << n;
    }
}

TEST(Forms, DSquaredIsZero)
{
    std::mt19937_64 rng(5);
    const Chart c = Chart::jet(2, 1);
    for (int deg = 0; deg < 3; ++deg)
        for (int i = 0; i < 10; ++i) EXPECT_TRUE(exterior_derivative(exterior_derivative(random_form(rng, c, deg))).terms().empty());
}

TEST(Forms, Wedge)
{
    const Chart c = Chart::jet(1, 1);
    EXPECT_TRUE(structurally_equal(wedge(dz("x_1", c), dz("y_1", c)), -wedge(dz("y_1", c), dz("x_1", c))));
    EXPECT_TRUE(wedge(dz("x_1", c), dz("x_1", c)).terms().empty());
    DiffForm theta = dz("y_1", c) - P("v_1_1", c) * dz("x_1", c);
    EXPECT_TRUE(structurally_equal(wedge(theta, dz("x_1", c)), wedge(dz("y_1", c), dz("x_1", c))));
    std::mt19937_64 rng(9);
    const Chart j = Chart::jet(2, 1);
    for (int i = 0; i < 10; ++i) {
        DiffForm a = random_form(rng, j, 1 + static_cast<int>(rng() % 2));
        DiffForm b = random_form(rng, j, 1 + static_cast<int>(rng() % 2));
        const int sign = (a.degree() * b.degree()) % 2 ? -1 : 1;
        EXPECT_TRUE(same(wedge(a, b), Expr(sign) * wedge(b, a)));
    }
    EXPECT_THROW(wedge(dz("x_1", c), DiffForm::basis(j, Symbol::base(ChartKind::Jet, 1))), std::invalid_argument);
}

TEST(Forms, PullbackOfLiouvilleForm)
{
    const Chart j = Chart::jet(1, 1);
    const Chart e = Chart::extended(1, 1);
    // Extended Legendre map for L = v^2/2.
    CoordMap fl(j, e, {P("x_1", j), P("y_1", j), P("v_1_1", j), P("-v_1_1^2/2", j)});
    DiffForm theta = P("p_1_1", e) * dz("y_1", e) + P("pa", e) * dz("x_1", e);
    DiffForm expected = P("v_1_1", j) * dz("y_1", j) - P("v_1_1^2/2", j) * dz("x_1", j);
    EXPECT_TRUE(structurally_equal(pullback(theta, fl), expected));
    EXPECT_TRUE(structurally_equal(pullback(DiffForm::function(e, Expr(7)), fl), DiffForm::function(j, Expr(7))));
    EXPECT_TRUE(same(pullback(exterior_derivative(theta), fl), exterior_derivative(pullback(theta, fl))));
    EXPECT_THROW(pullback(expected, fl), std::invalid_argument);
}

TEST(Forms, PullbackIsRingMorphism)
{
    std::mt19937_64 rng(13);
    const Chart j = Chart::jet(2, 1);
    const Chart r = Chart::restricted(2, 1);
    CoordMap phi(j, r, {P("x_1", j), P("x_2", j), P("sin(y_1)", j), P("v_1_1 + v_1_2", j), P("x_1*v_1_2", j)});
    for (int i = 0; i < 6; ++i) {
        DiffForm a = random_form(rng, r, 1);
        DiffForm b = random_form(rng, r, 2);
        EXPECT_TRUE(same(pullback(wedge(a, b), phi), wedge(pullback(a, phi), pullback(b, phi))));
        EXPECT_TRUE(same(pullback(exterior_derivative(a), phi), exterior_derivative(pullback(a, phi))));
    }
}

TEST(Forms, InteriorProducts)
{
    const Chart c = Chart::jet(2, 1);
    const auto dx1 = VectorField::coordinate(c, S("x_1", c));
    EXPECT_TRUE(structurally_equal(interior(dx1, volume_form(c)), dz("x_2", c)));
    EXPECT_TRUE(structurally_equal(volume_minus(c, 2), -dz("x_1", c)));

    // f=1 representative contracts the volume form to 1.
    VectorField x1 = dx1;
    x1.at(S("y_1", c)) = P("v_1_1", c);
    x1.at(S("v_1_2", c)) = P("y_1^2", c);
    VectorField x2 = VectorField::coordinate(c, S("x_2", c));
    x2.at(S("y_1", c)) = P("v_1_2", c);
    MultiVec X{c, {x1, x2}};
    DiffForm one = interior_mv(X, volume_form(c));
    EXPECT_TRUE(structurally_equal(one, DiffForm::function(c, Expr(1))));

    std::mt19937_64 rng(17);
    DiffForm f3 = random_form(rng, c, 3);
    MultiVec swapped{c, {x2, x1}};
    EXPECT_TRUE(same(interior_mv(X, f3), -interior_mv(swapped, f3)));
    EXPECT_TRUE(interior_mv(X, dz("y_1", c)).terms().empty());
    EXPECT_EQ(interior_mv(X, dz("y_1", c)).degree(), 0);
}

TEST(VectorFields, LieBracket)
{
    const Chart c = Chart::jet(1, 1);
    const auto dx = VectorField::coordinate(c, S("x_1", c));
    const auto dy = VectorField::coordinate(c, S("y_1", c));
    auto scaled = [&](const VectorField& v, const std::string& f) {
        VectorField r = v;
        for (auto& e : r.comps) e = P(f, c) * e;
        return r;
    };
    auto all_zero = [](const VectorField& v) {
        for (const auto& e : v.comps)
            if (!e.is_zero()) return false;
        return true;
    };
    EXPECT_TRUE(all_zero(lie_bracket(dx, dy)));
    EXPECT_EQ(lie_bracket(dx, scaled(dy, "x_1")).comps, dy.comps);
    VectorField expect(c);
    expect.at(S("y_1", c)) = P("y_1", c);
    expect.at(S("x_1", c)) = P("-x_1", c);
    EXPECT_EQ(lie_bracket(scaled(dx, "y_1"), scaled(dy, "x_1")).comps, expect.comps);

    // Jacobi identity and antisymmetry on random fields.
    std::mt19937_64 rng(21);
    auto rnd = [&]() {
        VectorField v(c);
        for (auto& e : v.comps) {
            const auto& s = c.coords();
            e = sym(s[rng() % s.size()]) * sym(s[rng() % s.size()]);
            if (rng() % 3 == 0) e = sin(e);
        }
        return v;
    };
    for (int i = 0; i < 5; ++i) {
        VectorField a = rnd(), b = rnd(), d = rnd();
        VectorField j1 = lie_bracket(a, lie_bracket(b, d));
        VectorField j2 = lie_bracket(b, lie_bracket(d, a));
        VectorField j3 = lie_bracket(d, lie_bracket(a, b));
        VectorField ab = lie_bracket(a, b), ba = lie_bracket(b, a);
        for (std::size_t k = 0; k < j1.comps.size(); ++k) {
            EXPECT_TRUE(is_zero(j1.comps[k] + j2.comps[k] + j3.comps[k]).zero);
            EXPECT_TRUE((ab.comps[k] + ba.comps[k]).is_zero());
        }
    }
}

TEST(VectorFields, Involutivity)
{
    const Chart c = Chart::jet(2, 1);
    MultiVec frame{c, {VectorField::coordinate(c, S("x_1", c)), VectorField::coordinate(c, S("x_2", c))}};
    auto rep = check_involutive(frame);
    EXPECT_TRUE(rep.involutive);
    EXPECT_EQ(rep.evidence, Evidence::Structural);

    VectorField x1 = VectorField::coordinate(c, S("x_1", c));
    x1.at(S("y_1", c)) = P("v_1_1", c);
    VectorField x2 = VectorField::coordinate(c, S("x_2", c));
    // With X2 = d/dx2 alone the bracket vanishes; moving X2 along v makes
    // [X1, X2] = -d/dy, which leaves the span.
    EXPECT_TRUE(check_involutive(MultiVec{c, {x1, x2}}).involutive);
    x2.at(S("v_1_1", c)) = Expr(1);
    auto bad = check_involutive(MultiVec{c, {x1, x2}});
    EXPECT_FALSE(bad.involutive);
    ASSERT_EQ(bad.failures.size(), 1u);
    EXPECT_EQ(bad.failures[0].a, 1);
    EXPECT_EQ(bad.failures[0].b, 2);

    const Chart c1 = Chart::jet(1, 1);
    VectorField k = VectorField::coordinate(c1, S("x_1", c1));
    k.at(S("y_1", c1)) = P("v_1_1", c1);
    k.at(S("v_1_1", c1)) = P("-sin(y_1)", c1);
    EXPECT_TRUE(check_involutive(MultiVec{c1, {k}}).involutive);
}

TEST(VectorFields, Transversality)
{
    const Chart c = Chart::jet(2, 1);
    const CoordMap proj = projection(c, Chart::base(2));
    VectorField x1 = VectorField::coordinate(c, S("x_1", c));
    x1.at(S("y_1", c)) = P("v_1_1", c);
    VectorField x2 = VectorField::coordinate(c, S("x_2", c));
    x2.at(S("y_1", c)) = P("v_1_2", c);
    auto ok = check_transverse(MultiVec{c, {x1, x2}}, proj);
    EXPECT_TRUE(ok.transverse);
    EXPECT_TRUE(ok.value.is_one());

    VectorField vert = VectorField::coordinate(c, S("y_1", c));
    EXPECT_FALSE(check_transverse(MultiVec{c, {vert, x2}}, proj).transverse);

    VectorField s1 = x1;
    for (auto& e : s1.comps) e = P("exp(y_1)", c) * e;
    auto scaled = check_transverse(MultiVec{c, {s1, x2}}, proj);
    EXPECT_TRUE(scaled.transverse);
    EXPECT_EQ(scaled.evidence, Evidence::Probabilistic);
}
