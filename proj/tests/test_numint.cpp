#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "msym/numint.hpp"
#include "msym/parse.hpp"

using namespace msym;

namespace {

constexpr double kPi = std::numbers::pi;

LagrangianSystem make(int m, int n, const std::string& L) { return {m, n, parse_expr(L, SymbolTable::jet(m, n))}; }
Expr B(const std::string& s, int m) { return parse_expr(s, Chart::base(m).table()); }

const std::string kg = "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2";
const std::string wave = "v_1_1^2/2 - v_1_2^2/2";

Grid kg_grid(double dx)
{
    Grid g;
    g.dx = dx;
    g.dt = dx / 2;
    g.t_end = 1.0;
    return g;
}

NumericSection kg_section(const LagrangianSystem& sys, double dx)
{
    return integrate_m2(sys, {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, kg_grid(dx));
}

NumericSection oscillator(double h, double t_end = 2 * kPi)
{
    Grid g;
    g.dt = h;
    g.t_end = t_end;
    return integrate_m1(make(1, 1, "v_1_1^2/2 - y_1^2/2"), {1.0}, {0.0}, g);
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace

TEST(RK4, OscillatorEndpoint)
{
    const NumericSection s = oscillator(1e-3);
    EXPECT_EQ(s.scheme, "rk4");
    EXPECT_NEAR(s.t(s.levels - 1), 2 * kPi, 1e-12);
    EXPECT_LE(std::abs(s.at(1, s.levels - 1) - 1.0), 1e-8);
}

TEST(RK4, ConvergenceOrder)
{
    auto err = [](int steps) {
        const NumericSection s = oscillator(2 * kPi / steps);
        double worst = 0.0;
        for (int i = 0; i < s.levels; ++i) worst = std::max(worst, std::abs(s.at(1, i) - std::cos(s.t(i))));
        return worst;
    };
    EXPECT_NEAR(order(err(50), err(100)), 4.0, 0.3);
}

TEST(RK4, FreeParticleIsLinear)
{
    Grid g;
    g.dt = 0.01;
    g.t_end = 3.0;
    const NumericSection s = integrate_m1(make(1, 1, "v_1_1^2/2"), {0.5}, {-2.0}, g);
    for (int i = 0; i < s.levels; ++i) EXPECT_NEAR(s.at(1, i), 0.5 - 2.0 * s.t(i), 1e-12);
}

TEST(RK4, ResidualMetersOrderFour)
{
    auto sys = make(1, 1, "v_1_1^2/2 - y_1^2/2");
    auto h = hamiltonian_from_legendre(sys);
    auto k = construct_extended_operator(sys);
    const NumericSection c = oscillator(2 * kPi / 100), f = oscillator(2 * kPi / 200);
    EXPECT_NEAR(order(el_residual(sys, c).norms.max, el_residual(sys, f).norms.max), 4.0, 0.3);
    EXPECT_NEAR(order(hdw_residual(h, sys, c).total.max, hdw_residual(h, sys, f).total.max), 4.0, 0.3);
    EXPECT_NEAR(order(operator_residual(k, sys, c).g_family.max, operator_residual(k, sys, f).g_family.max), 4.0, 0.3);
    EXPECT_LE(energy_drift(sys, f), 1e-6);
}

TEST(RK4, RejectsSingular)
{
    Grid g;
    g.dt = 0.1;
    EXPECT_THROW(integrate_m1(make(1, 1, "v_1_1"), {0.0}, {1.0}, g), NumericError);
}

TEST(Leapfrog, WaveMatchesDAlembert)
{
    auto sys = make(2, 1, wave);
    auto err = [&](double dx) {
        const NumericSection s = kg_section(sys, dx);
        double worst = 0.0;
        for (int it = 0; it < s.levels; ++it)
            for (int ix = 0; ix < s.nx; ++ix)
                worst = std::max(worst, std::abs(s.at(1, it, ix) - std::sin(2 * kPi * s.x(ix)) * std::cos(2 * kPi * s.t(it))));
        return worst;
    };
    const double e1 = err(1.0 / 200);
    // Over t in [0, 1]; at t = 1 itself the phase error is second order in time.
    EXPECT_LE(e1, 5e-3);
    EXPECT_NEAR(order(e1, err(1.0 / 400)), 2.0, 0.3);
}

TEST(Leapfrog, ConstantStaysConstant)
{
    auto sys = make(2, 1, wave);
    Grid g = kg_grid(1.0 / 50);
    g.bc = Boundary::Dirichlet;
    const NumericSection s = integrate_m2(sys, {{Expr(Rational(3, 2))}, {Expr()}}, g);
    for (double v : s.phi[0]) EXPECT_DOUBLE_EQ(v, 1.5);
}

TEST(Leapfrog, Rejections)
{
    auto sys = make(2, 1, kg);
    Grid g = kg_grid(1.0 / 50);
    g.dt = g.dx * 1.5;
    EXPECT_THROW(integrate_m2(sys, {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g), NumericError);
    g.dt = g.dx / 2;
    EXPECT_THROW(integrate_m2(make(2, 1, "v_1_1^2/2 + v_1_2^2/2"), {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g), NumericError);
    EXPECT_THROW(integrate_m2(make(2, 1, "v_1_1*v_1_2"), {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g), NumericError);
    EXPECT_THROW(integrate(make(3, 1, "v_1_1^2/2"), {{Expr()}, {Expr()}}, g), NumericError);
}

TEST(Leapfrog, AutomaticStepFromCfl)
{
    auto sys = make(2, 1, "v_1_1^2/2 - 4*v_1_2^2/2");
    Grid g = kg_grid(1.0 / 40);
    g.dt = 0.0;
    const NumericSection s = integrate_m2(sys, {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g);
    EXPECT_LE(2.0 * s.dt, 0.5 * s.dx + 1e-15);
    EXPECT_NEAR(characteristic_speed(sys, {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g), 2.0, 1e-12);
}

TEST(KleinGordon, ResidualMetersConverge)
{
    auto sys = make(2, 1, kg);
    auto h = hamiltonian_from_legendre(sys);
    auto k = construct_extended_operator(sys);
    const NumericSection c = kg_section(sys, 1.0 / 100), f = kg_section(sys, 1.0 / 200);
    const double el_c = el_residual(sys, c).norms.max, el_f = el_residual(sys, f).norms.max;
    const OperatorResidual op_c = operator_residual(k, sys, c), op_f = operator_residual(k, sys, f);
    const double h_c = hdw_residual(h, sys, c).total.max, h_f = hdw_residual(h, sys, f).total.max;
    EXPECT_LE(el_f, 5e-3);
    EXPECT_LE(op_f.g_family.max, 5e-3);
    EXPECT_LE(h_f, 5e-3);
    EXPECT_NEAR(order(el_c, el_f), 2.0, 0.3);
    EXPECT_NEAR(order(op_c.g_family.max, op_f.g_family.max), 2.0, 0.3);
    EXPECT_NEAR(order(h_c, h_f), 2.0, 0.3);
    // f-family vanishes by construction; the operator's own g does not fit
    // this section, the uniform-sign affine component does.
    EXPECT_LE(op_f.f_family.max, 1e-12);
    EXPECT_GE(op_f.g_raw.max, 0.1);
    EXPECT_LE(op_f.h_family.max, 5e-3);
    EXPECT_GE(op_f.h_printed.max, 0.1);
    EXPECT_LE(energy_drift(sys, f), 1e-3);
}

TEST(KleinGordon, PerturbationSeparates)
{
    auto sys = make(2, 1, kg);
    auto h = hamiltonian_from_legendre(sys);
    auto k = construct_extended_operator(sys);
    const NumericSection s = kg_section(sys, 1.0 / 100);
    const NumericSection p = perturb(s, 0.1, 7);
    EXPECT_GE(el_residual(sys, p).norms.max, 10 * el_residual(sys, s).norms.max);
    EXPECT_GE(operator_residual(k, sys, p).g_family.max, 10 * operator_residual(k, sys, s).g_family.max);
    EXPECT_GE(hdw_residual(h, sys, p).total.max, 10 * hdw_residual(h, sys, s).total.max);
}

TEST(Section, CsvAndDeterminism)
{
    auto sys = make(2, 1, kg);
    Grid g = kg_grid(1.0 / 20);
    g.t_end = 0.1;
    const NumericSection a = integrate_m2(sys, {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g);
    const NumericSection b = integrate_m2(sys, {{B("sin(2*pi*x_2)", 2)}, {Expr()}}, g);
    EXPECT_EQ(a.phi, b.phi);
    std::ostringstream os;
    write_csv(os, a);
    const std::string csv = os.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x_1,x_2,phi_1");
    EXPECT_EQ(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')), 1 + a.levels * a.nx);
    EXPECT_NE(csv.find("\n0,0.050000000000000003,0.309016994374947"), std::string::npos);
    EXPECT_EQ(perturb(a, 0.1, 3).phi, perturb(a, 0.1, 3).phi);
}
