#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "msym/fieldop.hpp"

namespace msym {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Boundary { Periodic, Dirichlet };

Boundary parse_boundary(const std::string& s);
std::string to_string(Boundary b);

/// Base grid. x_1 is the evolution variable on [0, t_end]; for m = 2 the
/// second coordinate x_2 runs over [x_lo, x_hi].
struct Grid {
    double t_end = 1.0;
    double dt = 0.0;   // m = 2: 0 picks cfl * dx / (max characteristic speed)
    double x_lo = 0.0;
    double x_hi = 1.0;
    double dx = 0.0;
    Boundary bc = Boundary::Periodic;
    double cfl = 0.5;
};

/// Samples of phi^A on a (levels x nx) grid; nx = 1 for m = 1.
struct NumericSection {
    int m = 1;
    int n = 1;
    double dt = 0.0;
    double dx = 0.0;
    double x_lo = 0.0;
    int levels = 0;
    int nx = 1;
    Boundary bc = Boundary::Periodic;
    std::string scheme;
    std::uint64_t seed = 0;
    std::string diagnostic;  // set when the integration stopped early
    std::vector<std::vector<double>> phi;  // phi[A-1][it * nx + ix]

    [[nodiscard]] double t(int it) const { return it * dt; }
    [[nodiscard]] double x(int ix) const { return x_lo + ix * dx; }
    [[nodiscard]] double at(int a, int it, int ix = 0) const { return phi[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(it * nx + ix)]; }
    [[nodiscard]] double& at(int a, int it, int ix = 0) { return phi[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(it * nx + ix)]; }
};

/// Initial data over the base chart: phi^A(0, x_2) and d phi^A/dx^1 (0, x_2)
/// (constants when m = 1).
struct InitialData {
    std::vector<Expr> phi;
    std::vector<Expr> dphi;
};

/// Classical RK4 for y'' = G(x, y, y').
NumericSection integrate_m1(const LagrangianSystem& sys, const std::vector<double>& y0, const std::vector<double>& v0,
                            const Grid& grid);
/// Explicit leapfrog on the second-order form, with a Taylor first step.
NumericSection integrate_m2(const LagrangianSystem& sys, const InitialData& init, const Grid& grid);
/// Dispatches on sys.m().
NumericSection integrate(const LagrangianSystem& sys, const InitialData& init, const Grid& grid);

/// Largest characteristic speed of the linearized second-order system at the
/// initial data; throws NumericError when the Hessian is not hyperbolic.
double characteristic_speed(const LagrangianSystem& sys, const InitialData& init, const Grid& grid);

struct Norms {
    double max = 0.0;
    double l2 = 0.0;   // sqrt(sum r^2 * cell volume)
    std::size_t points = 0;
};

struct ELResidual {
    Norms norms;
    std::vector<double> field;  // max over equations, per interior point
};

struct OperatorResidual {
    Norms f_family;
    Norms g_family;    // after matching the free part of g to the section
    Norms g_raw;       // with the operator's own g
    Norms h_family;    // affine component, uniform sign
    Norms h_printed;   // affine component, alternating sign
};

struct HDWResidual {
    Norms first_family;
    Norms divergence;
    Norms total;
};

/// Interior points are those at least `margin` nodes from a non-periodic edge.
inline constexpr int kResidualMargin = 4;

ELResidual el_residual(const LagrangianSystem& sys, const NumericSection& s);
OperatorResidual operator_residual(const FieldOperator& k, const LagrangianSystem& sys, const NumericSection& s);
HDWResidual hdw_residual(const HamiltonianSystem& h, const LagrangianSystem& sys, const NumericSection& s);

/// Integral over x_2 (or the value, m = 1) of v^A_1 dL/dv^A_1 - L, per level
/// with a full stencil.
std::vector<double> energy(const LagrangianSystem& sys, const NumericSection& s);
/// max |E - E_0| / |E_0| over the levels returned by energy().
double energy_drift(const LagrangianSystem& sys, const NumericSection& s);

/// phi + amplitude * smooth seeded noise.
NumericSection perturb(const NumericSection& s, double amplitude, std::uint64_t seed);

/// Grid columns (x_1[, x_2]) then one column per field.
void write_csv(std::ostream& os, const NumericSection& s);

}  // namespace msym
