#pragma once

#include <string>
#include <vector>

#include "msym/geom.hpp"
#include "msym/linalg.hpp"

namespace msym {

/// First-order Lagrangian on the jet chart (m, N), with its derivatives
/// computed once at construction.
class LagrangianSystem {
public:
    LagrangianSystem(int m, int n, Expr lagrangian);

    [[nodiscard]] int m() const { return m_; }
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] const Chart& jet() const { return jet_; }
    [[nodiscard]] const Expr& lagrangian() const { return L_; }

    [[nodiscard]] Symbol x(int alpha) const { return Symbol::base(ChartKind::Jet, alpha); }
    [[nodiscard]] Symbol y(int a) const { return Symbol::fiber(ChartKind::Jet, a); }
    [[nodiscard]] Symbol v(int a, int alpha) const { return Symbol::velocity(a, alpha); }

    /// Row/column of v^A_a in the (Nm)x(Nm) Hessian.
    [[nodiscard]] int vindex(int a, int alpha) const { return (a - 1) * m_ + (alpha - 1); }
    /// Position of G^A_{a nu} (component a, direction d/dv^A_nu) in flat tables.
    [[nodiscard]] int gindex(int a, int alpha, int nu) const { return ((a - 1) * m_ + (alpha - 1)) * m_ + (nu - 1); }

    [[nodiscard]] const Expr& dL_dx(int alpha) const { return dx_[static_cast<std::size_t>(alpha - 1)]; }
    [[nodiscard]] const Expr& dL_dy(int a) const { return dy_[static_cast<std::size_t>(a - 1)]; }
    [[nodiscard]] const Expr& dL_dv(int a, int alpha) const { return dv_[static_cast<std::size_t>(vindex(a, alpha))]; }
    [[nodiscard]] const ExprMatrix& hessian() const { return hess_; }
    [[nodiscard]] const Expr& hessian(int a, int alpha, int b, int nu) const
    {
        return hess_[static_cast<std::size_t>(vindex(a, alpha))][static_cast<std::size_t>(vindex(b, nu))];
    }
    /// L - v^A_a dL/dv^A_a
    [[nodiscard]] const Expr& energy_term() const { return affine_; }
    /// Right-hand side of the linear system for G, one entry per field:
    /// dL/dy^B - d2L/dx^nu dv^B_nu - d2L/dy^A dv^B_nu v^A_nu.
    [[nodiscard]] const std::vector<Expr>& el_rhs() const { return rhs_; }

private:
    int m_;
    int n_;
    Chart jet_;
    Expr L_;
    std::vector<Expr> dx_, dy_, dv_, rhs_;
    ExprMatrix hess_;
    Expr affine_;
};

struct PoincareCartan {
    DiffForm theta;
    DiffForm omega;
};

/// Theta_L = dL/dv^A_a dy^A ^ d^{m-1}x_a + (L - v dL/dv) d^m x, Omega_L = -d Theta_L.
PoincareCartan poincare_cartan(const LagrangianSystem& sys);

/// Omega_L assembled term by term from the four-block local expansion
/// (second derivatives of L against dv^dy, dy^dy, dv^d^m x, dy^d^m x).
DiffForm omega_expanded(const LagrangianSystem& sys);

enum class RegularityKind { Regular, Singular };

struct Regularity {
    RegularityKind kind = RegularityKind::Regular;
    bool hyper_regular_candidate = false;
    int rank = 0;
    Expr determinant;
    Evidence evidence = Evidence::Structural;

    [[nodiscard]] std::string str() const;
};

class RegularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws RegularityError when the sampled Hessian rank is not constant.
Regularity classify_regularity(const LagrangianSystem& sys, const ZeroOptions& opts = {});

/// Jet-chart expression -> section chart (x, phi, phi_A_a).
Expr along_prolongation(const Expr& e);
/// Total derivative d/dx^a along a prolonged section, on section symbols.
Expr total_derivative(const Expr& section_expr, int alpha, int m, int n);

/// One residual per field: dL/dy^A o j1phi - d/dx^a (dL/dv^A_a o j1phi).
std::vector<Expr> euler_lagrange_equations(const LagrangianSystem& sys);

struct ELCoefficients {
    std::vector<Expr> G;                 // flat, LagrangianSystem::gindex
    std::vector<std::vector<Expr>> kernel;  // basis of the homogeneous solutions
    std::vector<Expr> obstructions;
    bool consistent = true;
    bool symmetric = true;               // particular solution in the symmetric gauge
    int rank = 0;

    [[nodiscard]] int freedom() const { return static_cast<int>(kernel.size()); }
};

/// Coefficient matrix and rhs of the G system over the full N m^2 unknowns.
ExprMatrix el_system_matrix(const LagrangianSystem& sys);

/// Symmetric-gauge minimum-norm particular solution plus a kernel basis.
ELCoefficients solve_el_coefficients(const LagrangianSystem& sys, const ZeroOptions& opts = {});

/// Residuals of the G system for a given table.
std::vector<Expr> el_coefficient_residuals(const LagrangianSystem& sys, const std::vector<Expr>& G);

class CoefficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// X_a = d/dx^a + v^A_a d/dy^A + G^A_{a nu} d/dv^A_nu; throws CoefficientError
/// when G does not solve the system.
MultiVec el_multivector(const LagrangianSystem& sys, const std::vector<Expr>& G, const ZeroOptions& opts = {});

}  // namespace msym
