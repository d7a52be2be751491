#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msym/lagrangian.hpp"

namespace msym {

/// Jet -> extended multimomentum chart:
/// p^a_A = dL/dv^A_a, pa = L - v dL/dv.
CoordMap extended_legendre(const LagrangianSystem& sys);
/// Jet -> restricted multimomentum chart (affine momentum dropped).
CoordMap restricted_legendre(const LagrangianSystem& sys);
/// Extended -> restricted chart, forgetting the affine momentum.
CoordMap mu_projection(int m, int n);

/// Liouville forms on the extended chart:
/// Theta = p^a_A dy^A ^ d^{m-1}x_a + pa d^m x, Omega = -d Theta.
DiffForm liouville_theta(int m, int n);
DiffForm liouville_omega(int m, int n);

class HamiltonianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HamiltonianSystem {
    int m = 0;
    int n = 0;
    Chart chart;   // restricted multimomentum chart
    Expr H;
    std::string provenance;          // "legendre-inversion", "user-inverse" or "user"
    std::optional<CoordMap> inverse; // restricted -> jet velocities, when known
    DiffForm theta;                  // p dy ^ d^{m-1}x - H d^m x
    DiffForm omega;                  // -d theta

    [[nodiscard]] Symbol p(int a, int alpha) const { return Symbol::momentum(ChartKind::Restricted, a, alpha); }
    [[nodiscard]] Symbol y(int a) const { return Symbol::fiber(ChartKind::Restricted, a); }
    [[nodiscard]] Symbol x(int alpha) const { return Symbol::base(ChartKind::Restricted, alpha); }
};

HamiltonianSystem make_hamiltonian(int m, int n, Expr H, std::string provenance);

/// Inverts the momenta relations. Automatic when they are affine in v with a
/// constant invertible matrix; otherwise `user_inverse` (v^A_a in momentum
/// coordinates) is required and verified in both directions.
HamiltonianSystem hamiltonian_from_legendre(const LagrangianSystem& sys,
                                            const std::optional<std::map<Symbol, Expr>>& user_inverse = std::nullopt,
                                            const ZeroOptions& opts = {});

/// Restricted -> extended: (x, y, p) -> (x, y, p, -H).
CoordMap hamiltonian_section(const HamiltonianSystem& h);

/// Residuals over section symbols (phi_A, pi_A_a and their derivatives):
/// first N*m entries  d phi^A/dx^a - dH/dp^a_A,
/// last N entries     sum_a d pi^a_A/dx^a + dH/dy^A.
std::vector<Expr> hdw_equations(const HamiltonianSystem& h);

/// Flat table G^nu_{A a} of d/dp^nu_A coefficients of component a, indexed
/// ((A-1) m + (a-1)) m + (nu-1).
using MomentumTable = std::vector<Expr>;

/// Default free part: G^nu_{A a} = -delta^nu_a dH/dy^A / m.
MomentumTable default_hdw_table(const HamiltonianSystem& h);

/// X_a = d/dx^a + dH/dp^a_A d/dy^A + G^nu_{A a} d/dp^nu_A. Throws
/// HamiltonianError when the trace relation sum_a G^a_{A a} = -dH/dy^A fails.
MultiVec hdw_multivector(const HamiltonianSystem& h, const std::optional<MomentumTable>& free = std::nullopt,
                         const ZeroOptions& opts = {});

/// Dimension of the solution space of the trace relations: N(m^2 - 1).
int hdw_freedom(const HamiltonianSystem& h);

struct ConstraintCheck {
    std::string name;
    Expr constraint;
    Expr pulled;  // constraint o FL
    ZeroResult result;
};

struct ConstraintReport {
    std::vector<ConstraintCheck> checks;
    bool all_vanish = true;
    int rank = 0;              // numeric rank of the constraint differentials
    bool rank_constant = true;
};

ConstraintReport verify_constraints(const LagrangianSystem& sys, const std::vector<std::pair<std::string, Expr>>& constraints,
                                    const ZeroOptions& opts = {});

/// Damped Gauss-Newton projection of a restricted-chart point onto the
/// common zero set of `constraints`, to `tol` in max norm.
Point project_onto_constraints(const Point& start, const std::vector<Expr>& constraints, double tol = 1e-10);

/// Sampling options whose points are projected onto the constraint locus.
ZeroOptions on_constraint_locus(const ZeroOptions& base, const std::vector<Expr>& constraints);

}  // namespace msym
