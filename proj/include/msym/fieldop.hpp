#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msym/hamiltonian.hpp"

namespace msym {

enum class Flavor { Extended, Restricted };

/// f=1 representative of an m-vector field along a Legendre map:
///   K_a = d/dx^a + f^A_a d/dy^A + g^eta_{A a} d/dp^eta_A (+ h_a d/dpa)
/// with coefficients in jet coordinates.
struct FieldOperator {
    Flavor flavor = Flavor::Extended;
    int m = 0;
    int n = 0;
    CoordMap legendre;          // jet -> extended or restricted chart
    std::vector<Expr> f;        // LagrangianSystem::vindex(A, a)
    std::vector<Expr> g;        // LagrangianSystem::gindex(A, a, eta)
    std::vector<Expr> h;        // extended only
    std::vector<std::vector<Expr>> kernel;  // homogeneous directions in g
    bool normalized = true;

    [[nodiscard]] const Expr& f_at(int a, int alpha) const { return f[static_cast<std::size_t>((a - 1) * m + (alpha - 1))]; }
    [[nodiscard]] const Expr& g_at(int a, int alpha, int eta) const
    {
        return g[static_cast<std::size_t>(((a - 1) * m + (alpha - 1)) * m + (eta - 1))];
    }
    [[nodiscard]] int freedom() const { return static_cast<int>(kernel.size()); }
    /// The m-vector on the target chart, components in jet coordinates.
    [[nodiscard]] MultiVec multivector() const;
};

class OperatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AffineSign {
    Uniform,  // h_a = dL/dx^a + sum_{A,eta} (g^eta_{A eta} v^A_a - g^eta_{A a} v^A_eta)
    Printed,  // h_a = dL/dx^a - sum_{A, eta != a} (-1)^eta (g^eta_{A eta} v^A_a - g^eta_{A a} v^A_eta)
};

std::vector<Expr> affine_component(const LagrangianSystem& sys, const std::vector<Expr>& g, AffineSign sign = AffineSign::Uniform);

/// Trace relations sum_a g^a_{A a} = dL/dy^A as a linear system in g.
LinearSolution operator_coefficient_system(const LagrangianSystem& sys, const ZeroOptions& opts = {});

FieldOperator construct_extended_operator(const LagrangianSystem& sys, const ZeroOptions& opts = {});
FieldOperator restrict_operator(const FieldOperator& k);

struct ConditionCheck {
    bool ok = false;
    Evidence evidence = Evidence::Structural;
    std::string detail;  // failing component or residual
};

struct OperatorReport {
    ConditionCheck normalization;
    ConditionCheck semi_holonomy;
    ConditionCheck field_equation;
    /// Extended flavor: field equation with h recomputed under the printed sign.
    std::optional<ConditionCheck> printed_sign;

    [[nodiscard]] bool all() const { return normalization.ok && semi_holonomy.ok && field_equation.ok; }
};

/// Extended: FL~^*[i(K)(Omega o FL~)] = 0. Restricted: FL^*[i(K)(Omega_h o FL)]
/// when `h` is given, otherwise the trace relations.
OperatorReport check_operator(const FieldOperator& k, const LagrangianSystem& sys,
                              const std::optional<HamiltonianSystem>& h = std::nullopt, const ZeroOptions& opts = {});

/// 1-form FL~^*[i(K)(Omega o FL~)] on the jet chart (extended flavor).
DiffForm field_equation_form(const FieldOperator& k);

enum class ViewKind { MultiVector, JetField, Connection };

struct AlongMapView {
    ViewKind kind;
    FieldOperator op;

    [[nodiscard]] std::string render() const;
    [[nodiscard]] const std::vector<Expr>& f() const { return op.f; }
    [[nodiscard]] const std::vector<Expr>& g() const { return op.g; }
    [[nodiscard]] const std::vector<Expr>& h() const { return op.h; }
};

AlongMapView as_view(const FieldOperator& k, ViewKind kind);
std::string to_string(ViewKind k);

/// Transports G through the Legendre map:
/// g^eta_{A a} = L_{x^a v^A_eta} + L_{y^B v^A_eta} v^B_a + L_{v^B_nu v^A_eta} G^B_{a nu}.
std::vector<Expr> transport_el_coefficients(const LagrangianSystem& sys, const std::vector<Expr>& G);

FieldOperator operator_from_el(const MultiVec& x, const LagrangianSystem& sys, const ZeroOptions& opts = {});

struct ELFromOperator {
    bool consistent = false;
    std::vector<Expr> G;
    std::vector<std::vector<Expr>> kernel;
    std::vector<Expr> obstructions;
    std::optional<MultiVec> field;
};

ELFromOperator el_from_operator(const FieldOperator& k, const LagrangianSystem& sys, const ZeroOptions& opts = {});

/// `locus` restricts the i(Xh)Omega_h check (e.g. on_constraint_locus).
FieldOperator operator_from_hdw(const MultiVec& xh, const LagrangianSystem& sys, const HamiltonianSystem& h,
                                const ZeroOptions& locus = {});
MultiVec hdw_from_operator(const FieldOperator& k, const LagrangianSystem& sys, const HamiltonianSystem& h,
                           const ZeroOptions& opts = {});

/// i(K_a)(d xi o FL), one entry per base direction.
std::vector<Expr> transport_constraint(const FieldOperator& k, const Expr& xi);

/// f^A_a = v^A_a structurally.
bool is_semi_holonomic(const FieldOperator& k);

}  // namespace msym
