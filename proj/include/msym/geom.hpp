#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "msym/expr.hpp"
#include "msym/symbol.hpp"
#include "msym/zero.hpp"

namespace msym {

/// Coordinate system: base x^a, then (for bundle charts) y^A, then v^A_a or
/// p^a_A in A-major order, then the affine momentum for the extended chart.
class Chart {
public:
    Chart() = default;
    Chart(ChartKind kind, int m, int n);

    static Chart base(int m) { return {ChartKind::Base, m, 0}; }
    static Chart jet(int m, int n) { return {ChartKind::Jet, m, n}; }
    static Chart extended(int m, int n) { return {ChartKind::Extended, m, n}; }
    static Chart restricted(int m, int n) { return {ChartKind::Restricted, m, n}; }

    [[nodiscard]] ChartKind kind() const { return kind_; }
    [[nodiscard]] int m() const { return m_; }
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int dim() const { return static_cast<int>(coords_.size()); }
    [[nodiscard]] const std::vector<Symbol>& coords() const { return coords_; }
    [[nodiscard]] const Symbol& coord(int i) const { return coords_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] int index_of(const Symbol& s) const;  // -1 when absent
    [[nodiscard]] SymbolTable table() const { return {kind_, m_, n_}; }

    friend bool operator==(const Chart& a, const Chart& b)
    {
        return a.kind_ == b.kind_ && a.m_ == b.m_ && a.n_ == b.n_;
    }

private:
    ChartKind kind_ = ChartKind::Jet;
    int m_ = 0;
    int n_ = 0;
    std::vector<Symbol> coords_;
};

/// Smooth map between charts: one expression in source coordinates per
/// target coordinate.
struct CoordMap {
    Chart source;
    Chart target;
    std::vector<Expr> images;

    CoordMap() = default;
    CoordMap(Chart src, Chart tgt, std::vector<Expr> imgs);

    [[nodiscard]] const Expr& image(const Symbol& target_coord) const;
    /// Bindings target-coordinate -> image, for substitution.
    [[nodiscard]] std::map<Symbol, Expr> bindings() const;
    /// e(target coords) -> e o map (source coords).
    [[nodiscard]] Expr pull(const Expr& e) const;
};

/// this o first: source(first) -> target(this).
CoordMap compose(const CoordMap& outer, const CoordMap& inner);

/// Drops coordinates of `from` that `to` does not have (e.g. mu: extended ->
/// restricted, or a bundle chart -> its base).
CoordMap projection(const Chart& from, const Chart& to);

struct VectorField {
    Chart chart;
    std::vector<Expr> comps;  // one per chart coordinate

    VectorField() = default;
    explicit VectorField(Chart c) : chart(std::move(c)), comps(static_cast<std::size_t>(chart.dim())) {}
    VectorField(Chart c, std::vector<Expr> v);

    static VectorField coordinate(const Chart& c, const Symbol& s);
    [[nodiscard]] Expr& at(const Symbol& s);
    [[nodiscard]] const Expr& at(const Symbol& s) const;
    [[nodiscard]] std::string str() const;
};

/// Decomposable m-vector X_1 ^ ... ^ X_m.
struct MultiVec {
    Chart chart;
    std::vector<VectorField> comps;
};

class DiffForm {
public:
    using Index = std::vector<int>;  // strictly increasing coordinate indices

    DiffForm() = default;
    DiffForm(Chart c, int degree);

    static DiffForm function(const Chart& c, const Expr& f);
    static DiffForm basis(const Chart& c, const Symbol& s);

    [[nodiscard]] const Chart& chart() const { return chart_; }
    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] const std::map<Index, Expr>& terms() const { return terms_; }

    /// Coefficient of dz^{s_1} ^ ... ^ dz^{s_k} in any order (sign applied).
    [[nodiscard]] Expr coefficient(const std::vector<Symbol>& dirs) const;
    /// Adds coef * dz^{idx_1} ^ ... for an arbitrary ordering of indices.
    void add(Index idx, const Expr& coef);

    [[nodiscard]] DiffForm map_coefficients(const std::function<Expr(const Expr&)>& f) const;
    [[nodiscard]] std::string str() const;

    friend DiffForm operator+(const DiffForm& a, const DiffForm& b);
    friend DiffForm operator-(const DiffForm& a, const DiffForm& b);
    friend DiffForm operator-(const DiffForm& a);
    friend DiffForm operator*(const Expr& f, const DiffForm& a);

private:
    Chart chart_;
    int degree_ = 0;
    std::map<Index, Expr> terms_;
};

DiffForm wedge(const DiffForm& a, const DiffForm& b);
/// Exterior derivative with respect to the form's own chart coordinates.
DiffForm exterior_derivative(const DiffForm& f);
/// phi^* f for f on phi.target; coefficients are composed with phi and the
/// basis differentials replaced by d(phi^i).
DiffForm pullback(const DiffForm& f, const CoordMap& phi);
DiffForm interior(const VectorField& x, const DiffForm& f);
/// i(X_m) o ... o i(X_1) f, i.e. result(Z...) = f(X_1, ..., X_m, Z...).
DiffForm interior_mv(const MultiVec& x, const DiffForm& f);

/// dx^1 ^ ... ^ dx^m on a chart.
DiffForm volume_form(const Chart& c);
/// d^{m-1}x_a := i(d/dx^a) d^m x.
DiffForm volume_minus(const Chart& c, int alpha);

/// Every coefficient passes is_zero. `failing` names the first bad component.
ZeroResult is_zero(const DiffForm& f, const ZeroOptions& opts = {}, std::string* failing = nullptr);
bool structurally_equal(const DiffForm& a, const DiffForm& b);

VectorField lie_bracket(const VectorField& a, const VectorField& b);

struct InvolutivityReport {
    bool involutive = true;
    Evidence evidence = Evidence::Structural;
    struct Failure {
        int a;
        int b;
        Point witness;
    };
    std::vector<Failure> failures;
};

/// For the f=1 representative: [X_a, X_b] must lie in span(X_1..X_m).
/// Structural residual first, else singular-value rank tests at samples.
InvolutivityReport check_involutive(const MultiVec& x, const ZeroOptions& opts = {}, int samples = 64,
                                    double rel_tol = 1e-8);

struct TransverseReport {
    bool transverse = false;
    Evidence evidence = Evidence::Structural;
    Expr value;  // i(X)(projection^* omega)
};

TransverseReport check_transverse(const MultiVec& x, const CoordMap& proj, const ZeroOptions& opts = {});

}  // namespace msym
