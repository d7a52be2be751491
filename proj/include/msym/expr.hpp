#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msym/rational.hpp"
#include "msym/symbol.hpp"

namespace msym {

enum class Func : std::uint8_t { Sin, Cos, Exp, Log, Sqrt, Tanh };

std::string to_string(Func f);

/// Node kinds, in the order used by the canonical total order.
enum class Kind : std::uint8_t { Number, Constant, Symbol, Function, Power, Product, Sum };

class Expr;
struct ExprNode;

/// Immutable symbolic scalar. Every value is kept in canonical form:
///  - sums are flat, like terms combined, terms sorted by their monomial;
///  - products are flat with a single rational coefficient, factors with equal
///    base merged into integer powers and sorted;
///  - positive integer powers of sums are expanded, negative ones kept as atoms;
///  - rational constants are folded exactly.
/// Copies share structure; all operations are pure.
class Expr {
public:
    Expr();
    Expr(Rational r);                                   // NOLINT(implicit)
    Expr(std::int64_t v) : Expr(Rational(v)) {}          // NOLINT(implicit)
    Expr(int v) : Expr(Rational(v)) {}                   // NOLINT(implicit)

    static Expr symbol(const Symbol& s);
    static Expr pi();

    [[nodiscard]] Kind kind() const;
    [[nodiscard]] const Rational& number() const;       // Number value, or Product coefficient
    [[nodiscard]] const Symbol& sym() const;
    [[nodiscard]] Func func() const;
    [[nodiscard]] int exponent() const;                  // Power only
    /// Function: {argument}; Power: {base}; Product: factors; Sum: terms.
    [[nodiscard]] std::span<const Expr> operands() const;
    [[nodiscard]] std::size_t hash() const;

    [[nodiscard]] bool is_number() const { return kind() == Kind::Number; }
    [[nodiscard]] bool is_zero() const;  // structural zero
    [[nodiscard]] bool is_one() const;
    /// True when the expression contains no symbols (pi allowed).
    [[nodiscard]] bool is_constant() const;

    [[nodiscard]] std::string str() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    Expr& operator+=(const Expr& o) { return *this = *this + o; }
    Expr& operator-=(const Expr& o) { return *this = *this - o; }
    Expr& operator*=(const Expr& o) { return *this = *this * o; }

    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator<(const Expr& a, const Expr& b);

    [[nodiscard]] const ExprNode* node() const { return node_.get(); }

private:
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
    friend struct ExprBuilder;

    std::shared_ptr<const ExprNode> node_;
};

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << e.str(); }

/// Total order used for canonical sorting: negative, zero or positive.
int compare(const Expr& a, const Expr& b);

Expr pow(const Expr& base, int exponent);
Expr apply(Func f, const Expr& arg);
inline Expr sin(const Expr& e) { return apply(Func::Sin, e); }
inline Expr cos(const Expr& e) { return apply(Func::Cos, e); }
inline Expr exp(const Expr& e) { return apply(Func::Exp, e); }
inline Expr log(const Expr& e) { return apply(Func::Log, e); }
inline Expr sqrt(const Expr& e) { return apply(Func::Sqrt, e); }
inline Expr tanh(const Expr& e) { return apply(Func::Tanh, e); }

inline Expr sym(const Symbol& s) { return Expr::symbol(s); }

/// Exact partial derivative, canonical.
Expr differentiate(const Expr& e, const Symbol& s);

/// Simultaneous substitution followed by canonicalization. All binding keys
/// must live in one chart; otherwise std::invalid_argument.
Expr substitute(const Expr& e, const std::map<Symbol, Expr>& bindings);

/// Same, but also rejects bindings whose key is not in `source`.
Expr substitute(const Expr& e, const std::map<Symbol, Expr>& bindings, ChartKind source);

/// Rebuilds the tree through the canonical constructors. For values already
/// produced by this library it is the identity.
Expr canonicalize(const Expr& e);

[[nodiscard]] std::set<Symbol> free_symbols(const Expr& e);
[[nodiscard]] bool depends_on(const Expr& e, const Symbol& s);

/// Structurally equal to a polynomial of degree <= 1 in `vars` whose
/// coefficients do not involve `vars`.
[[nodiscard]] bool is_affine_in(const Expr& e, const std::vector<Symbol>& vars);

class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& what, std::string subtree)
        : std::runtime_error(what), subtree_(std::move(subtree)) {}
    [[nodiscard]] const std::string& subtree() const { return subtree_; }

private:
    std::string subtree_;
};

using Point = std::map<Symbol, double>;

/// IEEE double evaluation. Throws EvalError on unbound symbols or when the
/// result (or any subtree) is non-finite; the error carries that subtree.
double eval_at(const Expr& e, const Point& point);

/// Like eval_at but returns NaN instead of throwing on non-finite values.
/// Unbound symbols still throw.
double eval_unchecked(const Expr& e, const Point& point);

/// Flat stack program for repeated numeric evaluation. Symbols are bound to
/// slots in the order given at compile time.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const Expr& e, const std::vector<Symbol>& slots);

    [[nodiscard]] double operator()(std::span<const double> values) const;

private:
    enum class Op : std::uint8_t { Const, Load, Add, Mul, PowI, Fn };
    struct Instr {
        Op op;
        std::uint8_t fn = 0;
        std::int32_t arg = 0;  // slot, operand count or exponent
        double value = 0.0;
    };
    void emit(const Expr& e, const std::map<Symbol, int>& slot_of);

    std::vector<Instr> code_;
    std::size_t max_stack_ = 0;
};

}  // namespace msym
