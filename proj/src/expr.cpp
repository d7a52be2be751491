#include "msym/expr.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numeric>

namespace msym {

struct ExprNode {
    Kind kind = Kind::Number;
    Rational value;
    Symbol sym{};
    Func fn = Func::Sin;
    int exponent = 0;
    std::vector<Expr> ops;
    std::size_t hash = 0;
};

std::string to_string(Func f)
{
    switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Tanh: return "tanh";
    }
    return "?";
}

namespace {

std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

std::size_t hash_of(const ExprNode& n)
{
    std::size_t h = static_cast<std::size_t>(n.kind) * 1000003ULL;
    switch (n.kind) {
    case Kind::Number:
        h = mix(h, std::hash<std::int64_t>{}(n.value.num()));
        h = mix(h, std::hash<std::int64_t>{}(n.value.den()));
        break;
    case Kind::Constant: break;
    case Kind::Symbol:
        h = mix(h, static_cast<std::size_t>(n.sym.chart));
        h = mix(h, static_cast<std::size_t>(n.sym.role));
        h = mix(h, static_cast<std::size_t>(n.sym.i) * 131 + static_cast<std::size_t>(n.sym.j) * 17 +
                       static_cast<std::size_t>(n.sym.k));
        break;
    case Kind::Function: h = mix(h, static_cast<std::size_t>(n.fn)); break;
    case Kind::Power: h = mix(h, static_cast<std::size_t>(n.exponent + 1000)); break;
    case Kind::Product:
        h = mix(h, std::hash<std::int64_t>{}(n.value.num()));
        h = mix(h, std::hash<std::int64_t>{}(n.value.den()));
        break;
    case Kind::Sum: break;
    }
    for (const auto& o : n.ops) h = mix(h, o.hash());
    return h;
}

}  // namespace

struct ExprBuilder {
    static Expr make(ExprNode n)
    {
        n.hash = hash_of(n);
        return Expr(std::make_shared<const ExprNode>(std::move(n)));
    }
    static Expr number(const Rational& r)
    {
        ExprNode n;
        n.kind = Kind::Number;
        n.value = r;
        return make(std::move(n));
    }
    static Expr power_node(const Expr& base, int e)
    {
        ExprNode n;
        n.kind = Kind::Power;
        n.exponent = e;
        n.ops = {base};
        return make(std::move(n));
    }
    static Expr product_node(const Rational& coef, std::vector<Expr> factors)
    {
        ExprNode n;
        n.kind = Kind::Product;
        n.value = coef;
        n.ops = std::move(factors);
        return make(std::move(n));
    }
    static Expr sum_node(std::vector<Expr> terms)
    {
        ExprNode n;
        n.kind = Kind::Sum;
        n.ops = std::move(terms);
        return make(std::move(n));
    }
    static Expr function_node(Func f, const Expr& arg)
    {
        ExprNode n;
        n.kind = Kind::Function;
        n.fn = f;
        n.ops = {arg};
        return make(std::move(n));
    }
};

namespace {

const Expr& zero_expr()
{
    static const Expr z = ExprBuilder::number(Rational(0));
    return z;
}

const Expr& one_expr()
{
    static const Expr o = ExprBuilder::number(Rational(1));
    return o;
}

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

using FactorMap = std::map<Expr, int, ExprLess>;
using TermMap = std::map<Expr, Rational, ExprLess>;

// (coefficient, monomial) with monomial == 1 for plain numbers.
std::pair<Rational, Expr> split_term(const Expr& t)
{
    if (t.kind() == Kind::Number) return {t.number(), one_expr()};
    if (t.kind() == Kind::Product) {
        const auto ops = t.operands();
        if (t.number().is_one()) return {t.number(), t};
        if (ops.size() == 1) return {t.number(), ops[0]};
        return {t.number(), ExprBuilder::product_node(Rational(1), std::vector<Expr>(ops.begin(), ops.end()))};
    }
    return {Rational(1), t};
}

Expr build_product(Rational coef, const FactorMap& factors);

Expr make_term(const Rational& c, const Expr& mono)
{
    if (mono.kind() == Kind::Number) return ExprBuilder::number(c * mono.number());
    if (c.is_one()) return mono;
    if (mono.kind() == Kind::Product) {
        const auto ops = mono.operands();
        return ExprBuilder::product_node(c * mono.number(), std::vector<Expr>(ops.begin(), ops.end()));
    }
    return ExprBuilder::product_node(c, {mono});
}

void add_term(TermMap& terms, const Expr& t)
{
    if (t.kind() == Kind::Number && t.number().is_zero()) return;
    auto [c, mono] = split_term(t);
    auto [it, inserted] = terms.try_emplace(mono, c);
    if (!inserted) it->second += c;
}

void absorb_terms(TermMap& terms, const Expr& e)
{
    if (e.kind() == Kind::Sum)
        for (const auto& t : e.operands()) add_term(terms, t);
    else
        add_term(terms, e);
}

Expr build_sum(const TermMap& terms)
{
    std::vector<Expr> out;
    out.reserve(terms.size());
    for (const auto& [mono, c] : terms)
        if (!c.is_zero()) out.push_back(make_term(c, mono));
    if (out.empty()) return zero_expr();
    if (out.size() == 1) return out.front();
    return ExprBuilder::sum_node(std::move(out));
}

Expr distribute(const Expr& p, const Expr& sum)
{
    TermMap terms;
    for (const auto& t : sum.operands()) absorb_terms(terms, p * t);
    return build_sum(terms);
}

void absorb_factor(FactorMap& f, const Expr& x)
{
    if (x.kind() == Kind::Power)
        f[x.operands()[0]] += x.exponent();
    else
        f[x] += 1;
}

Expr build_product(Rational coef, const FactorMap& factors)
{
    if (coef.is_zero()) return zero_expr();
    std::vector<Expr> extras;
    std::vector<std::pair<Expr, int>> positive_sums;
    std::vector<Expr> fs;
    for (auto [base, e] : factors) {
        if (e == 0) continue;
        if (base.kind() == Kind::Function && base.func() == Func::Sqrt && (e >= 2 || e <= -2)) {
            extras.push_back(pow(base.operands()[0], e / 2));
            e %= 2;
            if (e == 0) continue;
        }
        if (base.kind() == Kind::Sum && e > 0) {
            positive_sums.emplace_back(base, e);
            continue;
        }
        fs.push_back(e == 1 ? base : ExprBuilder::power_node(base, e));
    }
    Expr r;
    if (fs.empty())
        r = ExprBuilder::number(coef);
    else if (coef.is_one() && fs.size() == 1)
        r = fs.front();
    else
        r = ExprBuilder::product_node(coef, std::move(fs));
    for (const auto& [s, e] : positive_sums)
        for (int i = 0; i < e; ++i) r = distribute(r, s);
    for (const auto& x : extras) r = r * x;
    return r;
}

int kind_rank(Kind k) { return static_cast<int>(k); }

}  // namespace

// ---------------------------------------------------------------------------

Expr::Expr() : node_(zero_expr().node_) {}
Expr::Expr(Rational r) : node_(ExprBuilder::number(r).node_) {}

Expr Expr::symbol(const Symbol& s)
{
    ExprNode n;
    n.kind = Kind::Symbol;
    n.sym = s;
    return ExprBuilder::make(std::move(n));
}

Expr Expr::pi()
{
    static const Expr p = [] {
        ExprNode n;
        n.kind = Kind::Constant;
        return ExprBuilder::make(std::move(n));
    }();
    return p;
}

Kind Expr::kind() const { return node_->kind; }
const Rational& Expr::number() const { return node_->value; }
const Symbol& Expr::sym() const { return node_->sym; }
Func Expr::func() const { return node_->fn; }
int Expr::exponent() const { return node_->exponent; }
std::span<const Expr> Expr::operands() const { return node_->ops; }
std::size_t Expr::hash() const { return node_->hash; }
bool Expr::is_zero() const { return kind() == Kind::Number && number().is_zero(); }
bool Expr::is_one() const { return kind() == Kind::Number && number().is_one(); }

bool Expr::is_constant() const
{
    if (kind() == Kind::Symbol) return false;
    for (const auto& o : operands())
        if (!o.is_constant()) return false;
    return true;
}

int compare(const Expr& a, const Expr& b)
{
    if (a.node() == b.node()) return 0;
    if (a.kind() != b.kind()) return kind_rank(a.kind()) < kind_rank(b.kind()) ? -1 : 1;
    switch (a.kind()) {
    case Kind::Number: {
        auto c = a.number() <=> b.number();
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case Kind::Constant: return 0;
    case Kind::Symbol: {
        auto c = a.sym() <=> b.sym();
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case Kind::Function:
        if (a.func() != b.func()) return a.func() < b.func() ? -1 : 1;
        return compare(a.operands()[0], b.operands()[0]);
    case Kind::Power:
        if (int c = compare(a.operands()[0], b.operands()[0]); c != 0) return c;
        return a.exponent() < b.exponent() ? -1 : (a.exponent() > b.exponent() ? 1 : 0);
    case Kind::Product:
    case Kind::Sum: {
        const auto x = a.operands();
        const auto y = b.operands();
        const std::size_t n = std::min(x.size(), y.size());
        for (std::size_t i = 0; i < n; ++i)
            if (int c = compare(x[i], y[i]); c != 0) return c;
        if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
        if (a.kind() == Kind::Product) {
            auto c = a.number() <=> b.number();
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        return 0;
    }
    }
    return 0;
}

bool operator==(const Expr& a, const Expr& b)
{
    if (a.node() == b.node()) return true;
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
}

bool operator<(const Expr& a, const Expr& b) { return compare(a, b) < 0; }

Expr operator+(const Expr& a, const Expr& b)
{
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_number() && b.is_number()) return ExprBuilder::number(a.number() + b.number());
    TermMap terms;
    absorb_terms(terms, a);
    absorb_terms(terms, b);
    return build_sum(terms);
}

Expr operator-(const Expr& a) { return Expr(Rational(-1)) * a; }
Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b)
{
    if (a.is_number()) {
        if (a.number().is_zero()) return zero_expr();
        if (b.is_number()) return ExprBuilder::number(a.number() * b.number());
        if (a.number().is_one()) return b;
    }
    if (b.is_number()) {
        if (b.number().is_zero()) return zero_expr();
        if (b.number().is_one()) return a;
    }
    Rational coef(1);
    FactorMap f;
    const auto absorb = [&](const Expr& e) {
        if (e.kind() == Kind::Number) {
            coef *= e.number();
        } else if (e.kind() == Kind::Product) {
            coef *= e.number();
            for (const auto& x : e.operands()) absorb_factor(f, x);
        } else {
            absorb_factor(f, e);
        }
    };
    absorb(a);
    absorb(b);
    return build_product(coef, f);
}

Expr operator/(const Expr& a, const Expr& b)
{
    if (b.is_zero()) throw std::domain_error("symbolic division by zero");
    return a * pow(b, -1);
}

Expr pow(const Expr& base, int n)
{
    if (n == 0) return one_expr();
    if (n == 1) return base;
    switch (base.kind()) {
    case Kind::Number: return ExprBuilder::number(base.number().pow(n));
    case Kind::Sum:
        if (n > 0) {
            Expr r = base;
            for (int i = 1; i < n; ++i) r = r * base;
            return r;
        }
        return build_product(Rational(1), FactorMap{{base, n}});
    case Kind::Product: {
        FactorMap f;
        for (const auto& x : base.operands()) {
            if (x.kind() == Kind::Power)
                f[x.operands()[0]] += x.exponent() * n;
            else
                f[x] += n;
        }
        return build_product(base.number().pow(n), f);
    }
    case Kind::Power: return build_product(Rational(1), FactorMap{{base.operands()[0], base.exponent() * n}});
    default: return build_product(Rational(1), FactorMap{{base, n}});
    }
}

namespace {

std::optional<std::int64_t> exact_isqrt(std::int64_t v)
{
    if (v < 0) return std::nullopt;
    auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
    for (std::int64_t c = std::max<std::int64_t>(0, r - 2); c <= r + 2; ++c)
        if (c * c == v) return c;
    return std::nullopt;
}

}  // namespace

Expr apply(Func f, const Expr& arg)
{
    if (arg.is_number()) {
        const Rational& r = arg.number();
        switch (f) {
        case Func::Sin:
        case Func::Tanh:
            if (r.is_zero()) return zero_expr();
            break;
        case Func::Cos:
        case Func::Exp:
            if (r.is_zero()) return one_expr();
            break;
        case Func::Log:
            if (r.is_one()) return zero_expr();
            break;
        case Func::Sqrt:
            if (auto n = exact_isqrt(r.num()); n && !r.is_negative()) {
                if (auto d = exact_isqrt(r.den()); d) return Expr(Rational(*n, *d));
            }
            break;
        }
    }
    if (f == Func::Log && arg.kind() == Kind::Function && arg.func() == Func::Exp) return arg.operands()[0];
    return ExprBuilder::function_node(f, arg);
}

// ---------------------------------------------------------------------------

Expr differentiate(const Expr& e, const Symbol& s)
{
    switch (e.kind()) {
    case Kind::Number:
    case Kind::Constant: return zero_expr();
    case Kind::Symbol: return e.sym() == s ? one_expr() : zero_expr();
    case Kind::Function: {
        const Expr& u = e.operands()[0];
        Expr du = differentiate(u, s);
        if (du.is_zero()) return zero_expr();
        switch (e.func()) {
        case Func::Sin: return cos(u) * du;
        case Func::Cos: return -(sin(u) * du);
        case Func::Exp: return e * du;
        case Func::Log: return du / u;
        case Func::Sqrt: return du / (Expr(2) * e);
        case Func::Tanh: return (Expr(1) - pow(e, 2)) * du;
        }
        return zero_expr();
    }
    case Kind::Power: {
        const Expr& b = e.operands()[0];
        Expr db = differentiate(b, s);
        if (db.is_zero()) return zero_expr();
        return Expr(e.exponent()) * pow(b, e.exponent() - 1) * db;
    }
    case Kind::Product: {
        const auto fs = e.operands();
        Expr total;
        for (std::size_t i = 0; i < fs.size(); ++i) {
            Expr di = differentiate(fs[i], s);
            if (di.is_zero()) continue;
            Expr term = Expr(e.number()) * di;
            for (std::size_t j = 0; j < fs.size(); ++j)
                if (j != i) term = term * fs[j];
            total = total + term;
        }
        return total;
    }
    case Kind::Sum: {
        TermMap terms;
        for (const auto& t : e.operands()) absorb_terms(terms, differentiate(t, s));
        return build_sum(terms);
    }
    }
    return zero_expr();
}

namespace {

Expr rebuild(const Expr& e, const std::map<Symbol, Expr>& b)
{
    switch (e.kind()) {
    case Kind::Number:
    case Kind::Constant: return e;
    case Kind::Symbol: {
        if (auto it = b.find(e.sym()); it != b.end()) return it->second;
        return e;
    }
    case Kind::Function: return apply(e.func(), rebuild(e.operands()[0], b));
    case Kind::Power: return pow(rebuild(e.operands()[0], b), e.exponent());
    case Kind::Product: {
        Expr r(e.number());
        for (const auto& f : e.operands()) r = r * rebuild(f, b);
        return r;
    }
    case Kind::Sum: {
        TermMap terms;
        for (const auto& t : e.operands()) absorb_terms(terms, rebuild(t, b));
        return build_sum(terms);
    }
    }
    return e;
}

}  // namespace

Expr substitute(const Expr& e, const std::map<Symbol, Expr>& bindings)
{
    if (bindings.empty()) return e;
    const ChartKind c = bindings.begin()->first.chart;
    for (const auto& [s, _] : bindings)
        if (s.chart != c) throw std::invalid_argument("substitution bindings span more than one chart (" + s.name() + ")");
    return rebuild(e, bindings);
}

Expr substitute(const Expr& e, const std::map<Symbol, Expr>& bindings, ChartKind source)
{
    for (const auto& [s, _] : bindings)
        if (s.chart != source)
            throw std::invalid_argument("binding for " + s.name() + " is not a coordinate of the " + to_string(source) +
                                        " chart");
    return substitute(e, bindings);
}

Expr canonicalize(const Expr& e) { return rebuild(e, {}); }

namespace {

void collect(const Expr& e, std::set<Symbol>& out)
{
    if (e.kind() == Kind::Symbol) {
        out.insert(e.sym());
        return;
    }
    for (const auto& o : e.operands()) collect(o, out);
}

}  // namespace

std::set<Symbol> free_symbols(const Expr& e)
{
    std::set<Symbol> out;
    collect(e, out);
    return out;
}

bool depends_on(const Expr& e, const Symbol& s)
{
    if (e.kind() == Kind::Symbol) return e.sym() == s;
    for (const auto& o : e.operands())
        if (depends_on(o, s)) return true;
    return false;
}

bool is_affine_in(const Expr& e, const std::vector<Symbol>& vars)
{
    for (const auto& v : vars) {
        Expr d = differentiate(e, v);
        for (const auto& w : vars)
            if (depends_on(d, w)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

double apply_fn(Func f, double x)
{
    switch (f) {
    case Func::Sin: return std::sin(x);
    case Func::Cos: return std::cos(x);
    case Func::Exp: return std::exp(x);
    case Func::Log: return std::log(x);
    case Func::Sqrt: return std::sqrt(x);
    case Func::Tanh: return std::tanh(x);
    }
    return std::nan("");
}

double int_pow(double b, int n)
{
    if (n < 0) return 1.0 / int_pow(b, -n);
    double r = 1.0;
    while (n > 0) {
        if (n & 1) r *= b;
        n >>= 1;
        if (n) b *= b;
    }
    return r;
}

template <bool Check>
double eval_impl(const Expr& e, const Point& p)
{
    double v = 0.0;
    switch (e.kind()) {
    case Kind::Number: v = e.number().to_double(); break;
    case Kind::Constant: v = M_PI; break;
    case Kind::Symbol: {
        auto it = p.find(e.sym());
        if (it == p.end()) throw EvalError("unbound symbol " + e.sym().name(), e.sym().name());
        v = it->second;
        break;
    }
    case Kind::Function: v = apply_fn(e.func(), eval_impl<Check>(e.operands()[0], p)); break;
    case Kind::Power: v = int_pow(eval_impl<Check>(e.operands()[0], p), e.exponent()); break;
    case Kind::Product:
        v = e.number().to_double();
        for (const auto& f : e.operands()) v *= eval_impl<Check>(f, p);
        break;
    case Kind::Sum:
        for (const auto& t : e.operands()) v += eval_impl<Check>(t, p);
        break;
    }
    if constexpr (Check) {
        if (!std::isfinite(v)) throw EvalError("non-finite value while evaluating " + e.str(), e.str());
    }
    return v;
}

}  // namespace

double eval_at(const Expr& e, const Point& point) { return eval_impl<true>(e, point); }
double eval_unchecked(const Expr& e, const Point& point) { return eval_impl<false>(e, point); }

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<Symbol>& slots)
{
    std::map<Symbol, int> slot_of;
    for (std::size_t i = 0; i < slots.size(); ++i) slot_of[slots[i]] = static_cast<int>(i);
    emit(e, slot_of);
    std::size_t depth = 0;
    for (const auto& in : code_) {
        switch (in.op) {
        case Op::Const:
        case Op::Load: ++depth; break;
        case Op::Add:
        case Op::Mul: --depth; break;
        default: break;
        }
        max_stack_ = std::max(max_stack_, depth);
    }
}

void CompiledExpr::emit(const Expr& e, const std::map<Symbol, int>& slot_of)
{
    switch (e.kind()) {
    case Kind::Number: code_.push_back({Op::Const, 0, 0, e.number().to_double()}); break;
    case Kind::Constant: code_.push_back({Op::Const, 0, 0, M_PI}); break;
    case Kind::Symbol: {
        auto it = slot_of.find(e.sym());
        if (it == slot_of.end()) throw EvalError("unbound symbol " + e.sym().name(), e.sym().name());
        code_.push_back({Op::Load, 0, it->second, 0.0});
        break;
    }
    case Kind::Function:
        emit(e.operands()[0], slot_of);
        code_.push_back({Op::Fn, static_cast<std::uint8_t>(e.func()), 0, 0.0});
        break;
    case Kind::Power:
        emit(e.operands()[0], slot_of);
        code_.push_back({Op::PowI, 0, e.exponent(), 0.0});
        break;
    case Kind::Product:
        code_.push_back({Op::Const, 0, 0, e.number().to_double()});
        for (const auto& f : e.operands()) {
            emit(f, slot_of);
            code_.push_back({Op::Mul, 0, 0, 0.0});
        }
        break;
    case Kind::Sum: {
        bool first = true;
        for (const auto& t : e.operands()) {
            emit(t, slot_of);
            if (!first) code_.push_back({Op::Add, 0, 0, 0.0});
            first = false;
        }
        break;
    }
    }
}

double CompiledExpr::operator()(std::span<const double> values) const
{
    std::array<double, 128> small{};
    std::vector<double> big;
    double* st = small.data();
    if (max_stack_ > small.size()) {
        big.resize(max_stack_);
        st = big.data();
    }
    std::size_t top = 0;
    for (const auto& in : code_) {
        switch (in.op) {
        case Op::Const: st[top++] = in.value; break;
        case Op::Load: st[top++] = values[static_cast<std::size_t>(in.arg)]; break;
        case Op::Add:
            --top;
            st[top - 1] += st[top];
            break;
        case Op::Mul:
            --top;
            st[top - 1] *= st[top];
            break;
        case Op::PowI: st[top - 1] = int_pow(st[top - 1], in.arg); break;
        case Op::Fn: st[top - 1] = apply_fn(static_cast<Func>(in.fn), st[top - 1]); break;
        }
    }
    return top ? st[0] : 0.0;
}

// ---------------------------------------------------------------------------

namespace {

bool negative_term(const Expr& t)
{
    return (t.kind() == Kind::Number || t.kind() == Kind::Product) && t.number().is_negative();
}

std::string render(const Expr& e);

std::string render_base(const Expr& b)
{
    switch (b.kind()) {
    case Kind::Sum: return "(" + render(b) + ")";
    case Kind::Symbol: return b.sym().name();
    case Kind::Constant: return "pi";
    case Kind::Function: return to_string(b.func()) + "(" + render(b.operands()[0]) + ")";
    case Kind::Number:
        if (b.number().is_integer() && !b.number().is_negative()) return b.number().str();
        return "(" + b.number().str() + ")";
    default: return "(" + render(b) + ")";
    }
}

std::string render_factor(const Expr& base, int e)
{
    if (e == 1) return render_base(base);
    return render_base(base) + "^" + (e < 0 ? "(" + std::to_string(e) + ")" : std::to_string(e));
}

std::string render_product(const Rational& coef, std::span<const Expr> factors)
{
    std::vector<std::string> num;
    std::vector<std::string> den;
    for (const auto& f : factors) {
        // A sum in a denominator keeps its negative exponent: written as a
        // quotient it would be re-expanded by the parser.
        if (f.kind() == Kind::Power && f.exponent() < 0 && f.operands()[0].kind() != Kind::Sum)
            den.push_back(render_factor(f.operands()[0], -f.exponent()));
        else if (f.kind() == Kind::Power)
            num.push_back(render_factor(f.operands()[0], f.exponent()));
        else
            num.push_back(render_factor(f, 1));
    }
    if (coef.num() != 1 || num.empty()) num.insert(num.begin(), std::to_string(coef.num()));
    if (coef.den() != 1) den.insert(den.begin(), std::to_string(coef.den()));
    std::string out;
    for (std::size_t i = 0; i < num.size(); ++i) out += (i ? "*" : "") + num[i];
    if (den.empty()) return out;
    out += "/";
    if (den.size() == 1) return out + den.front();
    out += "(";
    for (std::size_t i = 0; i < den.size(); ++i) out += (i ? "*" : "") + den[i];
    return out + ")";
}

std::string render_abs(const Expr& t)
{
    switch (t.kind()) {
    case Kind::Number: return t.number().abs().str();
    case Kind::Product: return render_product(t.number().abs(), t.operands());
    default: {
        std::array<Expr, 1> one{t};
        return render_product(Rational(1), one);
    }
    }
}

std::string render(const Expr& e)
{
    if (e.kind() == Kind::Number) return e.number().str();
    if (e.kind() == Kind::Sum) {
        std::string out;
        bool first = true;
        for (const auto& t : e.operands()) {
            const bool neg = negative_term(t);
            if (first)
                out += neg ? "-" : "";
            else
                out += neg ? " - " : " + ";
            out += render_abs(t);
            first = false;
        }
        return out;
    }
    return (negative_term(e) ? "-" : "") + render_abs(e);
}

}  // namespace

std::string Expr::str() const { return render(*this); }

}  // namespace msym
