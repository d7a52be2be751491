#include "msym/symbol.hpp"

#include <stdexcept>
#include <utility>

namespace msym {

Symbol Symbol::field_d2(int a, int alpha, int nu)
{
    if (nu < alpha) std::swap(alpha, nu);
    return {ChartKind::Section, Role::FieldD2, static_cast<std::int8_t>(a), static_cast<std::int8_t>(alpha),
            static_cast<std::int8_t>(nu)};
}

std::string Symbol::name() const
{
    const auto n = [](int v) { return std::to_string(v); };
    switch (role) {
    case Role::Base: return "x_" + n(i);
    case Role::Fiber: return "y_" + n(i);
    case Role::Velocity: return "v_" + n(i) + "_" + n(j);
    case Role::Momentum: return "p_" + n(i) + "_" + n(j);
    case Role::AffineMomentum: return "pa";
    case Role::Field: return "phi_" + n(i);
    case Role::FieldD1: return "phi_" + n(i) + "_" + n(j);
    case Role::FieldD2: return "phi_" + n(i) + "_" + n(j) + "_" + n(k);
    case Role::SecMomentum: return "pi_" + n(i) + "_" + n(j);
    case Role::SecMomentumD1: return "pi_" + n(i) + "_" + n(j) + "_" + n(k);
    }
    return "?";
}

std::string to_string(ChartKind c)
{
    switch (c) {
    case ChartKind::Base: return "base";
    case ChartKind::Jet: return "jet";
    case ChartKind::Extended: return "extended-multimomentum";
    case ChartKind::Restricted: return "restricted-multimomentum";
    case ChartKind::Section: return "section";
    }
    return "?";
}

std::string to_string(Role r)
{
    switch (r) {
    case Role::Base: return "base";
    case Role::Fiber: return "fiber";
    case Role::Velocity: return "velocity";
    case Role::Momentum: return "momentum";
    case Role::AffineMomentum: return "affine-momentum";
    case Role::Field: return "field";
    case Role::FieldD1: return "field-d1";
    case Role::FieldD2: return "field-d2";
    case Role::SecMomentum: return "section-momentum";
    case Role::SecMomentumD1: return "section-momentum-d1";
    }
    return "?";
}

SymbolTable::SymbolTable(ChartKind chart, int m, int n) : chart_(chart), m_(m), n_(n)
{
    if (m < 1) throw std::invalid_argument("base dimension must be at least 1");
    if (n < 0 || (chart != ChartKind::Base && n < 1)) throw std::invalid_argument("fiber dimension must be at least 1");
    for (int a = 1; a <= m; ++a) add(Symbol::base(chart, a));
    if (chart == ChartKind::Base) return;
    if (chart == ChartKind::Section) {
        for (int A = 1; A <= n; ++A) add(Symbol::field(A));
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a) add(Symbol::field_d1(A, a));
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a)
                for (int b = a; b <= m; ++b) add(Symbol::field_d2(A, a, b));
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a) add(Symbol::sec_momentum(A, a));
        for (int A = 1; A <= n; ++A)
            for (int a = 1; a <= m; ++a)
                for (int b = 1; b <= m; ++b) add(Symbol::sec_momentum_d1(A, a, b));
        return;
    }
    for (int A = 1; A <= n; ++A) add(Symbol::fiber(chart, A));
    for (int A = 1; A <= n; ++A)
        for (int a = 1; a <= m; ++a)
            add(chart == ChartKind::Jet ? Symbol::velocity(A, a) : Symbol::momentum(chart, A, a));
    if (chart == ChartKind::Extended) add(Symbol::affine_momentum());
}

void SymbolTable::add(const Symbol& s)
{
    if (!by_name_.emplace(s.name(), s).second) throw std::logic_error("duplicate symbol name " + s.name());
    symbols_.push_back(s);
}

std::optional<Symbol> SymbolTable::lookup(const std::string& name) const
{
    if (auto it = by_name_.find(name); it != by_name_.end()) return it->second;
    return std::nullopt;
}

bool SymbolTable::contains(const Symbol& s) const
{
    if (auto it = by_name_.find(s.name()); it != by_name_.end()) return it->second == s;
    return false;
}

}  // namespace msym
