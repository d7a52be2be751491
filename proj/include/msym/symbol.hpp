#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace msym {

/// Which coordinate system a symbol belongs to.
///   Base       (x^a) on M
///   Jet        (x^a, y^A, v^A_a) on J1E
///   Extended   (x^a, y^A, p^a_A, p) on the extended multimomentum bundle
///   Restricted (x^a, y^A, p^a_A) on the restricted multimomentum bundle
///   Section    formal section values and derivatives (phi, dphi, ddphi, pi, dpi)
enum class ChartKind : std::uint8_t { Base, Jet, Extended, Restricted, Section };

enum class Role : std::uint8_t {
    Base,            // x_a
    Fiber,           // y_A
    Velocity,        // v_A_a
    Momentum,        // p_A_a
    AffineMomentum,  // pa
    Field,           // phi_A
    FieldD1,         // phi_A_a      = d phi^A / d x^a
    FieldD2,         // phi_A_a_b    = d2 phi^A / d x^a d x^b, a <= b
    SecMomentum,     // pi_A_a       momentum component of a Hamiltonian section
    SecMomentumD1,   // pi_A_a_b     = d pi^a_A / d x^b
};

/// A chart coordinate. Indices are 1-based; unused indices are 0.
struct Symbol {
    ChartKind chart = ChartKind::Jet;
    Role role = Role::Base;
    std::int8_t i = 0;
    std::int8_t j = 0;
    std::int8_t k = 0;

    [[nodiscard]] std::string name() const;

    friend auto operator<=>(const Symbol&, const Symbol&) = default;
    friend bool operator==(const Symbol&, const Symbol&) = default;

    static Symbol base(ChartKind c, int alpha) { return {c, Role::Base, static_cast<std::int8_t>(alpha)}; }
    static Symbol fiber(ChartKind c, int a) { return {c, Role::Fiber, static_cast<std::int8_t>(a)}; }
    static Symbol velocity(int a, int alpha)
    {
        return {ChartKind::Jet, Role::Velocity, static_cast<std::int8_t>(a), static_cast<std::int8_t>(alpha)};
    }
    static Symbol momentum(ChartKind c, int a, int alpha)
    {
        return {c, Role::Momentum, static_cast<std::int8_t>(a), static_cast<std::int8_t>(alpha)};
    }
    static Symbol affine_momentum() { return {ChartKind::Extended, Role::AffineMomentum}; }
    static Symbol field(int a) { return {ChartKind::Section, Role::Field, static_cast<std::int8_t>(a)}; }
    static Symbol field_d1(int a, int alpha)
    {
        return {ChartKind::Section, Role::FieldD1, static_cast<std::int8_t>(a), static_cast<std::int8_t>(alpha)};
    }
    /// Second derivative symbol; the two derivative indices are stored sorted.
    static Symbol field_d2(int a, int alpha, int nu);
    static Symbol sec_momentum(int a, int alpha)
    {
        return {ChartKind::Section, Role::SecMomentum, static_cast<std::int8_t>(a), static_cast<std::int8_t>(alpha)};
    }
    static Symbol sec_momentum_d1(int a, int alpha, int beta)
    {
        return {ChartKind::Section, Role::SecMomentumD1, static_cast<std::int8_t>(a), static_cast<std::int8_t>(alpha),
                static_cast<std::int8_t>(beta)};
    }
};

std::string to_string(ChartKind c);
std::string to_string(Role r);

/// Ordered (name -> symbol) table for one chart, used by the parser.
class SymbolTable {
public:
    SymbolTable() = default;
    SymbolTable(ChartKind chart, int m, int n);

    static SymbolTable base(int m) { return {ChartKind::Base, m, 0}; }
    static SymbolTable jet(int m, int n) { return {ChartKind::Jet, m, n}; }
    static SymbolTable extended(int m, int n) { return {ChartKind::Extended, m, n}; }
    static SymbolTable restricted(int m, int n) { return {ChartKind::Restricted, m, n}; }
    static SymbolTable section(int m, int n) { return {ChartKind::Section, m, n}; }

    [[nodiscard]] ChartKind chart() const { return chart_; }
    [[nodiscard]] int m() const { return m_; }
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] const std::vector<Symbol>& symbols() const { return symbols_; }
    [[nodiscard]] std::optional<Symbol> lookup(const std::string& name) const;
    [[nodiscard]] bool contains(const Symbol& s) const;

private:
    void add(const Symbol& s);

    ChartKind chart_ = ChartKind::Jet;
    int m_ = 0;
    int n_ = 0;
    std::vector<Symbol> symbols_;
    std::map<std::string, Symbol> by_name_;
};

}  // namespace msym
