#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace msym {

/// Exact rational with 64-bit numerator/denominator. Arithmetic is checked:
/// overflow throws std::overflow_error instead of wrapping.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
    Rational(std::int64_t n, std::int64_t d);

    [[nodiscard]] std::int64_t num() const { return num_; }
    [[nodiscard]] std::int64_t den() const { return den_; }

    [[nodiscard]] bool is_zero() const { return num_ == 0; }
    [[nodiscard]] bool is_one() const { return num_ == 1 && den_ == 1; }
    [[nodiscard]] bool is_integer() const { return den_ == 1; }
    [[nodiscard]] bool is_negative() const { return num_ < 0; }
    [[nodiscard]] double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    [[nodiscard]] std::string str() const;

    /// Parses an unsigned decimal literal such as "12", "0.25" or "3.5e-2".
    static Rational from_decimal(const std::string& text);

    [[nodiscard]] Rational pow(int e) const;
    [[nodiscard]] Rational abs() const { return num_ < 0 ? Rational(-num_, den_) : *this; }

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational operator-() const;

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace msym
