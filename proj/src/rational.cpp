#include "msym/rational.hpp"

#include <cctype>
#include <numeric>

namespace msym {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational overflow in multiplication");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational overflow in addition");
    return r;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d)
{
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
        n = checked_mul(n, -1);
        d = checked_mul(d, -1);
    }
    const std::int64_t g = std::gcd(n, d);
    num_ = g ? n / g : 0;
    den_ = g ? d / g : 1;
}

std::string Rational::str() const
{
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::from_decimal(const std::string& text)
{
    std::int64_t num = 0;
    std::int64_t den = 1;
    std::size_t i = 0;
    bool any = false;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        num = checked_add(checked_mul(num, 10), text[i] - '0');
        any = true;
    }
    if (i < text.size() && text[i] == '.') {
        for (++i; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            num = checked_add(checked_mul(num, 10), text[i] - '0');
            den = checked_mul(den, 10);
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("malformed number '" + text + "'");
    Rational r(num, den);
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool neg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
        int e = 0;
        bool digits = false;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            e = e * 10 + (text[i] - '0');
            digits = true;
            if (e > 18) throw std::overflow_error("decimal exponent too large in '" + text + "'");
        }
        if (!digits) throw std::invalid_argument("malformed exponent in '" + text + "'");
        r = r * Rational(10).pow(neg ? -e : e);
    }
    if (i != text.size()) throw std::invalid_argument("malformed number '" + text + "'");
    return r;
}

Rational Rational::pow(int e) const
{
    if (e < 0) {
        if (num_ == 0) throw std::domain_error("division by zero in rational power");
        return Rational(den_, num_).pow(-e);
    }
    Rational result(1);
    Rational base = *this;
    while (e > 0) {
        if (e & 1) result *= base;
        e >>= 1;
        if (e) base *= base;
    }
    return result;
}

Rational operator+(const Rational& a, const Rational& b)
{
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const std::int64_t da = a.den_ / g;
    const std::int64_t db = b.den_ / g;
    return Rational(checked_add(checked_mul(a.num_, db), checked_mul(b.num_, da)), checked_mul(a.den_, db));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b)
{
    if (a.num_ == 0 || b.num_ == 0) return Rational(0);
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    return Rational(checked_mul(a.num_ / g1, b.num_ / g2), checked_mul(a.den_ / g2, b.den_ / g1));
}

Rational operator/(const Rational& a, const Rational& b)
{
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return a * Rational(b.den_, b.num_);
}

Rational Rational::operator-() const { return Rational(checked_mul(num_, -1), den_); }

std::strong_ordering operator<=>(const Rational& a, const Rational& b)
{
    __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace msym
