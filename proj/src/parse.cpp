#include "msym/parse.hpp"

#include <cctype>

namespace msym {

namespace {

class Parser {
public:
    Parser(std::string_view src, const SymbolTable& table) : src_(src), table_(table) {}

    Expr run()
    {
        skip();
        if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
        Expr e = expr();
        skip();
        if (pos_ != src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr expr()
    {
        Expr e = term();
        for (;;) {
            if (accept('+'))
                e = e + term();
            else if (accept('-'))
                e = e - term();
            else
                return e;
        }
    }

    Expr term()
    {
        Expr e = unary();
        for (;;) {
            if (accept('*')) {
                e = e * unary();
            } else if (accept('/')) {
                skip();
                const std::size_t at = pos_;
                Expr d = unary();
                if (d.is_zero()) throw ParseError("division by zero", at);
                e = e / d;
            } else {
                return e;
            }
        }
    }

    Expr unary()
    {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (!accept('^')) return base;
        skip();
        const std::size_t at = pos_;
        Expr ex = unary();
        if (!ex.is_number() || !ex.number().is_integer())
            throw ParseError("exponent must be an integer constant (use sqrt for roots)", at);
        const std::int64_t n = ex.number().num();
        if (n > 64 || n < -64) throw ParseError("exponent out of range", at);
        if (base.is_zero() && n < 0) throw ParseError("division by zero", at);
        return pow(base, static_cast<int>(n));
    }

    Expr primary()
    {
        skip();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    Expr number()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
                pos_ = q;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        try {
            return Expr(Rational::from_decimal(std::string(src_.substr(start, pos_ - start))));
        } catch (const std::exception& e) {
            throw ParseError(e.what(), start);
        }
    }

    Expr name()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
        const std::string id(src_.substr(start, pos_ - start));
        static const std::pair<const char*, Func> funcs[] = {{"sin", Func::Sin},   {"cos", Func::Cos},
                                                             {"exp", Func::Exp},   {"log", Func::Log},
                                                             {"sqrt", Func::Sqrt}, {"tanh", Func::Tanh}};
        for (const auto& [fname, f] : funcs) {
            if (id != fname) continue;
            skip();
            if (pos_ >= src_.size() || src_[pos_] != '(')
                throw ParseError("function '" + id + "' expects one parenthesized argument", pos_);
            ++pos_;
            skip();
            if (pos_ < src_.size() && src_[pos_] == ')')
                throw ParseError("function '" + id + "' expects 1 argument, got 0", pos_);
            Expr arg = expr();
            skip();
            if (pos_ < src_.size() && src_[pos_] == ',')
                throw ParseError("function '" + id + "' expects 1 argument, got more", pos_);
            expect(')');
            return apply(f, arg);
        }
        if (id == "pi") return Expr::pi();
        if (auto s = table_.lookup(id)) return sym(*s);
        throw ParseError("unknown symbol '" + id + "' in " + to_string(table_.chart()) + " chart", start);
    }

    std::string_view src_;
    const SymbolTable& table_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view source, const SymbolTable& table) { return Parser(source, table).run(); }

}  // namespace msym
