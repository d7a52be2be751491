#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "msym/expr.hpp"
#include "msym/symbol.hpp"

namespace msym {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    [[nodiscard]] std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Parses the expression grammar against one chart's symbol table.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?          exponent must fold to an integer
///   primary := number | name | func '(' expr ')' | '(' expr ')'
///
/// `pi` is accepted as a constant in every chart.
Expr parse_expr(std::string_view source, const SymbolTable& table);

}  // namespace msym
