#pragma once

#include <vector>

#include "msym/expr.hpp"
#include "msym/zero.hpp"

namespace msym {

using ExprVector = std::vector<Expr>;
using ExprMatrix = std::vector<ExprVector>;

/// Solution set of M x = b over expressions.
struct LinearSolution {
    bool consistent = true;
    int rank = 0;
    ExprVector particular;             // minimum-norm solution of the consistent part
    std::vector<ExprVector> kernel;    // basis of ker M
    ExprVector obstructions;           // right-hand sides of rows that reduce to 0 = r
};

/// Gauss-Jordan elimination with zero-tested pivots, then the minimum-norm
/// particular solution x = R^T (R R^T)^{-1} c on the reduced rows.
LinearSolution solve_linear(const ExprMatrix& m, const ExprVector& b, const ZeroOptions& z = {});

/// Cofactor expansion; fine for the small matrices used here.
Expr determinant(const ExprMatrix& m);

/// Numeric rank at a point, singular values below rel_tol * s_max dropped.
int numeric_rank(const ExprMatrix& m, const Point& p, double rel_tol = 1e-8);

ExprMatrix transpose(const ExprMatrix& m);
ExprMatrix multiply(const ExprMatrix& a, const ExprMatrix& b);
ExprVector multiply(const ExprMatrix& a, const ExprVector& x);

}  // namespace msym
