#include "msym/linalg.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace msym {

namespace {

bool zero_entry(const Expr& e, const ZeroOptions& z)
{
    if (e.is_zero()) return true;
    if (e.is_number()) return false;
    return is_zero(e, z).zero;
}

struct Reduced {
    ExprMatrix rows;  // augmented, reduced row echelon
    std::vector<int> pivots;
};

Reduced gauss_jordan(ExprMatrix a, const ZeroOptions& z)
{
    const std::size_t nr = a.size();
    const std::size_t nc = nr ? a[0].size() - 1 : 0;
    std::vector<int> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < nc && row < nr; ++col) {
        // Prefer a numeric pivot, then any non-zero one.
        std::size_t best = nr;
        for (std::size_t r = row; r < nr; ++r) {
            if (a[r][col].is_number() && !a[r][col].is_zero()) {
                best = r;
                break;
            }
        }
        if (best == nr) {
            for (std::size_t r = row; r < nr; ++r) {
                if (!zero_entry(a[r][col], z)) {
                    best = r;
                    break;
                }
            }
        }
        if (best == nr) {
            for (std::size_t r = row; r < nr; ++r) a[r][col] = Expr();
            continue;
        }
        std::swap(a[row], a[best]);
        const Expr inv = Expr(1) / a[row][col];
        for (auto& x : a[row]) x = x * inv;
        a[row][col] = Expr(1);
        for (std::size_t r = 0; r < nr; ++r) {
            if (r == row || a[r][col].is_zero()) continue;
            const Expr f = a[r][col];
            for (std::size_t c = 0; c <= nc; ++c) a[r][c] = a[r][c] - f * a[row][c];
            a[r][col] = Expr();
        }
        pivots.push_back(static_cast<int>(col));
        ++row;
    }
    return {std::move(a), std::move(pivots)};
}

ExprMatrix invert(const ExprMatrix& m, const ZeroOptions& z)
{
    const std::size_t n = m.size();
    ExprMatrix aug(n, ExprVector(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug[i][j] = m[i][j];
        aug[i][n + i] = Expr(1);
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t best = n;
        for (std::size_t r = col; r < n; ++r)
            if (!zero_entry(aug[r][col], z)) {
                best = r;
                break;
            }
        if (best == n) throw std::domain_error("matrix is singular");
        std::swap(aug[col], aug[best]);
        const Expr inv = Expr(1) / aug[col][col];
        for (auto& x : aug[col]) x = x * inv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || aug[r][col].is_zero()) continue;
            const Expr f = aug[r][col];
            for (std::size_t c = 0; c < 2 * n; ++c) aug[r][c] = aug[r][c] - f * aug[col][c];
        }
    }
    ExprMatrix out(n, ExprVector(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = aug[i][n + j];
    return out;
}

}  // namespace

ExprMatrix transpose(const ExprMatrix& m)
{
    if (m.empty()) return {};
    ExprMatrix t(m[0].size(), ExprVector(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) t[j][i] = m[i][j];
    return t;
}

ExprMatrix multiply(const ExprMatrix& a, const ExprMatrix& b)
{
    if (a.empty() || b.empty()) return {};
    ExprMatrix c(a.size(), ExprVector(b[0].size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b[0].size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k)
                if (!a[i][k].is_zero() && !b[k][j].is_zero()) c[i][j] += a[i][k] * b[k][j];
    return c;
}

ExprVector multiply(const ExprMatrix& a, const ExprVector& x)
{
    ExprVector y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < x.size(); ++k)
            if (!a[i][k].is_zero() && !x[k].is_zero()) y[i] += a[i][k] * x[k];
    return y;
}

LinearSolution solve_linear(const ExprMatrix& m, const ExprVector& b, const ZeroOptions& z)
{
    if (m.size() != b.size()) throw std::invalid_argument("solve_linear: row count mismatch");
    const std::size_t nc = m.empty() ? 0 : m[0].size();
    ExprMatrix aug = m;
    for (std::size_t i = 0; i < aug.size(); ++i) aug[i].push_back(b[i]);
    Reduced red = gauss_jordan(std::move(aug), z);

    LinearSolution out;
    out.rank = static_cast<int>(red.pivots.size());
    for (std::size_t r = red.pivots.size(); r < red.rows.size(); ++r) {
        const Expr& rhs = red.rows[r][nc];
        if (!zero_entry(rhs, z)) {
            out.consistent = false;
            out.obstructions.push_back(rhs);
        }
    }

    std::vector<bool> is_pivot(nc, false);
    for (int c : red.pivots) is_pivot[static_cast<std::size_t>(c)] = true;
    for (std::size_t f = 0; f < nc; ++f) {
        if (is_pivot[f]) continue;
        ExprVector v(nc);
        v[f] = Expr(1);
        for (std::size_t r = 0; r < red.pivots.size(); ++r)
            v[static_cast<std::size_t>(red.pivots[r])] = -red.rows[r][f];
        out.kernel.push_back(std::move(v));
    }

    out.particular.assign(nc, Expr());
    if (red.pivots.empty()) return out;
    ExprMatrix rr(red.pivots.size(), ExprVector(nc));
    ExprVector c(red.pivots.size());
    for (std::size_t r = 0; r < red.pivots.size(); ++r) {
        for (std::size_t j = 0; j < nc; ++j) rr[r][j] = red.rows[r][j];
        c[r] = red.rows[r][nc];
    }
    if (out.kernel.empty()) {
        for (std::size_t r = 0; r < red.pivots.size(); ++r) out.particular[static_cast<std::size_t>(red.pivots[r])] = c[r];
        return out;
    }
    const ExprMatrix rt = transpose(rr);
    const ExprMatrix gram_inv = invert(multiply(rr, rt), z);
    out.particular = multiply(rt, multiply(gram_inv, c));
    return out;
}

Expr determinant(const ExprMatrix& m)
{
    const std::size_t n = m.size();
    if (n == 0) return Expr(1);
    if (n == 1) return m[0][0];
    if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Expr det;
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero()) continue;
        ExprMatrix minor(n - 1, ExprVector(n - 1));
        for (std::size_t r = 1; r < n; ++r)
            for (std::size_t c = 0, cc = 0; c < n; ++c)
                if (c != j) minor[r - 1][cc++] = m[r][c];
        const Expr term = m[0][j] * determinant(minor);
        det = (j % 2 == 0) ? det + term : det - term;
    }
    return det;
}

int numeric_rank(const ExprMatrix& m, const Point& p, double rel_tol)
{
    if (m.empty() || m[0].empty()) return 0;
    Eigen::MatrixXd a(m.size(), m[0].size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval_at(m[i][j], p);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

}  // namespace msym
