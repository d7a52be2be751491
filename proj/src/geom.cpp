#include "msym/geom.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace msym {

Chart::Chart(ChartKind kind, int m, int n) : kind_(kind), m_(m), n_(n)
{
    const SymbolTable t(kind, m, n);
    coords_ = t.symbols();
}

int Chart::index_of(const Symbol& s) const
{
    for (std::size_t i = 0; i < coords_.size(); ++i)
        if (coords_[i] == s) return static_cast<int>(i);
    return -1;
}

// ---------------------------------------------------------------------------

CoordMap::CoordMap(Chart src, Chart tgt, std::vector<Expr> imgs)
    : source(std::move(src)), target(std::move(tgt)), images(std::move(imgs))
{
    if (static_cast<int>(images.size()) != target.dim())
        throw std::invalid_argument("coordinate map needs one expression per target coordinate");
    const SymbolTable src_table = source.table();
    for (const auto& e : images)
        for (const auto& s : free_symbols(e))
            if (!src_table.contains(s))
                throw std::invalid_argument("coordinate map image uses " + s.name() + ", not a source coordinate");
}

const Expr& CoordMap::image(const Symbol& target_coord) const
{
    const int i = target.index_of(target_coord);
    if (i < 0) throw std::invalid_argument(target_coord.name() + " is not a target coordinate");
    return images[static_cast<std::size_t>(i)];
}

std::map<Symbol, Expr> CoordMap::bindings() const
{
    std::map<Symbol, Expr> b;
    for (int i = 0; i < target.dim(); ++i) b[target.coord(i)] = images[static_cast<std::size_t>(i)];
    return b;
}

Expr CoordMap::pull(const Expr& e) const { return substitute(e, bindings()); }

CoordMap compose(const CoordMap& outer, const CoordMap& inner)
{
    if (!(outer.source == inner.target)) throw std::invalid_argument("compose: chart mismatch");
    std::vector<Expr> imgs;
    for (const auto& e : outer.images) imgs.push_back(inner.pull(e));
    return {inner.source, outer.target, std::move(imgs)};
}

CoordMap projection(const Chart& from, const Chart& to)
{
    std::vector<Expr> imgs;
    const SymbolTable t = from.table();
    for (const auto& s : to.coords()) {
        // Match by role and indices; the chart tag differs between charts.
        Symbol src = s;
        src.chart = from.kind();
        if (s.role == Role::Momentum && from.kind() == ChartKind::Jet) src.role = Role::Velocity;
        if (!t.contains(src)) throw std::invalid_argument("projection: " + s.name() + " has no counterpart");
        imgs.push_back(sym(src));
    }
    return {from, to, std::move(imgs)};
}

// ---------------------------------------------------------------------------

VectorField::VectorField(Chart c, std::vector<Expr> v) : chart(std::move(c)), comps(std::move(v))
{
    if (static_cast<int>(comps.size()) != chart.dim())
        throw std::invalid_argument("vector field needs one component per coordinate");
}

VectorField VectorField::coordinate(const Chart& c, const Symbol& s)
{
    VectorField v(c);
    v.at(s) = Expr(1);
    return v;
}

Expr& VectorField::at(const Symbol& s)
{
    const int i = chart.index_of(s);
    if (i < 0) throw std::invalid_argument(s.name() + " is not a coordinate of this chart");
    return comps[static_cast<std::size_t>(i)];
}

const Expr& VectorField::at(const Symbol& s) const
{
    const int i = chart.index_of(s);
    if (i < 0) throw std::invalid_argument(s.name() + " is not a coordinate of this chart");
    return comps[static_cast<std::size_t>(i)];
}

std::string VectorField::str() const
{
    std::string out;
    for (int i = 0; i < chart.dim(); ++i) {
        const Expr& c = comps[static_cast<std::size_t>(i)];
        if (c.is_zero()) continue;
        if (!out.empty()) out += " + ";
        out += (c.is_one() ? "" : "(" + c.str() + ")*") + "d/d" + chart.coord(i).name();
    }
    return out.empty() ? "0" : out;
}

// ---------------------------------------------------------------------------

namespace {

// Sorts in place; returns the permutation sign, or 0 on a repeated index.
int sort_with_sign(DiffForm::Index& idx)
{
    int sign = 1;
    for (std::size_t i = 1; i < idx.size(); ++i)
        for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
            if (idx[j - 1] == idx[j]) return 0;
            std::swap(idx[j - 1], idx[j]);
            sign = -sign;
        }
    return sign;
}

void require_same_chart(const DiffForm& a, const DiffForm& b, const char* op)
{
    if (!(a.chart() == b.chart())) throw std::invalid_argument(std::string(op) + ": chart mismatch");
}

}  // namespace

DiffForm::DiffForm(Chart c, int degree) : chart_(std::move(c)), degree_(degree)
{
    if (degree < 0 || degree > chart_.dim()) throw std::invalid_argument("form degree exceeds chart dimension");
}

DiffForm DiffForm::function(const Chart& c, const Expr& f)
{
    DiffForm r(c, 0);
    r.add({}, f);
    return r;
}

DiffForm DiffForm::basis(const Chart& c, const Symbol& s)
{
    const int i = c.index_of(s);
    if (i < 0) throw std::invalid_argument(s.name() + " is not a coordinate of this chart");
    DiffForm r(c, 1);
    r.add({i}, Expr(1));
    return r;
}

Expr DiffForm::coefficient(const std::vector<Symbol>& dirs) const
{
    Index idx;
    for (const auto& s : dirs) {
        const int i = chart_.index_of(s);
        if (i < 0) return Expr();
        idx.push_back(i);
    }
    const int sign = sort_with_sign(idx);
    if (sign == 0) return Expr();
    auto it = terms_.find(idx);
    if (it == terms_.end()) return Expr();
    return sign > 0 ? it->second : -it->second;
}

void DiffForm::add(Index idx, const Expr& coef)
{
    if (static_cast<int>(idx.size()) != degree_) throw std::invalid_argument("form term has wrong degree");
    if (coef.is_zero()) return;
    const int sign = sort_with_sign(idx);
    if (sign == 0) return;
    auto [it, inserted] = terms_.try_emplace(idx, sign > 0 ? coef : -coef);
    if (!inserted) {
        it->second = sign > 0 ? it->second + coef : it->second - coef;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

DiffForm DiffForm::map_coefficients(const std::function<Expr(const Expr&)>& f) const
{
    DiffForm r(chart_, degree_);
    for (const auto& [idx, c] : terms_) r.add(idx, f(c));
    return r;
}

std::string DiffForm::str() const
{
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [idx, c] : terms_) {
        if (!out.empty()) out += " + ";
        out += "(" + c.str() + ")";
        for (std::size_t r = 0; r < idx.size(); ++r)
            out += (r ? "^d" : " d") + chart_.coord(idx[r]).name();
    }
    return out;
}

DiffForm operator+(const DiffForm& a, const DiffForm& b)
{
    require_same_chart(a, b, "form sum");
    if (a.degree() != b.degree()) throw std::invalid_argument("form sum: degree mismatch");
    DiffForm r = a;
    for (const auto& [idx, c] : b.terms()) r.add(idx, c);
    return r;
}

DiffForm operator-(const DiffForm& a) { return Expr(-1) * a; }
DiffForm operator-(const DiffForm& a, const DiffForm& b) { return a + (-b); }

DiffForm operator*(const Expr& f, const DiffForm& a)
{
    return a.map_coefficients([&](const Expr& c) { return f * c; });
}

DiffForm wedge(const DiffForm& a, const DiffForm& b)
{
    require_same_chart(a, b, "wedge");
    DiffForm r(a.chart(), a.degree() + b.degree());
    for (const auto& [ia, ca] : a.terms())
        for (const auto& [ib, cb] : b.terms()) {
            DiffForm::Index idx = ia;
            idx.insert(idx.end(), ib.begin(), ib.end());
            r.add(idx, ca * cb);
        }
    return r;
}

DiffForm exterior_derivative(const DiffForm& f)
{
    DiffForm r(f.chart(), f.degree() + 1);
    for (const auto& [idx, c] : f.terms())
        for (int j = 0; j < f.chart().dim(); ++j) {
            Expr dc = differentiate(c, f.chart().coord(j));
            if (dc.is_zero()) continue;
            DiffForm::Index k{j};
            k.insert(k.end(), idx.begin(), idx.end());
            r.add(k, dc);
        }
    return r;
}

DiffForm pullback(const DiffForm& f, const CoordMap& phi)
{
    if (!(f.chart() == phi.target)) throw std::invalid_argument("pullback: form does not live on the map's target");
    std::vector<DiffForm> dphi;
    for (const auto& img : phi.images) dphi.push_back(exterior_derivative(DiffForm::function(phi.source, img)));
    const auto b = phi.bindings();
    DiffForm r(phi.source, f.degree());
    for (const auto& [idx, c] : f.terms()) {
        DiffForm t = DiffForm::function(phi.source, substitute(c, b));
        for (int i : idx) t = wedge(t, dphi[static_cast<std::size_t>(i)]);
        r = r + t;
    }
    return r;
}

DiffForm interior(const VectorField& x, const DiffForm& f)
{
    if (!(x.chart == f.chart())) throw std::invalid_argument("interior: chart mismatch");
    if (f.degree() == 0) return DiffForm(f.chart(), 0);
    DiffForm r(f.chart(), f.degree() - 1);
    for (const auto& [idx, c] : f.terms())
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const Expr& xk = x.comps[static_cast<std::size_t>(idx[k])];
            if (xk.is_zero()) continue;
            DiffForm::Index rest = idx;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
            r.add(rest, (k % 2 == 0) ? xk * c : -(xk * c));
        }
    return r;
}

DiffForm interior_mv(const MultiVec& x, const DiffForm& f)
{
    const int m = static_cast<int>(x.comps.size());
    if (f.degree() < m) return DiffForm(f.chart(), 0);
    DiffForm r = f;
    for (const auto& c : x.comps) r = interior(c, r);
    return r;
}

DiffForm volume_form(const Chart& c)
{
    DiffForm::Index idx;
    for (int a = 0; a < c.m(); ++a) idx.push_back(c.index_of(Symbol::base(c.kind(), a + 1)));
    DiffForm r(c, c.m());
    r.add(idx, Expr(1));
    return r;
}

DiffForm volume_minus(const Chart& c, int alpha)
{
    return interior(VectorField::coordinate(c, Symbol::base(c.kind(), alpha)), volume_form(c));
}

ZeroResult is_zero(const DiffForm& f, const ZeroOptions& opts, std::string* failing)
{
    ZeroResult out;
    out.zero = true;
    for (const auto& [idx, c] : f.terms()) {
        ZeroResult z = is_zero(c, opts);
        if (z.evidence == Evidence::Probabilistic) out.evidence = Evidence::Probabilistic;
        out.max_relative = std::max(out.max_relative, z.max_relative);
        if (!z.zero) {
            if (failing) {
                std::string name;
                for (int i : idx) name += (name.empty() ? "d" : "^d") + f.chart().coord(i).name();
                *failing = (name.empty() ? "scalar" : name) + " coefficient " + c.str();
            }
            z.evidence = out.evidence;
            return z;
        }
    }
    return out;
}

bool structurally_equal(const DiffForm& a, const DiffForm& b)
{
    return a.chart() == b.chart() && a.degree() == b.degree() && a.terms() == b.terms();
}

VectorField lie_bracket(const VectorField& a, const VectorField& b)
{
    if (!(a.chart == b.chart)) throw std::invalid_argument("lie_bracket: chart mismatch");
    const Chart& c = a.chart;
    VectorField r(c);
    for (int i = 0; i < c.dim(); ++i) {
        Expr v;
        for (int j = 0; j < c.dim(); ++j) {
            const Expr& aj = a.comps[static_cast<std::size_t>(j)];
            const Expr& bj = b.comps[static_cast<std::size_t>(j)];
            if (!aj.is_zero()) v += aj * differentiate(b.comps[static_cast<std::size_t>(i)], c.coord(j));
            if (!bj.is_zero()) v -= bj * differentiate(a.comps[static_cast<std::size_t>(i)], c.coord(j));
        }
        r.comps[static_cast<std::size_t>(i)] = v;
    }
    return r;
}

InvolutivityReport check_involutive(const MultiVec& x, const ZeroOptions& opts, int samples, double rel_tol)
{
    InvolutivityReport rep;
    const Chart& c = x.chart;
    const int m = static_cast<int>(x.comps.size());
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            const VectorField z = lie_bracket(x.comps[static_cast<std::size_t>(a)], x.comps[static_cast<std::size_t>(b)]);
            // Residual after removing the base-direction part along the f=1 frame.
            std::vector<Expr> res = z.comps;
            for (int g = 0; g < m; ++g) {
                const Expr cg = z.at(Symbol::base(c.kind(), g + 1));
                if (cg.is_zero()) continue;
                for (int i = 0; i < c.dim(); ++i)
                    res[static_cast<std::size_t>(i)] -= cg * x.comps[static_cast<std::size_t>(g)].comps[static_cast<std::size_t>(i)];
            }
            bool structural = true;
            for (const auto& e : res) structural = structural && e.is_zero();
            if (structural) continue;
            rep.evidence = Evidence::Probabilistic;

            std::set<Symbol> fs;
            for (const auto& v : x.comps)
                for (const auto& e : v.comps)
                    for (const auto& s : free_symbols(e)) fs.insert(s);
            for (const auto& e : z.comps)
                for (const auto& s : free_symbols(e)) fs.insert(s);
            const std::vector<Symbol> syms(fs.begin(), fs.end());
            std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(a * 131 + b));
            for (int k = 0; k < samples; ++k) {
                Point p = sample_point(rng, syms, opts.box);
                if (opts.project) p = opts.project(p);
                Eigen::MatrixXd mat(m + 1, c.dim());
                for (int i = 0; i < c.dim(); ++i) {
                    for (int g = 0; g < m; ++g)
                        mat(g, i) = eval_unchecked(x.comps[static_cast<std::size_t>(g)].comps[static_cast<std::size_t>(i)], p);
                    mat(m, i) = eval_unchecked(z.comps[static_cast<std::size_t>(i)], p);
                }
                if (!mat.allFinite()) continue;
                auto rank = [&](const Eigen::MatrixXd& a_) {
                    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_);
                    const auto& s = svd.singularValues();
                    int r = 0;
                    for (Eigen::Index i = 0; i < s.size(); ++i)
                        if (s(i) > rel_tol * s(0)) ++r;
                    return r;
                };
                if (rank(mat) > rank(mat.topRows(m))) {
                    rep.involutive = false;
                    rep.failures.push_back({a + 1, b + 1, p});
                    break;
                }
            }
        }
    return rep;
}

TransverseReport check_transverse(const MultiVec& x, const CoordMap& proj, const ZeroOptions& opts)
{
    TransverseReport rep;
    const DiffForm omega = pullback(volume_form(proj.target), proj);
    const DiffForm v = interior_mv(x, omega);
    auto it = v.terms().find({});
    rep.value = it == v.terms().end() ? Expr() : it->second;
    if (rep.value.is_number()) {
        rep.transverse = !rep.value.is_zero();
        return rep;
    }
    rep.evidence = Evidence::Probabilistic;
    const auto fs = free_symbols(rep.value);
    const std::vector<Symbol> syms(fs.begin(), fs.end());
    std::mt19937_64 rng(opts.seed);
    rep.transverse = true;
    for (int k = 0; k < opts.samples; ++k) {
        Point p = sample_point(rng, syms, opts.box);
        const double val = eval_unchecked(rep.value, p);
        if (!std::isfinite(val) || std::abs(val) < 1e-12) {
            rep.transverse = false;
            break;
        }
    }
    return rep;
}

}  // namespace msym
