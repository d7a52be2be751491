#include "msym/zero.hpp"

#include <cmath>
#include <cstdio>

namespace msym {

std::string to_string(Evidence e)
{
    switch (e) {
    case Evidence::Structural: return "structural";
    case Evidence::Probabilistic: return "probabilistic";
    case Evidence::Numeric: return "numeric";
    }
    return "?";
}

Point sample_point(std::mt19937_64& rng, const std::vector<Symbol>& symbols, const SampleBox& box)
{
    Point p;
    for (const auto& s : symbols) {
        double lo = box.lo;
        double hi = box.hi;
        if (auto it = box.ranges.find(s); it != box.ranges.end()) std::tie(lo, hi) = it->second;
        double v = 0.0;
        for (int tries = 0; tries < 64; ++tries) {
            v = lo + (hi - lo) * unit_uniform(rng);
            if (std::abs(v) >= box.exclude) break;
        }
        p[s] = v;
    }
    return p;
}

double magnitude(const Expr& e, const Point& p)
{
    switch (e.kind()) {
    case Kind::Sum: {
        double m = 0.0;
        for (const auto& t : e.operands()) m += magnitude(t, p);
        return m;
    }
    case Kind::Product: {
        double m = std::abs(e.number().to_double());
        for (const auto& f : e.operands()) m *= magnitude(f, p);
        return m;
    }
    case Kind::Power:
        if (e.exponent() > 0) return std::pow(magnitude(e.operands()[0], p), e.exponent());
        return std::abs(eval_unchecked(e, p));
    default: return std::abs(eval_unchecked(e, p));
    }
}

ZeroResult is_zero(const Expr& e, const ZeroOptions& opts)
{
    ZeroResult r;
    if (e.is_zero()) {
        r.zero = true;
        return r;
    }
    r.evidence = Evidence::Probabilistic;
    const auto fs = free_symbols(e);
    const std::vector<Symbol> syms(fs.begin(), fs.end());
    if (syms.empty()) {
        // Constant: a single evaluation decides it.
        const double v = eval_unchecked(e, {});
        if (!std::isfinite(v)) throw DomainError("constant expression is not finite: " + e.str());
        const double scale = magnitude(e, {});
        r.zero = std::abs(v) <= opts.rel_tol * std::max(scale, 1e-300);
        r.max_relative = scale > 0 ? std::abs(v) / scale : 0.0;
        if (!r.zero) {
            r.witness = Point{};
            r.witness_value = v;
        }
        return r;
    }
    const CompiledExpr fn(e, syms);
    std::mt19937_64 rng(opts.seed);
    std::vector<double> vals(syms.size());
    r.zero = true;
    for (int k = 0; k < opts.samples; ++k) {
        Point p = sample_point(rng, syms, opts.box);
        if (opts.project) p = opts.project(p);
        for (std::size_t i = 0; i < syms.size(); ++i) vals[i] = p.at(syms[i]);
        const double v = fn(vals);
        if (!std::isfinite(v)) {
            ++r.nonfinite;
            continue;
        }
        const double scale = magnitude(e, p);
        const double rel = scale > 0 ? std::abs(v) / scale : 0.0;
        r.max_relative = std::max(r.max_relative, rel);
        if (std::abs(v) > opts.rel_tol * scale && r.zero) {
            r.zero = false;
            r.witness = p;
            r.witness_value = v;
        }
    }
    if (2 * r.nonfinite > opts.samples)
        throw DomainError("expression is non-finite at " + std::to_string(r.nonfinite) + " of " +
                          std::to_string(opts.samples) + " sample points: " + e.str());
    return r;
}

std::string format_point(const Point& p)
{
    std::string out = "{";
    bool first = true;
    for (const auto& [s, v] : p) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += (first ? "" : ", ") + s.name() + "=" + buf;
        first = false;
    }
    return out + "}";
}

}  // namespace msym
