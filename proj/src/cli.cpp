#include "msym/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "msym/parse.hpp"

namespace msym::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string key;
    std::string value;
    int line;
    std::size_t column;  // 1-based column of the value
};

class ModelParser {
public:
    explicit ModelParser(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(int line, const std::string& msg, std::size_t column = 0) const
    {
        std::string where = origin_ + ":" + std::to_string(line);
        if (column > 0) where += ":" + std::to_string(column);
        throw InputError(where + ": " + msg);
    }

    Expr expr(const Entry& e, const SymbolTable& table, std::size_t offset = 0, std::string_view text = {}) const
    {
        if (text.empty()) text = e.value;
        try {
            return parse_expr(text, table);
        } catch (const ParseError& pe) {
            fail(e.line, pe.what(), e.column + offset + pe.offset());
        }
    }

    double constant(const Entry& e, std::size_t offset = 0, std::string_view text = {}) const
    {
        const Expr c = expr(e, SymbolTable::base(1), offset, text);
        if (!c.is_constant()) fail(e.line, "'" + e.key + "' must be a constant expression", e.column + offset);
        return eval_at(c, {});
    }

    int integer(const Entry& e) const
    {
        try {
            std::size_t used = 0;
            const long v = std::stol(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("trailing");
            return static_cast<int>(v);
        } catch (const std::exception&) {
            fail(e.line, "'" + e.key + "' must be an integer", e.column);
        }
    }

    // Comma-separated items with their offsets inside the value.
    static std::vector<std::pair<std::size_t, std::string>> split(const std::string& v)
    {
        std::vector<std::pair<std::size_t, std::string>> out;
        int depth = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= v.size(); ++i) {
            if (i < v.size() && v[i] == '(') ++depth;
            if (i < v.size() && v[i] == ')') --depth;
            if (i == v.size() || (v[i] == ',' && depth == 0)) {
                const std::string item = v.substr(start, i - start);
                const auto lead = item.find_first_not_of(" \t");
                out.emplace_back(start + (lead == std::string::npos ? 0 : lead), trim(item));
                start = i + 1;
            }
        }
        return out;
    }

    std::string origin_;
};

const std::vector<std::string> kSections = {"model", "lagrangian", "inverse_legendre", "constraints", "hamiltonian", "numeric"};

}  // namespace

ModelFile parse_model(const std::string& text, const std::string& origin)
{
    ModelParser P(origin);
    std::map<std::string, std::vector<Entry>> sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = raw.substr(0, hash);
        const std::string t = trim(body);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') P.fail(line, "unterminated section header");
            current = trim(t.substr(1, t.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), current) == kSections.end())
                P.fail(line, "unknown section [" + current + "]");
            if (sections.count(current)) P.fail(line, "duplicate section [" + current + "]");
            sections[current];
            continue;
        }
        if (current.empty()) P.fail(line, "entry outside of a section");
        const auto eq = body.find('=');
        if (eq == std::string::npos) P.fail(line, "expected 'key = value'");
        Entry e;
        e.key = trim(body.substr(0, eq));
        const std::string rest = body.substr(eq + 1);
        const auto lead = rest.find_first_not_of(" \t");
        e.value = trim(rest);
        e.line = line;
        e.column = eq + 2 + (lead == std::string::npos ? 0 : lead);
        if (e.key.empty()) P.fail(line, "empty key");
        if (e.value.empty()) P.fail(line, "empty value for '" + e.key + "'", e.column);
        for (const auto& other : sections[current])
            if (other.key == e.key) P.fail(line, "duplicate key '" + e.key + "' in [" + current + "]");
        sections[current].push_back(std::move(e));
    }

    auto find = [&](const std::string& sec, const std::string& key) -> const Entry* {
        auto it = sections.find(sec);
        if (it == sections.end()) return nullptr;
        for (const auto& e : it->second)
            if (e.key == key) return &e;
        return nullptr;
    };
    auto only = [&](const std::string& sec, const std::vector<std::string>& keys) {
        auto it = sections.find(sec);
        if (it == sections.end()) return;
        for (const auto& e : it->second)
            if (std::find(keys.begin(), keys.end(), e.key) == keys.end())
                P.fail(e.line, "unknown key '" + e.key + "' in [" + sec + "]");
    };

    ModelFile mf;
    if (!sections.count("model")) P.fail(line, "missing [model] section");
    only("model", {"name", "m", "N"});
    const Entry* name = find("model", "name");
    const Entry* em = find("model", "m");
    const Entry* en = find("model", "N");
    if (!name || !em || !en) P.fail(line, "[model] needs name, m and N");
    mf.name = name->value;
    mf.m = P.integer(*em);
    mf.n = P.integer(*en);
    if (mf.m < 1 || mf.m > 3) P.fail(em->line, "m must be 1, 2 or 3", em->column);
    if (mf.n < 1) P.fail(en->line, "N must be at least 1", en->column);
    const SymbolTable jet = SymbolTable::jet(mf.m, mf.n);
    const SymbolTable restricted = SymbolTable::restricted(mf.m, mf.n);

    only("lagrangian", {"expr"});
    const Entry* lag = find("lagrangian", "expr");
    if (!lag) P.fail(line, "missing [lagrangian] expr");
    mf.lagrangian_text = lag->value;
    mf.lagrangian = P.expr(*lag, jet);

    if (sections.count("inverse_legendre")) {
        std::map<Symbol, Expr> inv;
        for (const auto& e : sections["inverse_legendre"]) {
            const auto s = jet.lookup(e.key);
            if (!s || s->role != Role::Velocity) P.fail(e.line, "'" + e.key + "' is not a velocity coordinate");
            inv[*s] = P.expr(e, restricted);
        }
        mf.inverse_legendre = std::move(inv);
    }
    if (sections.count("constraints"))
        for (const auto& e : sections["constraints"]) mf.constraints.emplace_back(e.key, P.expr(e, restricted));
    only("hamiltonian", {"H"});
    if (const Entry* h = find("hamiltonian", "H")) mf.hamiltonian = P.expr(*h, restricted);

    if (sections.count("numeric")) {
        only("numeric", {"grid", "dt", "dx", "t_end", "bc", "init_phi", "init_dphi", "seed", "exact", "exact_tol", "study_dt",
                         "residual_tol", "cfl"});
        NumericBlock nb;
        if (const Entry* e = find("numeric", "grid")) {
            const auto items = ModelParser::split(e->value);
            if (items.size() != 2) P.fail(e->line, "grid must be 'lo, hi'", e->column);
            nb.grid.x_lo = P.constant(*e, items[0].first, items[0].second);
            nb.grid.x_hi = P.constant(*e, items[1].first, items[1].second);
            if (!(nb.grid.x_hi > nb.grid.x_lo)) P.fail(e->line, "grid interval is empty", e->column);
        }
        if (const Entry* e = find("numeric", "dt")) nb.grid.dt = P.constant(*e);
        if (const Entry* e = find("numeric", "dx")) nb.grid.dx = P.constant(*e);
        if (const Entry* e = find("numeric", "t_end")) nb.grid.t_end = P.constant(*e);
        if (const Entry* e = find("numeric", "cfl")) nb.grid.cfl = P.constant(*e);
        if (const Entry* e = find("numeric", "bc")) {
            try {
                nb.grid.bc = parse_boundary(e->value);
            } catch (const NumericError& ne) {
                P.fail(e->line, ne.what(), e->column);
            }
        }
        const SymbolTable base = SymbolTable::base(mf.m);
        auto fields = [&](const char* key) {
            std::vector<Expr> out;
            const Entry* e = find("numeric", key);
            if (!e) P.fail(line, std::string("[numeric] needs ") + key);
            for (const auto& [off, item] : ModelParser::split(e->value)) out.push_back(P.expr(*e, base, off, item));
            if (out.size() != static_cast<std::size_t>(mf.n))
                P.fail(e->line, std::string(key) + " needs one expression per field (" + std::to_string(mf.n) + ")", e->column);
            return out;
        };
        nb.init.phi = fields("init_phi");
        nb.init.dphi = fields("init_dphi");
        if (const Entry* e = find("numeric", "seed")) nb.seed = static_cast<std::uint64_t>(P.integer(*e));
        if (const Entry* e = find("numeric", "exact")) {
            nb.exact = P.expr(*e, base);
        }
        if (const Entry* e = find("numeric", "exact_tol")) nb.exact_tol = P.constant(*e);
        if (const Entry* e = find("numeric", "study_dt")) nb.study_dt = P.constant(*e);
        if (const Entry* e = find("numeric", "residual_tol")) nb.residual_tol = P.constant(*e);
        if (!(nb.grid.dt > 0.0) && mf.m == 1) P.fail(line, "[numeric] needs dt > 0");
        if (mf.m == 2 && !(nb.grid.dx > 0.0)) P.fail(line, "[numeric] needs dx > 0");
        if (!(nb.grid.t_end > 0.0)) P.fail(line, "[numeric] needs t_end > 0");
        mf.numeric = std::move(nb);
    }
    return mf;
}

ModelFile load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str(), path);
}

std::string to_string(Status s)
{
    switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Skipped: return "skipped";
    }
    return "?";
}

bool Report::failed() const
{
    return std::any_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == Status::Fail; });
}

std::string Report::json() const
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema"] = kReportSchema;
    j["tool"] = "msym";
    j["version"] = kVersion;
    j["command"] = command;
    j["model"] = model;
    j["seed"] = seed;
    j["samples"] = samples;
    ordered_json list = ordered_json::array();
    int pass = 0, fail = 0, skipped = 0;
    for (const auto& c : checks) {
        ordered_json o;
        o["name"] = c.name;
        o["status"] = to_string(c.status);
        if (c.evidence) o["evidence"] = to_string(*c.evidence);
        if (!c.detail.empty()) o["detail"] = c.detail;
        if (!c.values.empty()) {
            ordered_json v;
            for (const auto& [k, x] : c.values) v[k] = std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
            o["values"] = v;
        }
        if (c.witness) {
            ordered_json w;
            for (const auto& [s, x] : *c.witness) w[s.name()] = x;
            o["witness"] = w;
        }
        list.push_back(o);
        (c.status == Status::Pass ? pass : c.status == Status::Fail ? fail : skipped) += 1;
    }
    j["checks"] = list;
    j["summary"] = {{"pass", pass}, {"fail", fail}, {"skipped", skipped}};
    return j.dump(2) + "\n";
}

std::string Report::text() const
{
    std::ostringstream os;
    os << command << " " << model << "\n";
    for (const auto& c : checks) {
        std::string tag = c.status == Status::Pass ? "PASS" : c.status == Status::Fail ? "FAIL" : "SKIP";
        os << "  " << tag << "  " << c.name;
        if (c.evidence) os << " [" << to_string(*c.evidence) << "]";
        if (!c.detail.empty()) os << ": " << c.detail;
        os << "\n";
        for (const auto& [k, v] : c.values) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            os << "        " << k << " = " << buf << "\n";
        }
        if (c.witness) os << "        witness " << format_point(*c.witness) << "\n";
    }
    return os.str();
}

namespace {

Check from_zero(const std::string& name, const ZeroResult& z, const std::string& failing = {})
{
    Check c{name, z.zero ? Status::Pass : Status::Fail, z.evidence, {}, {}, {}};
    if (!z.zero) {
        c.detail = failing.empty() ? "nonzero residual" : "nonzero component " + failing;
        c.witness = z.witness;
    }
    return c;
}

Check form_zero(const std::string& name, const DiffForm& f, const ZeroOptions& opts)
{
    std::string failing;
    const ZeroResult z = is_zero(f, opts, &failing);
    return from_zero(name, z, failing);
}

Check skipped(const std::string& name, const std::string& why) { return {name, Status::Skipped, {}, why, {}, {}}; }

Check condition(const std::string& name, const ConditionCheck& c)
{
    return {name, c.ok ? Status::Pass : Status::Fail, c.evidence, c.detail, {}, {}};
}

std::vector<Expr> constraint_exprs(const ModelFile& model)
{
    std::vector<Expr> cs;
    for (const auto& [n, c] : model.constraints) cs.push_back(c);
    return cs;
}

struct HamiltonianOutcome {
    std::optional<HamiltonianSystem> h;
    std::string note;
    bool error = false;
};

HamiltonianOutcome hamiltonian_of(const ModelFile& model, const LagrangianSystem& sys, bool regular, const ZeroOptions& opts)
{
    HamiltonianOutcome out;
    if (regular) {
        try {
            out.h = hamiltonian_from_legendre(sys, model.inverse_legendre, opts);
            return out;
        } catch (const HamiltonianError& e) {
            out.note = e.what();
            out.error = model.inverse_legendre.has_value();
            if (out.error || !model.hamiltonian) return out;
        }
    }
    if (model.hamiltonian) {
        out.h = make_hamiltonian(model.m, model.n, *model.hamiltonian, "user");
        out.note.clear();
    } else if (out.note.empty()) {
        out.note = "singular Lagrangian; no [hamiltonian] H given";
    }
    return out;
}

std::string operator_block(const FieldOperator& k)
{
    std::ostringstream os;
    for (ViewKind v : {ViewKind::MultiVector, ViewKind::JetField, ViewKind::Connection}) {
        os << "  " << to_string(v) << ":\n";
        std::istringstream lines(as_view(k, v).render());
        std::string l;
        while (std::getline(lines, l)) os << "    " << l << "\n";
    }
    return os.str();
}

}  // namespace

std::string cmd_classify(const ModelFile& model)
{
    const LagrangianSystem sys = model.system();
    const Regularity r = classify_regularity(sys);
    std::ostringstream os;
    os << model.name << ": " << r.str() << "\n";
    os << "Hessian rank: " << r.rank << " of " << sys.n() * sys.m() << "\n";
    os << "Hessian determinant: " << r.determinant << "\n";
    return os.str();
}

std::string cmd_derive(const ModelFile& model)
{
    const LagrangianSystem sys = model.system();
    std::ostringstream os;
    os << "model " << model.name << " (m = " << model.m << ", N = " << model.n << ")\n";
    os << "L = " << sys.lagrangian() << "\n";
    Regularity reg;
    try {
        reg = classify_regularity(sys);
        os << "classification: " << reg.str() << "\n";
    } catch (const RegularityError& e) {
        os << "classification: " << e.what() << "\n";
        reg.kind = RegularityKind::Singular;
    }
    const PoincareCartan pc = poincare_cartan(sys);
    os << "Theta_L = " << pc.theta.str() << "\n";
    os << "Omega_L = " << pc.omega.str() << "\n";
    for (const auto& [label, fl] : {std::pair{"extended", extended_legendre(sys)}, std::pair{"restricted", restricted_legendre(sys)}}) {
        os << label << " Legendre map:\n";
        for (int i = 0; i < fl.target.dim(); ++i)
            os << "  " << fl.target.coord(i).name() << " = " << fl.images[static_cast<std::size_t>(i)] << "\n";
    }
    const HamiltonianOutcome ho = hamiltonian_of(model, sys, reg.kind == RegularityKind::Regular, {});
    if (ho.h) {
        os << "H = " << ho.h->H << "   (" << ho.h->provenance << ")\n";
    } else {
        os << "H: not available (" << ho.note << ")\n";
    }
    os << "Euler-Lagrange equations:\n";
    for (const auto& e : euler_lagrange_equations(sys)) os << "  " << e << " = 0\n";
    if (ho.h) {
        os << "Hamilton-De Donder-Weyl equations:\n";
        for (const auto& e : hdw_equations(*ho.h)) os << "  " << e << " = 0\n";
    }
    const FieldOperator k = construct_extended_operator(sys);
    os << "extended operator:\n" << operator_block(k);
    os << "restricted operator:\n" << operator_block(restrict_operator(k));
    os << "operator freedom: " << k.freedom() << " = N(m^2 - 1)\n";
    return os.str();
}

Report cmd_verify(const ModelFile& model, const VerifyOptions& vo)
{
    Report rep;
    rep.command = "verify";
    rep.model = model.name;
    rep.seed = vo.seed;
    rep.samples = vo.samples;
    ZeroOptions zo;
    zo.seed = vo.seed;
    zo.samples = vo.samples;
    const LagrangianSystem sys = model.system();
    const int m = sys.m();
    const int n = sys.n();
    auto add = [&](const std::string& name, const std::function<Check()>& fn) {
        try {
            rep.checks.push_back(fn());
        } catch (const std::exception& e) {
            rep.checks.push_back({name, Status::Fail, {}, e.what(), {}, {}});
        }
    };

    bool regular = false;
    add("regularity", [&] {
        const Regularity r = classify_regularity(sys, zo);
        regular = r.kind == RegularityKind::Regular;
        return Check{"regularity", Status::Pass, r.evidence, r.str(), {{"rank", r.rank}}, {}};
    });
    const PoincareCartan pc = poincare_cartan(sys);
    add("poincare_cartan_expansion", [&] { return form_zero("poincare_cartan_expansion", pc.omega - omega_expanded(sys), zo); });
    const CoordMap flx = extended_legendre(sys);
    add("extended_legendre_theta", [&] { return form_zero("extended_legendre_theta", pullback(liouville_theta(m, n), flx) - pc.theta, zo); });
    add("extended_legendre_omega", [&] { return form_zero("extended_legendre_omega", pullback(liouville_omega(m, n), flx) - pc.omega, zo); });

    const HamiltonianOutcome ho = hamiltonian_of(model, sys, regular, zo);
    if (model.inverse_legendre)
        rep.checks.push_back(ho.error ? Check{"inverse_legendre_round_trip", Status::Fail, {}, ho.note, {}, {}}
                                      : Check{"inverse_legendre_round_trip", Status::Pass, Evidence::Probabilistic, {}, {}, {}});
    if (ho.h)
        rep.checks.push_back({"hamiltonian", Status::Pass, {}, "H = " + ho.h->H.str() + " (" + ho.h->provenance + ")", {}, {}});
    else
        rep.checks.push_back(ho.error ? Check{"hamiltonian", Status::Fail, {}, ho.note, {}, {}} : skipped("hamiltonian", ho.note));
    const std::vector<Expr> cs = constraint_exprs(model);
    const ZeroOptions locus = on_constraint_locus(zo, cs);

    if (model.constraints.empty()) {
        rep.checks.push_back(skipped("constraints_vanish", regular ? "regular model" : "no constraints given"));
    } else {
        add("constraints_vanish", [&] {
            const ConstraintReport cr = verify_constraints(sys, model.constraints, zo);
            Check c{"constraints_vanish", cr.all_vanish && cr.rank_constant ? Status::Pass : Status::Fail, {}, {}, {{"rank", cr.rank}}, {}};
            c.evidence = Evidence::Structural;
            for (const auto& chk : cr.checks) {
                if (chk.result.evidence != Evidence::Structural) c.evidence = chk.result.evidence;
                if (!chk.result.zero) {
                    c.detail = chk.name + " o FL = " + chk.pulled.str();
                    c.witness = chk.result.witness;
                }
            }
            if (!cr.rank_constant) c.detail = "constraint differentials change rank";
            return c;
        });
    }
    if (ho.h) {
        add("hamiltonian_theta_pullback", [&] {
            return form_zero("hamiltonian_theta_pullback", pullback(ho.h->theta, restricted_legendre(sys)) - pc.theta, zo);
        });
        if (regular && model.hamiltonian && ho.h->provenance != "user")
            add("hamiltonian_user_agrees", [&] {
                return from_zero("hamiltonian_user_agrees", is_zero(*model.hamiltonian - ho.h->H, zo));
            });
    } else {
        rep.checks.push_back(skipped("hamiltonian_theta_pullback", "no Hamiltonian"));
    }

    std::optional<ELCoefficients> el;
    add("el_multivector", [&] {
        el = solve_el_coefficients(sys, zo);
        if (!el->consistent) {
            std::string obs;
            for (const auto& o : el->obstructions) obs += (obs.empty() ? "" : ", ") + o.str();
            return Check{"el_multivector", Status::Fail, {}, "no solution; obstructions " + obs, {}, {}};
        }
        const MultiVec X = el_multivector(sys, el->G, zo);
        Check c = form_zero("el_multivector", interior_mv(X, pc.omega), zo);
        if (!check_transverse(X, projection(sys.jet(), Chart::base(m)), zo).transverse) {
            c.status = Status::Fail;
            c.detail = "not transverse";
        }
        return c;
    });
    if (el && el->consistent) {
        const int expected = n * (m * m - 1);
        if (regular)
            rep.checks.push_back({"el_freedom", el->freedom() == expected ? Status::Pass : Status::Fail, Evidence::Structural,
                                  "dimension " + std::to_string(el->freedom()) + ", expected N(m^2-1) = " + std::to_string(expected),
                                  {}, {}});
        else
            rep.checks.push_back(skipped("el_freedom", "singular model, dimension " + std::to_string(el->freedom())));
    }
    if (ho.h) {
        add("hdw_multivector", [&] {
            const MultiVec Xh = hdw_multivector(*ho.h, std::nullopt, locus);
            return form_zero("hdw_multivector", interior_mv(Xh, ho.h->omega), locus);
        });
    } else {
        rep.checks.push_back(skipped("hdw_multivector", "no Hamiltonian"));
    }

    std::optional<FieldOperator> k;
    add("operator_construction", [&] {
        k = construct_extended_operator(sys, zo);
        return Check{"operator_construction", Status::Pass, {}, {}, {}, {}};
    });
    if (k) {
        const OperatorReport r = check_operator(*k, sys, std::nullopt, zo);
        rep.checks.push_back(condition("operator_normalization", r.normalization));
        rep.checks.push_back(condition("operator_semi_holonomy", r.semi_holonomy));
        Check fe = condition("operator_field_equation", r.field_equation);
        if (r.printed_sign)
            fe.detail += std::string(fe.detail.empty() ? "" : "; ") + "alternating-sign affine component " +
                         (r.printed_sign->ok ? "also passes" : "fails");
        rep.checks.push_back(fe);
        const int expected = n * (m * m - 1);
        rep.checks.push_back({"operator_freedom", k->freedom() == expected ? Status::Pass : Status::Fail, Evidence::Structural,
                              "dimension " + std::to_string(k->freedom()) + ", expected N(m^2-1) = " + std::to_string(expected),
                              {}, {}});
        const FieldOperator kr = restrict_operator(*k);
        add("restricted_operator", [&] {
            const OperatorReport rr = check_operator(kr, sys, ho.h, locus);
            Check c = condition("restricted_operator", rr.field_equation);
            if (!rr.all()) c.status = Status::Fail;
            return c;
        });
        if (m == 1) {
            add("mechanics_reduction", [&] {
                for (int A = 1; A <= n; ++A)
                    if (!(kr.f_at(A, 1) == sym(sys.v(A, 1))) || !(kr.g_at(A, 1, 1) == sys.dL_dy(A)))
                        return Check{"mechanics_reduction", Status::Fail, Evidence::Structural,
                                     "field " + std::to_string(A) + ": f = " + kr.f_at(A, 1).str() + ", g = " + kr.g_at(A, 1, 1).str(), {}, {}};
                return Check{"mechanics_reduction", Status::Pass, Evidence::Structural, "f = v, g = dL/dy", {}, {}};
            });
        } else {
            rep.checks.push_back(skipped("mechanics_reduction", "m > 1"));
        }
        if (regular && el && el->consistent) {
            add("el_round_trip", [&] {
                const ELFromOperator back = el_from_operator(operator_from_el(el_multivector(sys, el->G, zo), sys, zo), sys, zo);
                const bool same = back.consistent && back.G == el->G;
                return Check{"el_round_trip", same ? Status::Pass : Status::Fail, Evidence::Structural,
                             same ? "" : "coefficients differ after the round trip", {}, {}};
            });
        } else {
            rep.checks.push_back(skipped("el_round_trip", "singular model"));
        }
        if (ho.h && ho.h->inverse) {
            add("hdw_round_trip", [&] {
                const MultiVec Xh = hdw_multivector(*ho.h, std::nullopt, zo);
                const MultiVec back = hdw_from_operator(operator_from_hdw(Xh, sys, *ho.h, zo), sys, *ho.h, zo);
                bool same = true;
                for (std::size_t a = 0; a < Xh.comps.size(); ++a) same = same && back.comps[a].comps == Xh.comps[a].comps;
                return Check{"hdw_round_trip", same ? Status::Pass : Status::Fail, Evidence::Structural,
                             same ? "" : "components differ after the round trip", {}, {}};
            });
        } else {
            rep.checks.push_back(skipped("hdw_round_trip", "no verified inverse Legendre map"));
        }
        if (!model.constraints.empty()) {
            add("constraint_stability", [&] {
                Check c{"constraint_stability", Status::Pass, Evidence::Structural, {}, {}, {}};
                for (const auto& [name, xi] : model.constraints) {
                    const auto t = transport_constraint(kr, xi);
                    for (std::size_t a = 0; a < t.size(); ++a) {
                        const ZeroResult z = is_zero(t[a], zo);
                        if (z.evidence != Evidence::Structural) c.evidence = z.evidence;
                        if (!z.zero) {
                            c.status = Status::Fail;
                            c.detail = "i(K_" + std::to_string(a + 1) + ") d" + name + " = " + t[a].str();
                            c.witness = z.witness;
                            return c;
                        }
                    }
                }
                return c;
            });
        } else {
            rep.checks.push_back(skipped("constraint_stability", "no constraints"));
        }
    }
    return rep;
}

namespace {

double max_exact_error(const NumericSection& s, const Expr& exact)
{
    const Symbol t = Symbol::base(ChartKind::Base, 1);
    const Symbol x = Symbol::base(ChartKind::Base, 2);
    double worst = 0.0;
    for (int it = 0; it < s.levels; ++it)
        for (int ix = 0; ix < s.nx; ++ix) {
            Point p{{t, s.t(it)}};
            if (s.m == 2) p[x] = s.x(ix);
            worst = std::max(worst, std::abs(s.at(1, it, ix) - eval_at(exact, p)));
        }
    return worst;
}

constexpr double kRoundoffFloor = 1e-10;

struct Meters {
    double el = 0.0;
    OperatorResidual op;
    std::optional<double> hdw;
};

Meters measure(const LagrangianSystem& sys, const FieldOperator& k, const std::optional<HamiltonianSystem>& h, const NumericSection& s)
{
    Meters out;
    out.el = el_residual(sys, s).norms.max;
    out.op = operator_residual(k, sys, s);
    if (h) out.hdw = hdw_residual(*h, sys, s).total.max;
    return out;
}

}  // namespace

Report cmd_integrate(const ModelFile& model, const std::optional<std::string>& out_dir)
{
    if (!model.numeric) throw InputError(model.name + ": model has no [numeric] block");
    if (model.m > 2) throw InputError(model.name + ": integration supports m = 1 and m = 2 only");
    const NumericBlock& nb = *model.numeric;
    const LagrangianSystem sys = model.system();
    Report rep;
    rep.command = "integrate";
    rep.model = model.name;
    rep.seed = nb.seed;

    const NumericSection s = integrate(sys, nb.init, nb.grid);
    if (!s.diagnostic.empty()) throw NumericError(s.diagnostic);
    rep.checks.push_back({"integration", Status::Pass, Evidence::Numeric, s.scheme + ", " + (s.m == 2 ? to_string(s.bc) : "ode"),
                          {{"levels", s.levels}, {"points", s.nx}, {"dt", s.dt}, {"dx", s.dx}}, {}});

    const FieldOperator k = construct_extended_operator(sys);
    std::optional<HamiltonianSystem> h;
    try {
        h = hamiltonian_from_legendre(sys, model.inverse_legendre);
    } catch (const HamiltonianError&) {
    }
    const double tol = nb.residual_tol;
    auto meter = [&](const std::string& name, double v, std::map<std::string, double> extra = {}) {
        extra["max"] = v;
        rep.checks.push_back({name, v <= tol ? Status::Pass : Status::Fail, Evidence::Numeric, {}, extra, {}});
    };
    const Meters base = measure(sys, k, h, s);
    meter("el_residual", base.el);
    meter("operator_residual", base.op.g_family.max,
          {{"f_family", base.op.f_family.max}, {"g_raw", base.op.g_raw.max}, {"h_family", base.op.h_family.max},
           {"h_alternating_sign", base.op.h_printed.max}});
    if (base.hdw)
        meter("hdw_residual", *base.hdw);
    else
        rep.checks.push_back(skipped("hdw_residual", "no Hamiltonian from the Legendre map"));

    // Refinement study on two grid levels.
    std::optional<NumericSection> sf;
    if (s.m == 1 && !nb.study_dt) {
        rep.checks.push_back(skipped("refinement_order", "no study_dt given"));
    } else {
        Grid coarse = nb.grid;
        coarse.dt = s.m == 1 ? *nb.study_dt : s.dt;
        Grid fine = coarse;
        fine.dt /= 2;
        fine.dx /= 2;
        sf = integrate(sys, nb.init, fine);
        if (!sf->diagnostic.empty()) throw NumericError(sf->diagnostic);
        const Meters mc = s.m == 1 ? measure(sys, k, h, integrate(sys, nb.init, coarse)) : base;
        const Meters mf = measure(sys, k, h, *sf);
        const double expected = s.m == 1 ? 4.0 : 2.0;
        std::map<std::string, double> orders;
        bool in_band = true;
        auto order = [&](const std::string& name, double c, double f) {
            if (c <= kRoundoffFloor && f <= kRoundoffFloor) return;
            orders[name] = std::log2(c / f);
            in_band = in_band && std::abs(orders[name] - expected) <= 0.3;
        };
        order("el", mc.el, mf.el);
        order("operator", mc.op.g_family.max, mf.op.g_family.max);
        if (mc.hdw && mf.hdw) order("hdw", *mc.hdw, *mf.hdw);
        const std::string detail = orders.empty() ? "residuals at roundoff on both levels" : "two grid levels, steps halved";
        orders["expected"] = expected;
        rep.checks.push_back({"refinement_order", in_band ? Status::Pass : Status::Fail, Evidence::Numeric, detail, orders, {}});
    }

    bool autonomous = true;
    for (int a = 1; a <= s.m; ++a) autonomous = autonomous && sys.dL_dx(a).is_zero();
    if (autonomous && (s.m == 1 || s.bc == Boundary::Periodic)) {
        const double drift = energy_drift(sys, s);
        rep.checks.push_back({"energy_drift", drift <= 1e-3 ? Status::Pass : Status::Fail, Evidence::Numeric, {}, {{"relative", drift}}, {}});
    } else {
        rep.checks.push_back(skipped("energy_drift", "explicit x-dependence or non-periodic boundary"));
    }

    if (nb.exact) {
        const double err = max_exact_error(s, *nb.exact);
        rep.checks.push_back({"exact_solution", err <= nb.exact_tol ? Status::Pass : Status::Fail, Evidence::Numeric, {},
                              {{"max_error", err}, {"tolerance", nb.exact_tol}}, {}});
    }

    const NumericSection p = perturb(s, 0.1, nb.seed);
    const Meters mp = measure(sys, k, h, p);
    std::map<std::string, double> ratios{{"el", mp.el / base.el}, {"operator", mp.op.g_family.max / base.op.g_family.max}};
    if (base.hdw && mp.hdw) ratios["hdw"] = *mp.hdw / *base.hdw;
    bool separated = true;
    for (const auto& [name, r] : ratios) separated = separated && r >= 10.0;
    rep.checks.push_back({"separation", separated ? Status::Pass : Status::Fail, Evidence::Numeric,
                          "perturbation amplitude 0.1; residual ratios perturbed / solution", ratios, {}});

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        const auto base_path = std::filesystem::path(*out_dir) / model.name;
        std::ofstream a(base_path.string() + ".csv");
        if (!a) throw InputError("cannot write CSV files into '" + *out_dir + "'");
        write_csv(a, s);
        if (sf) {
            std::ofstream b(base_path.string() + "_fine.csv");
            write_csv(b, *sf);
        }
    }
    return rep;
}

int run(int argc, char** argv)
{
    CLI::App app{"Symbolic and numeric checks for first-order Lagrangian field theories", "msym"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::string model_path;
    std::string json_path;
    std::string out_dir;
    VerifyOptions vo;

    auto* derive = app.add_subcommand("derive", "print forms, Legendre maps, equations and operators");
    derive->add_option("model", model_path, "model file")->required();
    auto* classify = app.add_subcommand("classify", "classify the Lagrangian as regular or singular");
    classify->add_option("model", model_path, "model file")->required();
    auto* verify = app.add_subcommand("verify", "run the identity suite");
    verify->add_option("model", model_path, "model file")->required();
    verify->add_option("--seed", vo.seed, "sampling seed");
    verify->add_option("--samples", vo.samples, "sample points per zero test")->check(CLI::PositiveNumber);
    verify->add_option("--json", json_path, "write the machine-readable report here");
    auto* integ = app.add_subcommand("integrate", "integrate the field equations and run the residual meters");
    integ->add_option("model", model_path, "model file")->required();
    integ->add_option("--out", out_dir, "directory for CSV sections");
    integ->add_option("--json", json_path, "write the machine-readable report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const ModelFile model = load_model(model_path);
        if (derive->parsed()) {
            std::cout << cmd_derive(model);
            return 0;
        }
        if (classify->parsed()) {
            std::cout << cmd_classify(model);
            return 0;
        }
        Report rep = verify->parsed() ? cmd_verify(model, vo)
                                      : cmd_integrate(model, out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
        std::cout << rep.text();
        if (!json_path.empty()) {
            std::ofstream js(json_path);
            if (!js) throw InputError("cannot write '" + json_path + "'");
            js << rep.json();
        }
        return rep.failed() ? 1 : 0;
    } catch (const InputError& e) {
        std::cerr << "msym: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "msym: numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const RegularityError& e) {
        std::cerr << "msym: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "msym: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace msym::cli
