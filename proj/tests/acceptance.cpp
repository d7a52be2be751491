#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "msym/cli.hpp"
#include "msym/parse.hpp"

using namespace msym;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<std::string> kModels = {"oscillator", "free_particle", "affine", "wave", "klein_gordon", "rank_one"};

cli::ModelFile model(const std::string& name) { return cli::load_model(std::string(MSYM_MODELS_DIR) + "/" + name + ".model"); }

bool is_regular(const LagrangianSystem& sys) { return classify_regularity(sys).kind == RegularityKind::Regular; }

HamiltonianSystem hamiltonian(const cli::ModelFile& mf)
{
    const LagrangianSystem sys = mf.system();
    if (is_regular(sys)) return hamiltonian_from_legendre(sys, mf.inverse_legendre);
    return make_hamiltonian(mf.m, mf.n, *mf.hamiltonian, "user");
}

// Sum over fields of v_A_1^2/2 - v_A_a^2/2 (a > 1) - y_A^2/2, plus a coupling when N = 2.
LagrangianSystem lattice_model(int m, int n)
{
    std::string L;
    for (int a = 1; a <= n; ++a) {
        const std::string A = std::to_string(a);
        L += " + v_" + A + "_1^2/2 - y_" + A + "^2/2";
        for (int al = 2; al <= m; ++al) L += " - v_" + A + "_" + std::to_string(al) + "^2/2";
    }
    if (n == 2) L += " + y_1*y_2/4";
    return {m, n, parse_expr(L, SymbolTable::jet(m, n))};
}

NumericSection kg_section(const LagrangianSystem& sys, double dx)
{
    Grid g;
    g.dx = dx;
    g.dt = dx / 2;
    g.t_end = 1.0;
    return integrate_m2(sys, {{parse_expr("sin(2*pi*x_2)", SymbolTable::base(2))}, {Expr()}}, g);
}

NumericSection oscillator(double h)
{
    Grid g;
    g.dt = h;
    g.t_end = 2 * kPi;
    return integrate_m1(model("oscillator").system(), {1.0}, {0.0}, g);
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool ok;
    std::string evidence;
};

Outcome legendre_pullbacks()
{
    int good = 0;
    std::string bad;
    for (const auto& name : kModels) {
        const cli::ModelFile mf = model(name);
        const LagrangianSystem sys = mf.system();
        const PoincareCartan pc = poincare_cartan(sys);
        const HamiltonianSystem h = hamiltonian(mf);
        const bool ext = is_zero(pullback(liouville_theta(mf.m, mf.n), extended_legendre(sys)) - pc.theta).zero;
        const bool res = is_zero(pullback(h.theta, restricted_legendre(sys)) - pc.theta).zero;
        good += ext + res;
        if (!ext || !res) bad += " " + name;
    }
    return {bad.empty(), std::to_string(good) + "/12 pullbacks vanish" + bad};
}

Outcome operator_conditions()
{
    int good = 0;
    std::string bad;
    for (const auto& name : kModels) {
        const LagrangianSystem sys = model(name).system();
        const OperatorReport r = check_operator(construct_extended_operator(sys), sys);
        const int n = r.normalization.ok + r.semi_holonomy.ok + r.field_equation.ok;
        good += n;
        if (n != 3) bad += " " + name;
    }
    return {bad.empty(), std::to_string(good) + "/18 conditions true" + bad};
}

// Independent count: N m^2 unknowns minus the rank of the trace relations.
int trace_kernel_dimension(int m, int n)
{
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n * m * m);
    for (int a = 0; a < n; ++a)
        for (int al = 0; al < m; ++al) T(a, (a * m + al) * m + al) = 1.0;
    return n * m * m - static_cast<int>(T.fullPivLu().rank());
}

Outcome freedom()
{
    bool ok = true;
    std::string ev;
    for (auto [m, n] : {std::pair{1, 1}, {2, 1}, {2, 2}, {3, 1}}) {
        const int got = construct_extended_operator(lattice_model(m, n)).freedom();
        const int expect = n * (m * m - 1);
        ok = ok && got == expect && trace_kernel_dimension(m, n) == expect;
        ev += "(" + std::to_string(m) + "," + std::to_string(n) + "):" + std::to_string(got) + " ";
    }
    return {ok, ev + "expected N(m^2-1)"};
}

Outcome mechanics()
{
    std::vector<LagrangianSystem> systems;
    for (const char* name : {"oscillator", "free_particle", "affine"}) systems.push_back(model(name).system());
    systems.push_back(lattice_model(1, 2));
    int checked = 0;
    for (const auto& sys : systems) {
        const FieldOperator k = restrict_operator(construct_extended_operator(sys));
        for (int a = 1; a <= sys.n(); ++a) {
            if (!(k.f_at(a, 1) == sym(sys.v(a, 1))) || !(k.g_at(a, 1, 1) == sys.dL_dy(a)))
                return {false, "mismatch for field " + std::to_string(a) + " of L = " + sys.lagrangian().str()};
            ++checked;
        }
    }
    return {true, std::to_string(checked) + " fields with f = v and g = dL/dy as identical trees"};
}

Outcome round_trips()
{
    int good = 0, total = 0;
    for (const auto& name : kModels) {
        const cli::ModelFile mf = model(name);
        const LagrangianSystem sys = mf.system();
        if (!is_regular(sys)) continue;
        const ELCoefficients el = solve_el_coefficients(sys);
        const ELFromOperator back = el_from_operator(operator_from_el(el_multivector(sys, el.G), sys), sys);
        good += back.consistent && back.G == el.G;
        const HamiltonianSystem h = hamiltonian(mf);
        const MultiVec xh = hdw_multivector(h);
        const MultiVec again = hdw_from_operator(operator_from_hdw(xh, sys, h), sys, h);
        bool same = true;
        for (std::size_t a = 0; a < xh.comps.size(); ++a) same = same && again.comps[a].comps == xh.comps[a].comps;
        good += same;
        total += 2;
    }
    return {good == total && total == 8, std::to_string(good) + "/" + std::to_string(total) + " round trips structurally equal"};
}

Outcome numerics()
{
    const LagrangianSystem kg = model("klein_gordon").system();
    const HamiltonianSystem h = hamiltonian(model("klein_gordon"));
    const FieldOperator k = construct_extended_operator(kg);
    const NumericSection c = kg_section(kg, 1.0 / 200), f = kg_section(kg, 1.0 / 400);
    const double rc[3] = {el_residual(kg, c).norms.max, operator_residual(k, kg, c).g_family.max, hdw_residual(h, kg, c).total.max};
    const double rf[3] = {el_residual(kg, f).norms.max, operator_residual(k, kg, f).g_family.max, hdw_residual(h, kg, f).total.max};
    bool ok = true;
    std::string ev = "KG max";
    for (int i = 0; i < 3; ++i) {
        const double ratio = rc[i] / rf[i];
        ok = ok && rc[i] <= 5e-3 && ratio >= 3.4 && ratio <= 4.6;
        ev += fmt(" %.2e", rc[i]) + fmt(" (x%.2f)", ratio);
    }
    auto err = [](int steps) {
        const NumericSection s = oscillator(2 * kPi / steps);
        double worst = 0.0;
        for (int i = 0; i < s.levels; ++i) worst = std::max(worst, std::abs(s.at(1, i) - std::cos(s.t(i))));
        return worst;
    };
    const double order = std::log2(err(50) / err(100));
    const NumericSection s = oscillator(1e-3);
    const double end = std::abs(s.at(1, s.levels - 1) - 1.0);
    ok = ok && std::abs(order - 4.0) <= 0.3 && end <= 1e-8;
    return {ok, ev + "; oscillator order " + fmt("%.3f", order) + fmt(", |y(2pi)-1| = %.1e", end)};
}

Outcome perturbation()
{
    const LagrangianSystem kg = model("klein_gordon").system();
    const HamiltonianSystem h = hamiltonian(model("klein_gordon"));
    const FieldOperator k = construct_extended_operator(kg);
    const NumericSection s = kg_section(kg, 1.0 / 200);
    const NumericSection p = perturb(s, 0.1, 7);
    const double ratios[3] = {el_residual(kg, p).norms.max / el_residual(kg, s).norms.max,
                              operator_residual(k, kg, p).g_family.max / operator_residual(k, kg, s).g_family.max,
                              hdw_residual(h, kg, p).total.max / hdw_residual(h, kg, s).total.max};
    bool ok = true;
    std::string ev = "ratios";
    for (double r : ratios) {
        ok = ok && r >= 10.0;
        ev += fmt(" %.3g", r);
    }
    return {ok, ev};
}

Outcome derivatives()
{
    const std::vector<std::string> exprs = {
        "v_1_1^2/2 - y_1^2/2",
        "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2",
        "(v_1_1 + v_1_2)^2/2",
        "sqrt(1 + v_1_1^2 + v_1_2^2)",
        "sin(y_1)*cos(x_1*v_1_2)",
        "exp(-y_1^2)*v_1_1",
        "log(2 + y_1^2)*v_1_2^3",
        "tanh(v_1_1 - y_2)",
        "y_1/(1 + v_2_1^2)",
        "(y_1*y_2 + x_2)^4",
        "v_1_1*v_2_2 - v_1_2*v_2_1",
        "sqrt(4 + sin(x_1)^2)*exp(v_2_1/3)",
        "1/(3 + cos(y_1*y_2))",
        "x_1^2*y_2^-2",
        "cos(sin(v_1_1))",
        "exp(x_2*y_1)/sqrt(2 + v_1_2^2)",
        "log(1 + exp(v_1_1))",
        "(1 - y_1^2/8)^(-3)",
        "tanh(x_1)*v_2_2^2 + pi*y_1",
        "sin(v_1_1)^2 + cos(v_1_1)^2 + y_2^5",
    };
    const SymbolTable table = SymbolTable::jet(2, 2);
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    int count = 0;
    double worst = 0.0;
    for (const auto& text : exprs) {
        const Expr e = parse_expr(text, table);
        for (int trial = 0; trial < 10; ++trial) {
            Point p;
            for (const auto& s : table.symbols()) p[s] = (rng() & 1 ? 1.0 : -1.0) * u(rng);
            for (const auto& s : free_symbols(e)) {
                const double d = eval_at(differentiate(e, s), p);
                const double step = 1e-5 * std::max(1.0, std::abs(p[s]));
                Point hi = p, lo = p;
                hi[s] += step;
                lo[s] -= step;
                const double fd = (eval_at(e, hi) - eval_at(e, lo)) / (2 * step);
                worst = std::max(worst, std::abs(d - fd) / std::max(1.0, std::abs(d)));
                ++count;
            }
        }
    }
    return {worst <= 1e-5, std::to_string(count) + " partials over 20 expressions x 10 points, worst rel " + fmt("%.2e", worst)};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducible()
{
    const auto dir = std::filesystem::temp_directory_path() / "msym_acceptance";
    std::filesystem::create_directories(dir);
    for (const auto& name : kModels) {
        std::string runs[2];
        for (int r = 0; r < 2; ++r) {
            const auto out = dir / (name + std::to_string(r) + ".json");
            std::filesystem::remove(out);
            const std::string cmd = std::string("\"") + MSYM_BIN + "\" verify \"" + MSYM_MODELS_DIR + "/" + name +
                                    ".model\" --seed 424242 --json \"" + out.string() + "\" > /dev/null";
            if (std::system(cmd.c_str()) != 0) return {false, name + ": verify did not exit cleanly"};
            runs[r] = slurp(out);
        }
        if (runs[0].empty() || runs[0] != runs[1]) return {false, name + ": reports differ"};
    }
    return {true, "6 models, two processes each, identical bytes"};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"Legendre pullbacks of the Liouville forms", legendre_pullbacks},
        {"extended operator satisfies its three conditions", operator_conditions},
        {"operator freedom", freedom},
        {"mechanics reduction at m = 1", mechanics},
        {"EL and HDW round trips", round_trips},
        {"Klein-Gordon meters and oscillator accuracy", numerics},
        {"perturbed sections are flagged", perturbation},
        {"differentiate against central differences", derivatives},
        {"verify reports are reproducible", reproducible},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.ok;
        std::cout << (o.ok ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.evidence << "\n";
    }
    return failures == 0 ? 0 : 1;
}
