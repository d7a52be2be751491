#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msym/numint.hpp"

namespace msym::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "msym-report/1";

/// Bad model file or command-line input (exit code 2).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NumericBlock {
    Grid grid;
    InitialData init;
    std::uint64_t seed = 0;
    std::optional<Expr> exact;       // reference solution over the base chart
    double exact_tol = 1e-8;
    std::optional<double> study_dt;  // step for the refinement study (m = 1)
    double residual_tol = 5e-3;
};

struct ModelFile {
    std::string name;
    int m = 0;
    int n = 0;
    std::string lagrangian_text;
    Expr lagrangian;
    std::optional<std::map<Symbol, Expr>> inverse_legendre;
    std::vector<std::pair<std::string, Expr>> constraints;
    std::optional<Expr> hamiltonian;  // on the restricted chart
    std::optional<NumericBlock> numeric;

    [[nodiscard]] LagrangianSystem system() const { return {m, n, lagrangian}; }
};

/// `[section]` headers and `key = value` lines; `#` starts a comment.
ModelFile parse_model(const std::string& text, const std::string& origin = "model");
ModelFile load_model(const std::string& path);

enum class Status { Pass, Fail, Skipped };
std::string to_string(Status s);

struct Check {
    std::string name;
    Status status = Status::Pass;
    std::optional<Evidence> evidence;
    std::string detail;
    std::map<std::string, double> values;  // residual norms, orders, errors
    std::optional<Point> witness;
};

struct Report {
    std::string command;
    std::string model;
    std::uint64_t seed = 0;
    int samples = 0;
    std::vector<Check> checks;

    [[nodiscard]] bool failed() const;
    [[nodiscard]] std::string json() const;  // deterministic, 2-space indent
    [[nodiscard]] std::string text() const;
};

struct VerifyOptions {
    std::uint64_t seed = kDefaultSeed;
    int samples = 128;
};

std::string cmd_classify(const ModelFile& model);
std::string cmd_derive(const ModelFile& model);
Report cmd_verify(const ModelFile& model, const VerifyOptions& opts = {});
/// Writes <name>.csv and <name>_fine.csv into `out_dir` when given.
Report cmd_integrate(const ModelFile& model, const std::optional<std::string>& out_dir = std::nullopt);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace msym::cli
