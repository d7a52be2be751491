#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "msym/expr.hpp"

namespace msym {

enum class Evidence : std::uint8_t { Structural, Probabilistic, Numeric };

std::string to_string(Evidence e);

/// Sampling box for random evaluation points.
struct SampleBox {
    double lo = -2.0;
    double hi = 2.0;
    double exclude = 1e-3;  // |value| below this is redrawn
    std::map<Symbol, std::pair<double, double>> ranges;  // per-symbol override
};

inline constexpr std::uint64_t kDefaultSeed = 0x6d73796d5eedULL;

struct ZeroOptions {
    std::uint64_t seed = kDefaultSeed;
    int samples = 128;
    double rel_tol = 1e-9;
    SampleBox box;
    /// Optional map applied to every drawn point, e.g. a projection onto a
    /// constraint locus. Must be deterministic.
    std::function<Point(const Point&)> project;
};

struct ZeroResult {
    bool zero = false;
    Evidence evidence = Evidence::Structural;
    std::optional<Point> witness;  // set when zero == false and sampling found it
    double witness_value = 0.0;
    double max_relative = 0.0;     // largest |value| / scale over finite samples
    int nonfinite = 0;

    explicit operator bool() const { return zero; }
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform double in [0,1) from 53 random bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Draws one value per symbol, in the order given.
Point sample_point(std::mt19937_64& rng, const std::vector<Symbol>& symbols, const SampleBox& box);

/// Sum of absolute contributions: the scale against which a cancellation is
/// judged. Sums add magnitudes of their terms; everything else is evaluated.
double magnitude(const Expr& e, const Point& p);

/// Structural test first, then K seeded samples with relative tolerance.
/// Throws DomainError when more than half of the samples are non-finite.
ZeroResult is_zero(const Expr& e, const ZeroOptions& opts = {});

std::string format_point(const Point& p);

}  // namespace msym
