#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "fdr/errors.hpp"

namespace fdr {

/// Open interval of the extended real line.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double t) const { return t > lo && t < hi; }
};

/// Bundle of a strictly convex divergence generator f with the maps the
/// solvers need: its derivative, the inverse of the derivative, the second
/// derivative, and the Legendre-Fenchel conjugate f* with its derivative.
///
/// All members are pure deterministic maps; the bundle is immutable after
/// construction and safe to share between threads.
struct FGenerator {
    std::string name;

    std::function<double(double)> f;    // x in [0, inf)
    std::function<double(double)> df;   // x in (0, inf)
    std::function<double(double)> df_inv;
    std::function<double(double)> d2f;  // positive on (0, inf)
    std::function<double(double)> conjugate;
    std::function<double(double)> conjugate_prime;

    /// lim_{x->0+} df(x); may be -infinity.
    double df_at_zero = -std::numeric_limits<double>::infinity();

    /// Arguments t where df_inv(t) exists and is strictly positive.
    Interval df_inv_domain;

    /// Arguments t where the conjugate is finite.
    Interval conjugate_domain;

    bool df_at_zero_finite() const { return std::isfinite(df_at_zero); }
};

/// Returns the generator bundle for one of the built-in divergences:
/// "kl", "reverse_kl", "chi_square", "squared_hellinger".
/// Throws ConfigError on an unknown name.
inline FGenerator builtin_generator(std::string_view name) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    FGenerator g;
    g.name = std::string(name);
    if (name == "kl") {
        g.f = [](double x) { return x <= 0.0 ? 0.0 : x * std::log(x); };
        g.df = [](double x) { return std::log(x) + 1.0; };
        g.df_inv = [](double t) { return std::exp(t - 1.0); };
        g.d2f = [](double x) { return 1.0 / x; };
        g.conjugate = [](double t) { return std::exp(t - 1.0); };
        g.conjugate_prime = [](double t) { return std::exp(t - 1.0); };
        g.df_at_zero = -inf;
        g.df_inv_domain = {-inf, inf};
        g.conjugate_domain = {-inf, inf};
    } else if (name == "reverse_kl") {
        g.f = [inf](double x) { return x <= 0.0 ? inf : -std::log(x); };
        g.df = [](double x) { return -1.0 / x; };
        g.df_inv = [](double t) { return -1.0 / t; };
        g.d2f = [](double x) { return 1.0 / (x * x); };
        g.conjugate = [](double t) { return -1.0 - std::log(-t); };
        g.conjugate_prime = [](double t) { return -1.0 / t; };
        g.df_at_zero = -inf;
        g.df_inv_domain = {-inf, 0.0};
        g.conjugate_domain = {-inf, 0.0};
    } else if (name == "chi_square") {
        g.f = [](double x) { return (x - 1.0) * (x - 1.0); };
        g.df = [](double x) { return 2.0 * (x - 1.0); };
        g.df_inv = [](double t) { return 1.0 + 0.5 * t; };
        g.d2f = [](double) { return 2.0; };
        // The supremum sup_x {tx - (x-1)^2} sits at x = 0 once t < -2,
        // so f* is finite on the whole real line with a kink at t = -2.
        g.conjugate = [](double t) {
            return t < -2.0 ? -1.0 : t + 0.25 * t * t;
        };
        g.conjugate_prime = [](double t) {
            return t < -2.0 ? 0.0 : 1.0 + 0.5 * t;
        };
        g.df_at_zero = -2.0;
        g.df_inv_domain = {-2.0, inf};
        g.conjugate_domain = {-inf, inf};
    } else if (name == "squared_hellinger") {
        g.f = [](double x) {
            double s = 1.0 - std::sqrt(x);
            return s * s;
        };
        g.df = [](double x) { return 1.0 - 1.0 / std::sqrt(x); };
        g.df_inv = [](double t) {
            double s = 1.0 - t;
            return 1.0 / (s * s);
        };
        g.d2f = [](double x) { return 0.5 / (x * std::sqrt(x)); };
        g.conjugate = [](double t) { return t / (1.0 - t); };
        g.conjugate_prime = [](double t) {
            double s = 1.0 - t;
            return 1.0 / (s * s);
        };
        g.df_at_zero = -inf;
        g.df_inv_domain = {-inf, 1.0};
        g.conjugate_domain = {-inf, 1.0};
    } else {
        throw ConfigError("unknown generator name: " + std::string(name));
    }
    return g;
}

inline std::vector<std::string> builtin_generator_names() {
    return {"kl", "reverse_kl", "chi_square", "squared_hellinger"};
}

/// Search grid for the conjugate oracle. The grid starts at x = 0 and is
/// widened geometrically until the maximizer of tx - f(x) is interior.
struct ConjugateSearchGrid {
    double x_hi = 8.0;
    int points_per_level = 1024;
    int refine_levels = 12;
    int max_widenings = 80;
};

/// Evaluates the Legendre-Fenchel transform sup_x {tx - f(x)} by grid
/// search with local refinement. Independent oracle for the closed-form
/// conjugates. Throws UnboundedConjugateError when the supremum keeps
/// escaping to larger x (t outside the finite-conjugate domain J).
inline double conjugate_by_search(const FGenerator& gen, double t,
                                  ConjugateSearchGrid grid = {}) {
    double lo = 0.0;
    double hi = grid.x_hi;

    auto objective = [&](double x) { return t * x - gen.f(x); };

    // Widen until the argmax over a coarse scan is not the right endpoint.
    int widenings = 0;
    for (;;) {
        double best = -std::numeric_limits<double>::infinity();
        int best_i = 0;
        for (int i = 0; i <= grid.points_per_level; ++i) {
            double x = lo + (hi - lo) * i / grid.points_per_level;
            double v = objective(x);
            if (std::isfinite(v) && v > best) {
                best = v;
                best_i = i;
            }
        }
        if (best_i < grid.points_per_level) break;
        if (++widenings > grid.max_widenings)
            throw UnboundedConjugateError(
                "conjugate unbounded at t=" + std::to_string(t) +
                " for generator " + gen.name);
        hi *= 2.0;
    }

    // Local refinement around the current argmax.
    double best_x = 0.0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int level = 0; level < grid.refine_levels; ++level) {
        double h = (hi - lo) / grid.points_per_level;
        best_v = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= grid.points_per_level; ++i) {
            double x = lo + h * i;
            double v = objective(x);
            if (std::isfinite(v) && v > best_v) {
                best_v = v;
                best_x = x;
            }
        }
        lo = std::max(0.0, best_x - 2.0 * h);
        hi = best_x + 2.0 * h;
        if (hi - lo < 1e-13 * (1.0 + std::abs(best_x))) break;
    }
    return best_v;
}

} // namespace fdr
