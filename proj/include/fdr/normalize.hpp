#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdr/errors.hpp"
#include "fdr/generators.hpp"
#include "fdr/measure.hpp"
#include "fdr/risk.hpp"
#include "fdr/tilt.hpp"

namespace fdr {

/// Tolerances and budgets for the normalization root-finder.
struct SolveConfig {
    double epsilon = 1e-10;        // tolerance on |integral - 1|
    int max_iters = 200;           // bisection budget
    double bracket_growth = 2.0;   // geometric expansion factor
    int max_bracket_expansions = 120;
};

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

/// Outcome of solve_normalization. On success `beta` is N_{Q,z}(lambda),
/// |residual| <= epsilon and feasible is true. `failure_reason` is only
/// populated when a report is reconstructed from a caught failure (the
/// CLI does this so infeasible rows stay in the output).
struct SolveReport {
    double beta = 0.0;
    double residual = 0.0;
    int iterations = 0;
    Bracket bracket;
    bool feasible = false;
    std::optional<std::string> failure_reason;
};

/// F(a,b) = integral of df_inv(-(b + L)/a) dQ - 1. Strictly decreasing in
/// b on its feasible interval. Throws InfeasibleBetaError (with a movement
/// hint) when some support point leaves the df_inv domain.
inline double residual_F(const FGenerator& gen, const SupportedMeasure& mu,
                         const RiskField& field, double a, double b) {
    require_aligned(mu, field);
    if (!(a > 0.0)) throw ConfigError("regularization factor must be positive");
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double t = detail::tilt_argument(field, a, b, i);
        terms[i] = mu.weights[i] * detail::df_inv_checked(gen, t, i, b);
    }
    return pairwise_sum(terms) - 1.0;
}

/// True iff every support point satisfies the positivity constraint at
/// (lambda, beta). Never throws on domain violations.
inline bool check_feasibility(const FGenerator& gen, const SupportedMeasure& mu,
                              const RiskField& field, double lambda,
                              double beta) {
    require_aligned(mu, field);
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double t = detail::tilt_argument(field, lambda, beta, i);
        try {
            detail::df_inv_checked(gen, t, i, beta);
        } catch (const InfeasibleBetaError&) {
            return false;
        }
    }
    return true;
}

namespace detail {

/// One evaluation of the monotone residual, or the direction beta must
/// move to become feasible.
struct Probe {
    enum class State { ok, too_small, too_large };
    State state = State::ok;
    double value = 0.0;
};

using ProbeFn = std::function<Probe(double)>;
using DerivFn = std::function<std::optional<double>(double)>;

struct RootResult {
    double b = 0.0;
    double value = 0.0;
    int iterations = 0;
    Bracket bracket;
};

/// Finds the root of a function that is strictly decreasing in b on a
/// feasible interval, probing outward from the given seeds. Infeasible
/// trials shrink the step toward the feasible side; the feasible beta set
/// is an interval, so directional probing always converges onto it when
/// it is nonempty. Throws InfeasibleLambdaError when no sign change can
/// be established within the expansion budget and NoConvergenceError when
/// the bisection budget runs out.
inline RootResult bisect_root(const ProbeFn& probe,
                              const std::vector<double>& seeds,
                              const SolveConfig& cfg,
                              const DerivFn& derivative = nullptr) {
    const double inf = std::numeric_limits<double>::infinity();
    int expansions = 0;
    auto spend = [&](const std::string& what) {
        if (++expansions > cfg.max_bracket_expansions)
            throw InfeasibleLambdaError(
                "no normalizing beta found within the expansion budget (" +
                what + "); lambda is outside the feasible interval");
    };

    // Phase 1: find a feasible point. Track the infeasible frontier on
    // both sides so the walk can bisect between them.
    std::optional<double> feasible_b;
    double feasible_val = 0.0;
    double inf_low = -inf;   // largest b known to be too small
    double inf_high = inf;   // smallest b known to be too large
    double step = 1.0;

    std::vector<double> trials = seeds;
    std::size_t next_seed = 1;
    double b = trials.empty() ? 0.0 : trials[0];
    while (!feasible_b) {
        spend("feasible-point search");
        Probe p = probe(b);
        if (p.state == Probe::State::ok) {
            feasible_b = b;
            feasible_val = p.value;
            break;
        }
        if (p.state == Probe::State::too_small)
            inf_low = std::max(inf_low, b);
        else
            inf_high = std::min(inf_high, b);
        if (inf_low >= inf_high)
            throw InfeasibleLambdaError(
                "feasible beta interval is empty for this lambda");
        if (next_seed < trials.size()) {
            b = trials[next_seed++];
            continue;
        }
        if (std::isfinite(inf_low) && std::isfinite(inf_high)) {
            b = 0.5 * (inf_low + inf_high);
        } else if (std::isfinite(inf_low)) {
            b = inf_low + step;
            step *= cfg.bracket_growth;
        } else {
            b = inf_high - step;
            step *= cfg.bracket_growth;
        }
    }

    // Phase 2: establish the sign bracket pos_b < root < neg_b with
    // value(pos_b) > 0 > value(neg_b).
    std::optional<double> pos_b, neg_b;
    double pos_val = 0.0, neg_val = 0.0;
    if (feasible_val > 0.0) {
        pos_b = feasible_b;
        pos_val = feasible_val;
    } else {
        neg_b = feasible_b;
        neg_val = feasible_val;
    }

    auto expand = [&](bool rightward) {
        double anchor = rightward ? *pos_b : *neg_b;
        double s = std::max(1.0, 0.25 * (1.0 + std::abs(anchor)));
        while (true) {
            spend(rightward ? "rightward expansion" : "leftward expansion");
            double trial = rightward ? anchor + s : anchor - s;
            Probe p = probe(trial);
            if (p.state == Probe::State::ok) {
                if (p.value > 0.0) {
                    pos_b = trial;
                    pos_val = p.value;
                    if (!rightward) return;  // overshot: bracket complete
                    anchor = trial;
                    s *= cfg.bracket_growth;
                } else {
                    neg_b = trial;
                    neg_val = p.value;
                    if (rightward) return;
                    anchor = trial;
                    s *= cfg.bracket_growth;
                }
            } else {
                // Hit the feasibility boundary: shrink toward the anchor.
                s *= 0.5;
                if (s < 1e-300)
                    throw InfeasibleLambdaError(
                        "residual keeps one sign up to the feasibility "
                        "boundary; no root exists for this lambda");
            }
        }
    };
    if (!neg_b) expand(true);    // residual decreasing: negative side is right
    else if (!pos_b) expand(false);

    double lo = *pos_b, hi = *neg_b;
    double best_b = std::abs(pos_val) < std::abs(neg_val) ? lo : hi;
    double best_val = std::abs(pos_val) < std::abs(neg_val) ? pos_val : neg_val;

    // Phase 3: bisection. Runs the width down as well as the residual so
    // independent solves of the same root agree to the tolerance.
    int iters = 0;
    while (iters < cfg.max_iters) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // width at ulp level
        ++iters;
        Probe p = probe(mid);
        if (p.state != Probe::State::ok)
            throw InfeasibleLambdaError(
                "interior of a feasible bracket probed infeasible");
        if (std::abs(p.value) < std::abs(best_val)) {
            best_b = mid;
            best_val = p.value;
        }
        if (p.value > 0.0)
            lo = mid;
        else
            hi = mid;
        if (std::abs(p.value) <= cfg.epsilon &&
            hi - lo <= cfg.epsilon * std::max(1.0, std::abs(mid)))
            break;
    }
    if (std::abs(best_val) > cfg.epsilon)
        throw NoConvergenceError(
            "bisection did not reach the residual tolerance in " +
                std::to_string(cfg.max_iters) + " iterations",
            lo, hi);

    // Newton polish: one or two steps, kept only if they help.
    if (derivative) {
        for (int k = 0; k < 2; ++k) {
            auto d = derivative(best_b);
            if (!d || *d == 0.0 || !std::isfinite(*d)) break;
            double trial = best_b - best_val / *d;
            Probe p = probe(trial);
            if (p.state != Probe::State::ok ||
                std::abs(p.value) >= std::abs(best_val))
                break;
            best_b = trial;
            best_val = p.value;
        }
    }

    return RootResult{best_b, best_val, iters, Bracket{lo, hi}};
}

} // namespace detail

/// Solves for the normalization function value N_{Q,z}(lambda): the unique
/// beta with integral df_inv(-(beta + L)/lambda) dQ = 1, to within
/// cfg.epsilon. Bisection on the strictly decreasing residual, with
/// sign-oriented bracket endpoints and geometric expansion; a Newton
/// polish using the second derivative runs after convergence.
inline SolveReport solve_normalization(const FGenerator& gen,
                                       const SupportedMeasure& mu,
                                       const RiskField& field, double lambda,
                                       const SolveConfig& cfg = {}) {
    require_aligned(mu, field);
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!field.separable)
        throw DegenerateInstanceError(
            "empirical risk is constant on the support; the solution is Q "
            "itself and no root-finding problem exists");

    auto probe = [&](double b) -> detail::Probe {
        try {
            return {detail::Probe::State::ok,
                    residual_F(gen, mu, field, lambda, b)};
        } catch (const InfeasibleBetaError& e) {
            return {e.side > 0 ? detail::Probe::State::too_large
                               : detail::Probe::State::too_small,
                    0.0};
        }
    };

    // dF/db = -(1/lambda) * integral 1/f''(df_inv(t)) dQ.
    auto derivative = [&](double b) -> std::optional<double> {
        std::vector<double> terms(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            double t = detail::tilt_argument(field, lambda, b, i);
            if (!gen.df_inv_domain.contains(t)) return std::nullopt;
            double curv = gen.d2f(gen.df_inv(t));
            if (!(curv > 0.0)) return std::nullopt;
            terms[i] = mu.weights[i] / curv;
        }
        return -pairwise_sum(terms) / lambda;
    };

    // Initial endpoints: b = lambda, and for finite df(0) the sublevel
    // start delta* - lambda*df(0); otherwise a finite heuristic. Both are
    // treated as seeds only; the sign of the residual decides which side
    // of the bracket each feasible point lands on.
    double init_other = gen.df_at_zero_finite()
                            ? field.delta_star - lambda * gen.df_at_zero
                            : -field.delta_star - lambda * gen.df(1.0) - 1.0;

    auto root = detail::bisect_root(probe, {lambda, init_other}, cfg,
                                    derivative);

    SolveReport report;
    report.beta = root.b;
    report.residual = root.value;
    report.iterations = root.iterations;
    report.bracket = root.bracket;
    report.feasible = true;
    return report;
}

/// Boundary of the feasible regularization interval A_{Q,z}.
struct LambdaStarEstimate {
    double value = 0.0;
    /// True when the solver already succeeds at the probe range's lower
    /// end, i.e. lambda* <= lo and the boundary was not bracketed.
    bool at_lower_bound = false;
};

/// Bisects the feasibility boundary lambda* = inf A_{Q,z} over
/// [probe_lo, probe_hi], exploiting that the feasible set is an interval.
inline LambdaStarEstimate estimate_lambda_star(const FGenerator& gen,
                                               const SupportedMeasure& mu,
                                               const RiskField& field,
                                               double probe_lo, double probe_hi,
                                               const SolveConfig& cfg = {}) {
    if (!(0.0 < probe_lo && probe_lo < probe_hi))
        throw ConfigError("lambda* probe range must satisfy 0 < lo < hi");
    if (!field.separable)
        throw DegenerateInstanceError(
            "lambda* is undefined for a constant risk field");

    auto feasible = [&](double lambda) {
        try {
            solve_normalization(gen, mu, field, lambda, cfg);
            return true;
        } catch (const InfeasibleLambdaError&) {
            return false;
        } catch (const InfeasibleBetaError&) {
            return false;
        }
    };

    if (!feasible(probe_hi))
        throw InfeasibleLambdaError(
            "solver infeasible at the upper end of the lambda* probe range");
    if (feasible(probe_lo)) return {probe_lo, true};

    double lo = probe_lo, hi = probe_hi;
    for (int k = 0; k < 200 && hi - lo > 1e-3 * hi; ++k) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return {0.5 * (lo + hi), false};
}

} // namespace fdr
