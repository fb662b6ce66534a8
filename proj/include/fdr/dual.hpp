#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fdr/errors.hpp"
#include "fdr/generators.hpp"
#include "fdr/measure.hpp"
#include "fdr/normalize.hpp"
#include "fdr/risk.hpp"
#include "fdr/tilt.hpp"

namespace fdr {

/// Outcome of the dual solve plus the strong-duality certificate.
/// gap = primal - (-dual_value); zero under strong duality.
struct DualReport {
    double beta_hat = 0.0;
    double dual_value = 0.0;
    double primal_value = 0.0;
    double gap = 0.0;
    double grad_norm_at_opt = 0.0;
    int iterations = 0;
};

namespace detail {

inline InfeasibleBetaError conjugate_domain_error(const FGenerator& gen,
                                                  std::size_t i, double t,
                                                  double beta) {
    int side = t <= gen.conjugate_domain.lo ? +1 : -1;
    return InfeasibleBetaError(
        "beta=" + std::to_string(beta) +
            " leaves the conjugate domain of generator " + gen.name +
            " at support point " + std::to_string(i) +
            " (t=" + std::to_string(t) + ")",
        side, i, t);
}

} // namespace detail

/// The dual objective G(beta) = lambda * integral f*(-(beta+L)/lambda) dQ
/// + beta. Strictly convex in beta. Throws when some argument leaves the
/// finite-conjugate domain J.
inline double dual_objective(const FGenerator& gen, const SupportedMeasure& mu,
                             const RiskField& field, double lambda,
                             double beta) {
    require_aligned(mu, field);
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double t = detail::tilt_argument(field, lambda, beta, i);
        if (!gen.conjugate_domain.contains(t))
            throw detail::conjugate_domain_error(gen, i, t, beta);
        double v = gen.conjugate(t);
        if (!std::isfinite(v))
            throw detail::conjugate_domain_error(gen, i, t, beta);
        terms[i] = mu.weights[i] * v;
    }
    return lambda * pairwise_sum(terms) + beta;
}

/// dG/dbeta = 1 - integral f*'(-(beta+L)/lambda) dQ, with f*' the
/// conjugate derivative (equal to df_inv on the common domain); equals
/// -residual_F there. Strictly increasing in beta.
inline double dual_gradient(const FGenerator& gen, const SupportedMeasure& mu,
                            const RiskField& field, double lambda,
                            double beta) {
    require_aligned(mu, field);
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double t = detail::tilt_argument(field, lambda, beta, i);
        if (!gen.conjugate_domain.contains(t))
            throw detail::conjugate_domain_error(gen, i, t, beta);
        terms[i] = mu.weights[i] * gen.conjugate_prime(t);
    }
    return 1.0 - pairwise_sum(terms);
}

/// Minimizes G by bisection on its strictly increasing gradient. This
/// path never calls solve_normalization, so the agreement of beta_hat
/// with the root-finder is a genuine cross-check; the two share only the
/// generator bundle. The report carries the primal value of the tilted
/// measure at (lambda, beta_hat) and the duality gap.
inline DualReport solve_dual(const FGenerator& gen, const SupportedMeasure& mu,
                             const RiskField& field, double lambda,
                             const SolveConfig& cfg = {}) {
    require_aligned(mu, field);
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!field.separable)
        throw DegenerateInstanceError(
            "empirical risk is constant on the support; the dual problem "
            "is degenerate");

    // The generic engine finds roots of decreasing functions; feed it the
    // negated gradient.
    auto probe = [&](double b) -> detail::Probe {
        try {
            return {detail::Probe::State::ok,
                    -dual_gradient(gen, mu, field, lambda, b)};
        } catch (const InfeasibleBetaError& e) {
            return {e.side > 0 ? detail::Probe::State::too_large
                               : detail::Probe::State::too_small,
                    0.0};
        }
    };

    // d(-G')/db = -(1/lambda) * integral f*''(t) dQ with
    // f*''(t) = 1/f''(df_inv(t)) on the df_inv domain, 0 where the
    // conjugate is affine.
    auto derivative = [&](double b) -> std::optional<double> {
        std::vector<double> terms(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            double t = detail::tilt_argument(field, lambda, b, i);
            if (!gen.conjugate_domain.contains(t)) return std::nullopt;
            if (!gen.df_inv_domain.contains(t)) {
                terms[i] = 0.0;
                continue;
            }
            double curv = gen.d2f(gen.df_inv(t));
            if (!(curv > 0.0)) return std::nullopt;
            terms[i] = mu.weights[i] / curv;
        }
        double total = pairwise_sum(terms);
        if (total == 0.0) return std::nullopt;
        return -total / lambda;
    };

    double init_other = gen.df_at_zero_finite()
                            ? field.delta_star - lambda * gen.df_at_zero
                            : -field.delta_star - lambda * gen.df(1.0) - 1.0;
    auto root = detail::bisect_root(probe, {lambda, init_other}, cfg,
                                    derivative);

    DualReport report;
    report.beta_hat = root.b;
    report.iterations = root.iterations;
    report.grad_norm_at_opt = std::abs(root.value);
    report.dual_value = dual_objective(gen, mu, field, lambda, root.b);
    TiltedSolution tilted = tilt_measure(gen, mu, field, lambda, root.b);
    report.primal_value = primal_value(gen, tilted, field);
    report.gap = report.primal_value - (-report.dual_value);
    return report;
}

} // namespace fdr
