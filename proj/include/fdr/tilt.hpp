#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fdr/errors.hpp"
#include "fdr/generators.hpp"
#include "fdr/measure.hpp"
#include "fdr/risk.hpp"

namespace fdr {

/// The tilted measure dP/dQ = df_inv(-(beta + L)/lambda) on the support of
/// the reference measure. No renormalization is ever applied: the caller's
/// beta alone is responsible for the weights summing to one, which keeps
/// the normalization residual observable.
struct TiltedSolution {
    SupportedMeasure base;
    std::vector<double> rn_values;
    double lambda = 0.0;
    double beta = 0.0;
    std::vector<double> tilted_weights;

    double weight_sum() const { return pairwise_sum(tilted_weights); }
};

namespace detail {

/// Argument fed to df_inv at support point i.
inline double tilt_argument(const RiskField& field, double lambda, double beta,
                            std::size_t i) {
    return -(beta + field.values[i]) / lambda;
}

inline InfeasibleBetaError infeasible_beta(const FGenerator& gen,
                                           std::size_t i, double t,
                                           double beta, int side) {
    return InfeasibleBetaError(
        "beta=" + std::to_string(beta) + " infeasible for generator " +
            gen.name + ": argument t=" + std::to_string(t) +
            " at support point " + std::to_string(i) +
            " outside the inverse-derivative range",
        side, i, t);
}

/// Evaluates df_inv with domain checking. The argument is decreasing in
/// beta, so a violation at or below the lower endpoint means beta is too
/// large (side +1), above the upper endpoint too small (side -1).
/// An exp-style underflow to exactly zero inside the domain is mapped to
/// the smallest positive double: the mathematical value is positive and
/// its contribution to any integral is negligible.
inline double df_inv_checked(const FGenerator& gen, double t, std::size_t i,
                             double beta) {
    if (!gen.df_inv_domain.contains(t))
        throw infeasible_beta(gen, i, t, beta,
                              t <= gen.df_inv_domain.lo ? +1 : -1);
    double v = gen.df_inv(t);
    if (std::isinf(v))
        throw infeasible_beta(gen, i, t, beta, -1);  // overflow: beta too small
    if (std::isnan(v) || v < 0.0)
        throw infeasible_beta(gen, i, t, beta, t < 0.0 ? +1 : -1);
    if (v == 0.0) return std::numeric_limits<double>::denorm_min();
    return v;
}

} // namespace detail

/// Constructs the primal solution candidate at (lambda, beta). Throws
/// InfeasibleBetaError when any support point leaves the domain of the
/// inverse derivative or would receive a nonpositive density.
inline TiltedSolution tilt_measure(const FGenerator& gen,
                                   const SupportedMeasure& mu,
                                   const RiskField& field, double lambda,
                                   double beta) {
    require_aligned(mu, field);
    if (!(lambda > 0.0))
        throw ConfigError("lambda must be positive");

    TiltedSolution sol;
    sol.base = mu;
    sol.lambda = lambda;
    sol.beta = beta;
    sol.rn_values.resize(mu.size());
    sol.tilted_weights.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double t = detail::tilt_argument(field, lambda, beta, i);
        double rn = detail::df_inv_checked(gen, t, i, beta);
        sol.rn_values[i] = rn;
        sol.tilted_weights[i] = mu.weights[i] * rn;
    }
    return sol;
}

/// D_f(P||Q) evaluated from the Radon-Nikodym values against the base
/// weights (never by dividing tilted weights by base weights).
inline double f_divergence(const FGenerator& gen, const TiltedSolution& sol) {
    if (sol.rn_values.size() != sol.base.size())
        throw AlignmentError("tilted solution misaligned with its base");
    std::vector<double> terms(sol.base.size());
    for (std::size_t i = 0; i < sol.base.size(); ++i)
        terms[i] = sol.base.weights[i] * gen.f(sol.rn_values[i]);
    return pairwise_sum(terms);
}

/// The primal objective R_z(P) + lambda * D_f(P||Q) at the tilted measure.
inline double primal_value(const FGenerator& gen, const TiltedSolution& sol,
                           const RiskField& field) {
    return expected_risk(sol.tilted_weights, field) +
           sol.lambda * f_divergence(gen, sol);
}

/// Primal objective for an arbitrary weight vector on the support of mu
/// (used by perturbation tests and brute-force oracles).
inline double primal_objective_at(const FGenerator& gen,
                                  const SupportedMeasure& mu,
                                  const RiskField& field, double lambda,
                                  std::span<const double> weights) {
    require_aligned(mu, field);
    if (weights.size() != mu.size())
        throw AlignmentError("weight vector misaligned with support");
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double ratio = weights[i] / mu.weights[i];
        terms[i] = weights[i] * field.values[i] +
                   lambda * mu.weights[i] * gen.f(ratio);
    }
    return pairwise_sum(terms);
}

} // namespace fdr
