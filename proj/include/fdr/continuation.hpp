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

/// The normalization function tracked along a lambda grid: `n_values`
/// from integrating its governing ODE, `n_direct` from root-finding at
/// each node, and their relative deviation.
struct OdePath {
    std::vector<double> lambdas;
    std::vector<double> n_values;
    std::vector<double> n_direct;
    std::vector<double> rel_err;
    double max_rel_err = 0.0;
    /// True when the grid hit the feasibility boundary and the path was
    /// cut short; `boundary_lambda` is the first infeasible node.
    bool truncated = false;
    std::optional<double> boundary_lambda;
};

/// The auxiliary measure P_N with density proportional to
/// 1/f''(dP/dQ) against Q, evaluated at the tilted solution for
/// (lambda, beta).
inline SupportedMeasure auxiliary_measure(const FGenerator& gen,
                                          const SupportedMeasure& mu,
                                          const RiskField& field,
                                          double lambda, double beta) {
    TiltedSolution tilted = tilt_measure(gen, mu, field, lambda, beta);
    std::vector<double> weights(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double curv = gen.d2f(tilted.rn_values[i]);
        if (!(curv > 0.0) || !std::isfinite(curv))
            throw GeneratorContractError(
                "second derivative nonpositive at rn=" +
                std::to_string(tilted.rn_values[i]) + " for generator " +
                gen.name);
        weights[i] = mu.weights[i] / curv;
    }
    double total = pairwise_sum(weights);
    for (double& w : weights) w /= total;
    SupportedMeasure aux{mu.points, std::move(weights), mu.provenance};
    return aux;
}

/// dN/dlambda at (lambda, beta = N(lambda)):
/// (beta + R_z(P_N)) / lambda. The caller supplies beta; no internal
/// re-solving, so ODE drift stays observable.
inline double n_derivative(const FGenerator& gen, const SupportedMeasure& mu,
                           const RiskField& field, double lambda,
                           double beta) {
    SupportedMeasure aux = auxiliary_measure(gen, mu, field, lambda, beta);
    return (beta + expected_risk(aux, field)) / lambda;
}

/// The same derivative via the implicit-function quotient
/// -(dF/db)^{-1} (dF/da). Diagnostic route; must agree with
/// n_derivative to high accuracy.
inline double n_derivative_implicit(const FGenerator& gen,
                                    const SupportedMeasure& mu,
                                    const RiskField& field, double lambda,
                                    double beta) {
    TiltedSolution tilted = tilt_measure(gen, mu, field, lambda, beta);
    std::vector<double> fa_terms(mu.size());
    std::vector<double> fb_terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double curv = gen.d2f(tilted.rn_values[i]);
        if (!(curv > 0.0) || !std::isfinite(curv))
            throw GeneratorContractError(
                "second derivative nonpositive for generator " + gen.name);
        double recip = mu.weights[i] / curv;
        fa_terms[i] = recip * (beta + field.values[i]) / (lambda * lambda);
        fb_terms[i] = -recip / lambda;
    }
    double dF_da = pairwise_sum(fa_terms);
    double dF_db = pairwise_sum(fb_terms);
    return -dF_da / dF_db;
}

/// Classical fixed-step RK4 along the supplied lambda grid, starting from
/// the root (lambda0, beta0). Every node is also solved directly for
/// ground truth. A relative deviation above `drift_ceiling` raises a
/// NoConvergenceError; infeasibility at a node truncates the path.
inline OdePath integrate_path(const FGenerator& gen, const SupportedMeasure& mu,
                              const RiskField& field, double lambda0,
                              double beta0, const std::vector<double>& grid,
                              const SolveConfig& cfg = {},
                              double drift_ceiling =
                                  std::numeric_limits<double>::infinity()) {
    if (grid.empty()) throw ConfigError("integrate_path: empty lambda grid");
    if (std::abs(grid.front() - lambda0) > 1e-12 * std::max(1.0, lambda0))
        throw ConfigError("integrate_path: grid must start at lambda0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ConfigError("integrate_path: grid must be strictly increasing");
    if (std::abs(residual_F(gen, mu, field, lambda0, beta0)) >
        10.0 * cfg.epsilon)
        throw ConfigError(
            "integrate_path: (lambda0, beta0) does not solve the root "
            "condition to tolerance");

    auto slope = [&](double lam, double n) {
        return n_derivative(gen, mu, field, lam, n);
    };

    OdePath path;
    double n = beta0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double lam = grid[i];
        if (i > 0) {
            double h = lam - grid[i - 1];
            double l0 = grid[i - 1];
            try {
                double k1 = slope(l0, n);
                double k2 = slope(l0 + 0.5 * h, n + 0.5 * h * k1);
                double k3 = slope(l0 + 0.5 * h, n + 0.5 * h * k2);
                double k4 = slope(l0 + h, n + h * k3);
                n += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            } catch (const InfeasibleBetaError&) {
                path.truncated = true;
                path.boundary_lambda = lam;
                break;
            }
        }

        double direct;
        try {
            direct = solve_normalization(gen, mu, field, lam, cfg).beta;
        } catch (const InfeasibleLambdaError&) {
            path.truncated = true;
            path.boundary_lambda = lam;
            break;
        }

        double err = std::abs(n - direct) / std::max(1.0, std::abs(direct));
        if (err > drift_ceiling)
            throw NoConvergenceError(
                "ODE drift " + std::to_string(err) +
                    " exceeds the configured ceiling at lambda=" +
                    std::to_string(lam),
                lam, lam);
        path.lambdas.push_back(lam);
        path.n_values.push_back(n);
        path.n_direct.push_back(direct);
        path.rel_err.push_back(err);
        path.max_rel_err = std::max(path.max_rel_err, err);
    }
    return path;
}

} // namespace fdr
