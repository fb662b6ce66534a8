#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdr/errors.hpp"
#include "fdr/measure.hpp"

namespace fdr {

/// Labeled patterns z = ((x_1,y_1),...,(x_n,y_n)).
struct Dataset {
    std::vector<std::pair<std::vector<double>, double>> pairs;

    std::size_t size() const { return pairs.size(); }
};

using ModelRule =
    std::function<double(const std::vector<double>& theta,
                         const std::vector<double>& x)>;
using Loss = std::function<double(double y_hat, double y)>;

/// The empirical risk evaluated on a measure's support. Immutable once
/// built; every downstream solver consumes this vector and never touches
/// the loss again.
struct RiskField {
    std::vector<double> values;
    double delta_star = 0.0;  // min over the support
    bool separable = false;   // false iff values are all equal
};

inline Loss squared_loss() {
    return [](double y_hat, double y) {
        double d = y_hat - y;
        return d * d;
    };
}

inline Loss absolute_loss() {
    return [](double y_hat, double y) { return std::abs(y_hat - y); };
}

inline Loss zero_one_loss(double margin = 0.5) {
    return [margin](double y_hat, double y) {
        return std::abs(y_hat - y) > margin ? 1.0 : 0.0;
    };
}

/// Affine model: theta has one more entry than the pattern; the last
/// component is the intercept.
inline ModelRule affine_model() {
    return [](const std::vector<double>& theta, const std::vector<double>& x) {
        if (theta.size() != x.size() + 1)
            throw ConfigError("affine model: theta dimension " +
                              std::to_string(theta.size()) +
                              " does not match pattern dimension " +
                              std::to_string(x.size()) + " + 1");
        double acc = theta.back();
        for (std::size_t i = 0; i < x.size(); ++i) acc += theta[i] * x[i];
        return acc;
    };
}

/// Wraps a precomputed risk vector (the synthetic-experiment bypass).
inline RiskField risk_field_from_values(std::vector<double> values) {
    if (values.empty())
        throw ConfigError("risk field: empty value vector");
    RiskField field;
    double lo = values[0], hi = values[0];
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = values[i];
        if (!std::isfinite(v))
            throw IntegrandDomainError(
                "risk value non-finite at support point " + std::to_string(i), i);
        if (v < 0.0)
            throw ConfigError("risk values must be nonnegative");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    field.values = std::move(values);
    field.delta_star = lo;
    field.separable = hi > lo;
    return field;
}

/// Evaluates L_z on the support of mu: values[i] is the average loss of
/// model theta_i over the dataset.
inline RiskField build_risk_field(const Dataset& data, const ModelRule& rule,
                                  const Loss& loss,
                                  const SupportedMeasure& mu) {
    if (data.pairs.empty())
        throw ConfigError("dataset must contain at least one pair");
    std::vector<double> values(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        std::vector<double> losses(data.size());
        for (std::size_t j = 0; j < data.size(); ++j) {
            double y_hat = rule(mu.points[i], data.pairs[j].first);
            double l = loss(y_hat, data.pairs[j].second);
            if (!std::isfinite(l))
                throw IntegrandDomainError(
                    "loss non-finite at support point " + std::to_string(i), i);
            losses[j] = l;
        }
        values[i] = pairwise_sum(losses) / static_cast<double>(data.size());
    }
    return risk_field_from_values(std::move(values));
}

inline void require_aligned(const SupportedMeasure& mu,
                            const RiskField& field) {
    if (field.values.size() != mu.size())
        throw AlignmentError("risk field length " +
                             std::to_string(field.values.size()) +
                             " vs support size " + std::to_string(mu.size()));
}

/// R_z(P) for P given by the measure's own weights.
inline double expected_risk(const SupportedMeasure& mu,
                            const RiskField& field) {
    require_aligned(mu, field);
    return expectation(mu, field.values);
}

/// R_z(P) for P given by an explicit weight vector on the same support.
inline double expected_risk(std::span<const double> weights,
                            const RiskField& field) {
    if (weights.size() != field.values.size())
        throw AlignmentError("weight vector length " +
                             std::to_string(weights.size()) +
                             " vs risk field length " +
                             std::to_string(field.values.size()));
    std::vector<double> terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        terms[i] = weights[i] * field.values[i];
    return pairwise_sum(terms);
}

/// Q-mass of the Rashomon set {theta : L_z(theta) <= delta}.
inline double rashomon_mass(const SupportedMeasure& mu, const RiskField& field,
                            double delta) {
    require_aligned(mu, field);
    std::vector<double> terms;
    terms.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (field.values[i] <= delta) terms.push_back(mu.weights[i]);
    if (terms.empty()) return 0.0;
    return pairwise_sum(terms);
}

} // namespace fdr
