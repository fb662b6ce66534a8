#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdr/errors.hpp"

namespace fdr {

/// Deterministic pairwise (tree) summation. Bit-stable regardless of how
/// callers might partition work, and more accurate than a running sum.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

enum class Provenance { discrete, quadrature, sample };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::discrete: return "discrete";
        case Provenance::quadrature: return "quadrature";
        case Provenance::sample: return "sample";
    }
    return "unknown";
}

/// A finitely supported probability measure over model vectors: distinct
/// support points with positive weights summing to one. Immutable by
/// convention once built through make_discrete / discretize_density.
struct SupportedMeasure {
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
    Provenance provenance = Provenance::discrete;

    std::size_t size() const { return points.size(); }
};

namespace detail {

inline void validate_measure(const SupportedMeasure& mu) {
    if (mu.points.size() != mu.weights.size())
        throw ConfigError("measure: points/weights length mismatch");
    if (mu.points.empty())
        throw ConfigError("measure: empty support");
    for (double w : mu.weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw ConfigError("measure: weights must be positive and finite");
    double total = pairwise_sum(mu.weights);
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("measure: weights sum to " + std::to_string(total) +
                          ", expected 1");
    for (std::size_t i = 0; i < mu.points.size(); ++i)
        for (std::size_t j = i + 1; j < mu.points.size(); ++j)
            if (mu.points[i] == mu.points[j])
                throw ConfigError("measure: duplicate support point at indices " +
                                  std::to_string(i) + "," + std::to_string(j));
}

} // namespace detail

/// Builds a discrete measure, normalizing the weights and validating the
/// support invariants.
inline SupportedMeasure make_discrete(std::vector<std::vector<double>> points,
                                      std::vector<double> weights) {
    double total = pairwise_sum(weights);
    if (!(total > 0.0) || !std::isfinite(total))
        throw ConfigError("measure: weight total must be positive and finite");
    for (double& w : weights) w /= total;
    SupportedMeasure mu{std::move(points), std::move(weights),
                        Provenance::discrete};
    detail::validate_measure(mu);
    return mu;
}

/// Convenience for scalar supports.
inline SupportedMeasure make_discrete_1d(const std::vector<double>& points,
                                         std::vector<double> weights) {
    std::vector<std::vector<double>> pts;
    pts.reserve(points.size());
    for (double p : points) pts.push_back({p});
    return make_discrete(std::move(pts), std::move(weights));
}

inline SupportedMeasure uniform_on(const std::vector<double>& points) {
    return make_discrete_1d(points,
                            std::vector<double>(points.size(),
                                                1.0 / points.size()));
}

/// Uniform grid for quadrature discretization of a scalar density.
struct GridSpec {
    double low;
    double high;
    std::size_t nodes;
};

/// Trapezoid-weighted discretization of a nonnegative density on a uniform
/// grid; the result is renormalized so the weights sum to one.
inline SupportedMeasure discretize_density(
    const std::function<double(double)>& density, const GridSpec& grid) {
    if (grid.nodes < 2)
        throw ConfigError("discretize_density: grid needs at least 2 nodes");
    if (!(grid.high > grid.low))
        throw ConfigError("discretize_density: high must exceed low");

    double h = (grid.high - grid.low) / static_cast<double>(grid.nodes - 1);
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
    points.reserve(grid.nodes);
    weights.reserve(grid.nodes);
    for (std::size_t i = 0; i < grid.nodes; ++i) {
        double x = grid.low + h * static_cast<double>(i);
        double d = density(x);
        if (!(d >= 0.0) || !std::isfinite(d))
            throw IntegrandDomainError(
                "density is negative or non-finite at x=" + std::to_string(x), i);
        double cell = (i == 0 || i + 1 == grid.nodes) ? 0.5 * h : h;
        double w = d * cell;
        if (w > 0.0) {
            points.push_back({x});
            weights.push_back(w);
        }
    }
    if (points.empty())
        throw ConfigError("discretize_density: density vanishes on the grid");

    double total = pairwise_sum(weights);
    for (double& w : weights) w /= total;
    SupportedMeasure mu{std::move(points), std::move(weights),
                        Provenance::quadrature};
    detail::validate_measure(mu);
    return mu;
}

/// Expectation of precomputed per-point values under the measure.
inline double expectation(const SupportedMeasure& mu,
                          std::span<const double> values) {
    if (values.size() != mu.size())
        throw AlignmentError("expectation: values length " +
                             std::to_string(values.size()) +
                             " vs support size " + std::to_string(mu.size()));
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw IntegrandDomainError(
                "integrand non-finite at support point " + std::to_string(i), i);
        terms[i] = mu.weights[i] * values[i];
    }
    return pairwise_sum(terms);
}

/// Expectation of a function of the model vector.
inline double expectation(
    const SupportedMeasure& mu,
    const std::function<double(const std::vector<double>&)>& g) {
    std::vector<double> values(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) values[i] = g(mu.points[i]);
    return expectation(mu, values);
}

/// Essential supremum over the support: exact for discrete provenance.
inline double support_max(const SupportedMeasure& mu,
                          std::span<const double> values) {
    if (values.size() != mu.size())
        throw AlignmentError("support_max: misaligned values");
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    return m;
}

inline double support_min(const SupportedMeasure& mu,
                          std::span<const double> values) {
    if (values.size() != mu.size())
        throw AlignmentError("support_min: misaligned values");
    double m = values[0];
    for (double v : values) m = std::min(m, v);
    return m;
}

} // namespace fdr
