#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fdr/continuation.hpp"
#include "test_helpers.hpp"

using namespace fdr;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return v;
}

} // namespace

TEST_CASE("auxiliary measure: constant curvature cancels exactly") {
    auto chi = builtin_generator("chi_square");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    auto aux = auxiliary_measure(chi, mu, field, 1.0, -0.5);
    CHECK(aux.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(aux.weights[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("auxiliary measure: for relative entropy it equals the tilt") {
    auto kl = builtin_generator("kl");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    double beta = solve_normalization(kl, mu, field, 1.0).beta;
    auto tilted = tilt_measure(kl, mu, field, 1.0, beta);
    auto aux = auxiliary_measure(kl, mu, field, 1.0, beta);
    for (std::size_t i = 0; i < mu.size(); ++i)
        CHECK(aux.weights[i] ==
              doctest::Approx(tilted.tilted_weights[i]).epsilon(1e-10));
}

TEST_CASE("auxiliary measure: constant risk gives back Q") {
    auto mu = testing::two_atom_measure();
    auto constant = risk_field_from_values({0.6, 0.6});
    for (const auto& name : builtin_generator_names()) {
        CAPTURE(name);
        auto gen = builtin_generator(name);
        double beta = -1.0 * gen.df(1.0) - 0.6;
        auto aux = auxiliary_measure(gen, mu, constant, 1.0, beta);
        CHECK(aux.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("auxiliary measure is a probability measure") {
    std::mt19937_64 rng(53);
    for (const auto& name : builtin_generator_names()) {
        auto gen = builtin_generator(name);
        auto inst = testing::random_instance(rng, 2, 15);
        double lambda = testing::random_feasible_lambda(gen, inst, rng);
        double beta = solve_normalization(gen, inst.mu, inst.field, lambda).beta;
        auto aux = auxiliary_measure(gen, inst.mu, inst.field, lambda, beta);
        for (double w : aux.weights) CHECK(w > 0.0);
        CHECK(std::abs(pairwise_sum(aux.weights) - 1.0) <= 1e-12);
    }
}

TEST_CASE("n_derivative spot values") {
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();

    auto chi = builtin_generator("chi_square");
    CHECK(n_derivative(chi, mu, field, 1.0, -0.5) ==
          doctest::Approx(0.0).epsilon(1e-12));

    auto kl = builtin_generator("kl");
    double beta = testing::kl_beta_closed_form(mu, field, 1.0);
    double deriv = n_derivative(kl, mu, field, 1.0, beta);
    CHECK(deriv == doctest::Approx(-1.110944).epsilon(1e-5));
    double h = 1e-5;
    double fd = (testing::kl_beta_closed_form(mu, field, 1.0 + h) -
                 testing::kl_beta_closed_form(mu, field, 1.0 - h)) /
                (2 * h);
    CHECK(deriv == doctest::Approx(fd).epsilon(1e-5));

    // Constant risk c: N(lambda) = -lambda*df(1) - c, slope -df(1).
    auto constant = risk_field_from_values({0.3, 0.3});
    for (const auto& name : builtin_generator_names()) {
        CAPTURE(name);
        auto gen = builtin_generator(name);
        double b = -2.0 * gen.df(1.0) - 0.3;
        CHECK(n_derivative(gen, mu, constant, 2.0, b) ==
              doctest::Approx(-gen.df(1.0)).epsilon(1e-12));
    }
}

TEST_CASE("implicit-function quotient agrees with the simplified derivative") {
    std::mt19937_64 rng(59);
    for (const auto& name : builtin_generator_names()) {
        CAPTURE(name);
        auto gen = builtin_generator(name);
        for (int rep = 0; rep < 10; ++rep) {
            auto inst = testing::random_instance(rng, 2, 12);
            double lambda = testing::random_feasible_lambda(gen, inst, rng);
            double beta =
                solve_normalization(gen, inst.mu, inst.field, lambda).beta;
            double direct = n_derivative(gen, inst.mu, inst.field, lambda, beta);
            double implicit =
                n_derivative_implicit(gen, inst.mu, inst.field, lambda, beta);
            CHECK(std::abs(direct - implicit) <=
                  1e-8 * (1.0 + std::abs(direct)));
        }
    }
}

TEST_CASE("integrate_path: chi-square path is flat at -E_Q[L]") {
    auto chi = builtin_generator("chi_square");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    double beta0 = solve_normalization(chi, mu, field, 1.0).beta;
    auto path = integrate_path(chi, mu, field, 1.0, beta0,
                               linspace(1.0, 10.0, 50));
    REQUIRE(path.lambdas.size() == 50);
    CHECK_FALSE(path.truncated);
    for (double n : path.n_values) CHECK(n == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(path.max_rel_err <= 1e-10);
}

TEST_CASE("integrate_path: relative entropy tracks the closed form") {
    auto kl = builtin_generator("kl");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    double beta0 = solve_normalization(kl, mu, field, 1.0).beta;
    auto path = integrate_path(kl, mu, field, 1.0, beta0,
                               linspace(1.0, 10.0, 100));
    REQUIRE(path.lambdas.size() == 100);
    CHECK(path.max_rel_err <= 1e-5);
    for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
        double closed =
            testing::kl_beta_closed_form(mu, field, path.lambdas[i]);
        CHECK(std::abs(path.n_values[i] - closed) <=
              1e-5 * (1.0 + std::abs(closed)));
    }
}

TEST_CASE("integrate_path: single-node grid returns the initial condition") {
    auto kl = builtin_generator("kl");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    double beta0 = solve_normalization(kl, mu, field, 1.0).beta;
    auto path = integrate_path(kl, mu, field, 1.0, beta0, {1.0});
    REQUIRE(path.lambdas.size() == 1);
    CHECK(path.n_values[0] == beta0);
}

TEST_CASE("integrate_path validates its inputs") {
    auto kl = builtin_generator("kl");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    double beta0 = solve_normalization(kl, mu, field, 1.0).beta;
    CHECK_THROWS_AS(integrate_path(kl, mu, field, 1.0, beta0, {}),
                    ConfigError);
    CHECK_THROWS_AS(integrate_path(kl, mu, field, 1.0, beta0, {2.0, 3.0}),
                    ConfigError);
    CHECK_THROWS_AS(integrate_path(kl, mu, field, 1.0, beta0, {1.0, 3.0, 2.0}),
                    ConfigError);
    CHECK_THROWS_AS(integrate_path(kl, mu, field, 1.0, 0.0, {1.0, 2.0}),
                    ConfigError);  // beta0 is not a root
}

TEST_CASE("integrate_path enforces the drift ceiling") {
    auto kl = builtin_generator("kl");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    double beta0 = solve_normalization(kl, mu, field, 1.0).beta;
    CHECK_THROWS_AS(integrate_path(kl, mu, field, 1.0, beta0,
                                   linspace(1.0, 10.0, 3), SolveConfig{},
                                   1e-14),
                    NoConvergenceError);
}

TEST_CASE("ODE self-consistency: derivative matches differences of direct N") {
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    SolveConfig cfg;
    for (const auto& name : builtin_generator_names()) {
        CAPTURE(name);
        auto gen = builtin_generator(name);
        for (double lambda : {0.8, 1.0, 2.0, 5.0}) {
            double beta = solve_normalization(gen, mu, field, lambda, cfg).beta;
            double deriv = n_derivative(gen, mu, field, lambda, beta);
            double h = 1e-4 * lambda;
            double fd =
                (solve_normalization(gen, mu, field, lambda + h, cfg).beta -
                 solve_normalization(gen, mu, field, lambda - h, cfg).beta) /
                (2 * h);
            CHECK(std::abs(deriv - fd) <= 1e-4 * (1.0 + std::abs(deriv)));
        }
    }
}
