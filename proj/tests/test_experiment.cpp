#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdr/experiment.hpp"
#include "test_helpers.hpp"

using namespace fdr;
namespace fs = std::filesystem;

namespace {

nlohmann::json two_atom_config(const std::string& mode) {
    return nlohmann::json{
        {"generator", "kl"},
        {"measure",
         {{"type", "discrete"}, {"points", {0.0, 1.0}}, {"weights", {0.5, 0.5}}}},
        {"risk", {{"risk_values", {0.0, 1.0}}}},
        {"lambda_grid", {{"type", "log"}, {"low", 1.0}, {"high", 1.0}, {"count", 1}}},
        {"mode", mode}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("fdr_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("measure spec parsing") {
    auto mu = measure_from_json(nlohmann::json{
        {"type", "discrete"}, {"points", {{0.0, 1.0}, {2.0, 3.0}}},
        {"weights", {0.25, 0.75}}});
    CHECK(mu.size() == 2);
    CHECK(mu.points[1] == std::vector<double>{2.0, 3.0});

    auto grid = measure_from_json(nlohmann::json{{"type", "grid"},
                                                 {"density", "gaussian"},
                                                 {"low", -6.0},
                                                 {"high", 6.0},
                                                 {"nodes", 241}});
    CHECK(grid.size() == 241);
    CHECK(grid.provenance == Provenance::quadrature);

    CHECK_THROWS_AS(measure_from_json(nlohmann::json{{"type", "mcmc"}}),
                    ConfigError);
}

TEST_CASE("risk spec parsing: raw values and dataset form") {
    auto mu = testing::two_atom_measure();
    auto raw = risk_from_json(nlohmann::json{{"risk_values", {0.0, 1.0}}}, mu);
    CHECK(raw.separable);
    CHECK(raw.delta_star == 0.0);

    CHECK_THROWS_AS(
        risk_from_json(nlohmann::json{{"risk_values", {0.0, 1.0, 2.0}}}, mu),
        AlignmentError);

    // Affine models over a 1-d pattern need 2-d support points.
    auto mu2 = make_discrete({{0.0, 0.0}, {1.0, 0.0}}, {0.5, 0.5});
    auto built = risk_from_json(
        nlohmann::json{{"pairs", {{1.0, 0.0}}}, {"loss", "squared"}}, mu2);
    CHECK(built.values[0] == doctest::Approx(0.0));
    CHECK(built.values[1] == doctest::Approx(1.0));
}

TEST_CASE("lambda grid parsing") {
    auto log_grid = lambda_grid_from_json(nlohmann::json{
        {"type", "log"}, {"low", 0.1}, {"high", 10.0}, {"count", 3}});
    REQUIRE(log_grid.size() == 3);
    CHECK(log_grid[1] == doctest::Approx(1.0));

    auto listed = lambda_grid_from_json(nlohmann::json::array({1.0, 2.0}));
    CHECK(listed.size() == 2);

    CHECK_THROWS_AS(lambda_grid_from_json(nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(lambda_grid_from_json(nlohmann::json::array({-1.0})),
                    ConfigError);
}

TEST_CASE("tilted solution serialization") {
    auto gen = builtin_generator("chi_square");
    auto mu = testing::two_atom_measure();
    auto field = testing::two_atom_risk();
    auto sol = tilt_measure(gen, mu, field, 1.0, -0.5);
    auto j = to_json(sol);
    CHECK(j.at("lambda") == 1.0);
    CHECK(j.at("rn_values")[0] == doctest::Approx(1.25));
    CHECK(j.at("tilted_weights").size() == 2);
}

TEST_CASE("certify experiment writes the expected artifacts") {
    auto dir = temp_dir("certify");
    ExperimentConfig cfg = experiment_from_json(two_atom_config("certify"));
    cfg.out_dir = dir;
    CHECK(run_experiment(cfg) == 0);

    std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("lambda,beta,primal,dual,gap,iterations,feasible\n", 0) == 0);
    CHECK(csv.find(",true") != std::string::npos);

    auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("generator") == "kl");
    CHECK(summary.at("rows").size() == 1);
    double gap = summary.at("rows")[0].at("solve").at("beta").get<double>();
    CHECK(gap == doctest::Approx(-1.379885).epsilon(1e-6));
    double weight_sum = summary.at("rows")[0].at("weight_sum").get<double>();
    CHECK(std::abs(weight_sum - 1.0) <= 2e-10);
}

TEST_CASE("experiment output is byte-identical across runs") {
    auto dir1 = temp_dir("det1");
    auto dir2 = temp_dir("det2");
    ExperimentConfig cfg = experiment_from_json(two_atom_config("certify"));
    cfg.out_dir = dir1;
    run_experiment(cfg);
    cfg.out_dir = dir2;
    run_experiment(cfg);
    CHECK(slurp(dir1 / "results.csv") == slurp(dir2 / "results.csv"));
    CHECK(slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json"));
}

TEST_CASE("infeasible lambdas become rows, not failures") {
    auto dir = temp_dir("infeasible");
    nlohmann::json j = two_atom_config("solve");
    j["generator"] = "chi_square";
    j["lambda_grid"] = nlohmann::json::array({0.1, 1.0});
    ExperimentConfig cfg = experiment_from_json(j);
    cfg.out_dir = dir;
    CHECK(run_experiment(cfg) == 0);
    std::string csv = slurp(dir / "results.csv");
    CHECK(csv.find(",false") != std::string::npos);
    CHECK(csv.find(",true") != std::string::npos);
}

TEST_CASE("path experiment writes the ODE table") {
    auto dir = temp_dir("path");
    nlohmann::json j = two_atom_config("path");
    j["lambda_grid"] =
        nlohmann::json{{"type", "linear"}, {"low", 1.0}, {"high", 5.0},
                       {"count", 20}};
    ExperimentConfig cfg = experiment_from_json(j);
    cfg.out_dir = dir;
    CHECK(run_experiment(cfg) == 0);
    std::string pcsv = slurp(dir / "path.csv");
    CHECK(pcsv.rfind("lambda,n_ode,n_direct,rel_err\n", 0) == 0);
    auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("path_max_rel_err").get<double>() <= 1e-5);
}

TEST_CASE("lambda_star experiment reports the chi-square threshold") {
    auto dir = temp_dir("lstar");
    nlohmann::json j = two_atom_config("lambda_star");
    j["generator"] = "chi_square";
    j["lambda_grid"] = nlohmann::json::array({0.01, 1.0});
    ExperimentConfig cfg = experiment_from_json(j);
    cfg.out_dir = dir;
    CHECK(run_experiment(cfg) == 0);
    auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("lambda_star").get<double>() ==
          doctest::Approx(0.25).epsilon(4e-3));
}
