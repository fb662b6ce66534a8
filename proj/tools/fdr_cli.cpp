// Batch front-end: reads an experiment config, runs the requested
// pipeline and writes machine-readable results.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdr/fdr.hpp"

namespace {

int run(const std::string& config_path, const std::string& out_dir,
        fdr::Mode mode, double epsilon, int max_iters, std::uint64_t seed,
        bool epsilon_set, bool max_iters_set, bool seed_set) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config file " << config_path << "\n";
        return 2;
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
        return 2;
    }
    try {
        fdr::ExperimentConfig cfg = fdr::experiment_from_json(j);
        cfg.mode = mode;
        cfg.out_dir = out_dir;
        if (epsilon_set) cfg.solver.epsilon = epsilon;
        if (max_iters_set) cfg.solver.max_iters = max_iters;
        if (seed_set) cfg.seed = seed;
        return fdr::run_experiment(cfg);
    } catch (const fdr::Error& e) {
        nlohmann::json err{{"error", e.what()}, {"config", config_path}};
        std::cerr << err.dump(2) << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        nlohmann::json err{{"error", e.what()}, {"config", config_path}};
        std::cerr << err.dump(2) << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ERM with f-divergence regularization: normalization "
                 "solver, duality certification and ODE continuation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    double epsilon = 1e-10;
    int max_iters = 200;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")
            ->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--epsilon", epsilon, "normalization tolerance");
        sub->add_option("--max-iters", max_iters, "bisection budget");
        sub->add_option("--seed", seed, "recorded in the summary");
    };

    CLI::App* solve = app.add_subcommand(
        "solve", "solve the normalization function over the lambda grid");
    CLI::App* certify = app.add_subcommand(
        "certify", "solve primal and dual independently and report the gap");
    CLI::App* path = app.add_subcommand(
        "path", "integrate the normalization ODE along the lambda grid");
    CLI::App* lambda_star = app.add_subcommand(
        "lambda-star", "bisect the feasibility boundary of lambda");
    for (CLI::App* sub : {solve, certify, path, lambda_star}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    fdr::Mode mode = fdr::Mode::solve;
    if (certify->parsed()) mode = fdr::Mode::certify;
    if (path->parsed()) mode = fdr::Mode::path;
    if (lambda_star->parsed()) mode = fdr::Mode::lambda_star;

    CLI::App* active = app.get_subcommands().front();
    return run(config_path, out_dir, mode, epsilon, max_iters, seed,
               active->count("--epsilon") > 0, active->count("--max-iters") > 0,
               active->count("--seed") > 0);
}
