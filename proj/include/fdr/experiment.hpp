#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdr/continuation.hpp"
#include "fdr/dual.hpp"
#include "fdr/errors.hpp"
#include "fdr/generators.hpp"
#include "fdr/measure.hpp"
#include "fdr/normalize.hpp"
#include "fdr/risk.hpp"
#include "fdr/tilt.hpp"

namespace fdr {

enum class Mode { solve, certify, path, lambda_star };

inline Mode mode_from_string(const std::string& s) {
    if (s == "solve") return Mode::solve;
    if (s == "certify") return Mode::certify;
    if (s == "path") return Mode::path;
    if (s == "lambda_star" || s == "lambda-star") return Mode::lambda_star;
    throw ConfigError("unknown mode: " + s);
}

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::solve: return "solve";
        case Mode::certify: return "certify";
        case Mode::path: return "path";
        case Mode::lambda_star: return "lambda_star";
    }
    return "unknown";
}

/// Fixed 17-significant-digit decimal formatting, so result files diff
/// cleanly across runs and platforms.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// JSON specs

inline SupportedMeasure measure_from_json(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("type"))
        throw ConfigError("measure spec must be an object with a \"type\"");
    std::string type = spec.at("type").get<std::string>();
    if (type == "discrete") {
        std::vector<std::vector<double>> points;
        for (const auto& p : spec.at("points")) {
            if (p.is_number())
                points.push_back({p.get<double>()});
            else
                points.push_back(p.get<std::vector<double>>());
        }
        return make_discrete(std::move(points),
                             spec.at("weights").get<std::vector<double>>());
    }
    if (type == "grid") {
        std::string density = spec.at("density").get<std::string>();
        GridSpec grid{spec.at("low").get<double>(),
                      spec.at("high").get<double>(),
                      spec.at("nodes").get<std::size_t>()};
        if (density == "gaussian")
            return discretize_density(
                [](double x) { return std::exp(-0.5 * x * x); }, grid);
        if (density == "uniform")
            return discretize_density([](double) { return 1.0; }, grid);
        throw ConfigError("unknown built-in density: " + density);
    }
    throw ConfigError("unknown measure type: " + type);
}

inline Loss loss_from_name(const std::string& name, double margin) {
    if (name == "squared") return squared_loss();
    if (name == "absolute") return absolute_loss();
    if (name == "zero_one") return zero_one_loss(margin);
    throw ConfigError("unknown loss: " + name);
}

inline RiskField risk_from_json(const nlohmann::json& spec,
                                const SupportedMeasure& mu) {
    if (!spec.is_object())
        throw ConfigError("risk spec must be an object");
    if (spec.contains("risk_values")) {
        RiskField field = risk_field_from_values(
            spec.at("risk_values").get<std::vector<double>>());
        require_aligned(mu, field);
        return field;
    }
    if (spec.contains("pairs")) {
        Dataset data;
        for (const auto& pair : spec.at("pairs")) {
            if (pair.size() != 2)
                throw ConfigError("dataset pair must be [pattern, label]");
            std::vector<double> x;
            if (pair[0].is_number())
                x = {pair[0].get<double>()};
            else
                x = pair[0].get<std::vector<double>>();
            data.pairs.emplace_back(std::move(x), pair[1].get<double>());
        }
        double margin = spec.value("margin", 0.5);
        Loss loss = loss_from_name(spec.value("loss", "squared"), margin);
        std::string model = spec.value("model", "affine");
        if (model != "affine")
            throw ConfigError("unknown model rule: " + model);
        return build_risk_field(data, affine_model(), loss, mu);
    }
    throw ConfigError("risk spec needs either \"risk_values\" or \"pairs\"");
}

inline std::vector<double> lambda_grid_from_json(const nlohmann::json& spec) {
    std::vector<double> grid;
    if (spec.is_array()) {
        grid = spec.get<std::vector<double>>();
    } else if (spec.is_object() && spec.contains("values")) {
        grid = spec.at("values").get<std::vector<double>>();
    } else if (spec.is_object()) {
        std::string type = spec.value("type", "log");
        double low = spec.at("low").get<double>();
        double high = spec.at("high").get<double>();
        std::size_t count = spec.at("count").get<std::size_t>();
        if (count == 0) throw ConfigError("lambda grid: count must be positive");
        if (count == 1) {
            grid = {low};
        } else if (type == "log") {
            if (!(low > 0.0)) throw ConfigError("log grid needs low > 0");
            double ratio = std::log(high / low);
            for (std::size_t i = 0; i < count; ++i)
                grid.push_back(low * std::exp(ratio * i / (count - 1)));
        } else if (type == "linear") {
            for (std::size_t i = 0; i < count; ++i)
                grid.push_back(low + (high - low) * i / (count - 1));
        } else {
            throw ConfigError("unknown lambda grid type: " + type);
        }
    } else {
        throw ConfigError("lambda grid spec must be an array or object");
    }
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    for (double l : grid)
        if (!(l > 0.0)) throw ConfigError("lambda grid values must be positive");
    return grid;
}

inline nlohmann::json to_json(const TiltedSolution& sol) {
    return nlohmann::json{{"lambda", sol.lambda},
                          {"beta", sol.beta},
                          {"points", sol.base.points},
                          {"rn_values", sol.rn_values},
                          {"tilted_weights", sol.tilted_weights}};
}

inline nlohmann::json to_json(const SolveReport& r) {
    nlohmann::json j{{"beta", r.beta},
                     {"residual", r.residual},
                     {"iterations", r.iterations},
                     {"bracket", {r.bracket.lo, r.bracket.hi}},
                     {"feasible", r.feasible}};
    if (r.failure_reason) j["failure_reason"] = *r.failure_reason;
    return j;
}

inline nlohmann::json to_json(const DualReport& r) {
    return nlohmann::json{{"beta_hat", r.beta_hat},
                          {"dual_value", r.dual_value},
                          {"primal_value", r.primal_value},
                          {"gap", r.gap},
                          {"grad_norm_at_opt", r.grad_norm_at_opt},
                          {"iterations", r.iterations}};
}

// ---------------------------------------------------------------------------
// Experiment runner

struct ExperimentConfig {
    std::string generator;
    nlohmann::json measure_spec;
    nlohmann::json risk_spec;
    nlohmann::json lambda_grid_spec;
    SolveConfig solver;
    Mode mode = Mode::solve;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = ".";
};

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.generator = j.at("generator").get<std::string>();
    cfg.measure_spec = j.at("measure");
    cfg.risk_spec = j.at("risk");
    cfg.lambda_grid_spec = j.at("lambda_grid");
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        cfg.solver.epsilon = s.value("epsilon", cfg.solver.epsilon);
        cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
        cfg.solver.bracket_growth =
            s.value("bracket_growth", cfg.solver.bracket_growth);
        cfg.solver.max_bracket_expansions = s.value(
            "max_bracket_expansions", cfg.solver.max_bracket_expansions);
    }
    if (j.contains("mode"))
        cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{0});
    return cfg;
}

/// FNV-1a over the canonical text rendering of the instance, recorded in
/// the summary so result files can be traced back to their inputs.
inline std::uint64_t instance_hash(const SupportedMeasure& mu,
                                   const RiskField& field) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double c : mu.points[i]) mix(format_number(c) + ",");
        mix(";" + format_number(mu.weights[i]) + "|");
        mix(format_number(field.values[i]) + "!");
    }
    return h;
}

/// Runs one experiment config end to end, writing results.csv,
/// summary.json and (path mode) path.csv into cfg.out_dir. Solver
/// failures at individual grid points become feasible=false rows; they
/// never abort the sweep. Returns 0 on success.
inline int run_experiment(const ExperimentConfig& cfg) {
    FGenerator gen = builtin_generator(cfg.generator);
    SupportedMeasure mu = measure_from_json(cfg.measure_spec);
    RiskField field = risk_from_json(cfg.risk_spec, mu);
    std::vector<double> grid = lambda_grid_from_json(cfg.lambda_grid_spec);

    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / "results.csv");
    csv << "lambda,beta,primal,dual,gap,iterations,feasible\n";

    nlohmann::json summary;
    summary["generator"] = cfg.generator;
    summary["mode"] = to_string(cfg.mode);
    summary["seed"] = cfg.seed;
    summary["instance_hash"] = instance_hash(mu, field);
    summary["delta_star"] = field.delta_star;
    summary["separable"] = field.separable;
    summary["epsilon"] = cfg.solver.epsilon;
    summary["rows"] = nlohmann::json::array();

    if (cfg.mode == Mode::lambda_star) {
        double lo = grid.front(), hi = grid.back();
        if (!(lo < hi))
            throw ConfigError(
                "lambda_star mode needs a grid spanning a positive range");
        LambdaStarEstimate est =
            estimate_lambda_star(gen, mu, field, lo, hi, cfg.solver);
        summary["lambda_star"] = est.value;
        summary["lambda_star_at_lower_bound"] = est.at_lower_bound;
        std::ofstream(cfg.out_dir / "summary.json") << summary.dump(2) << "\n";
        return 0;
    }

    std::optional<double> path_anchor_beta;
    for (double lambda : grid) {
        nlohmann::json row;
        row["lambda"] = lambda;
        try {
            SolveReport solve = solve_normalization(gen, mu, field, lambda,
                                                    cfg.solver);
            TiltedSolution tilted =
                tilt_measure(gen, mu, field, lambda, solve.beta);
            double primal = primal_value(gen, tilted, field);
            double dual = std::numeric_limits<double>::quiet_NaN();
            double gap = std::numeric_limits<double>::quiet_NaN();
            if (cfg.mode == Mode::certify) {
                DualReport dr = solve_dual(gen, mu, field, lambda, cfg.solver);
                dual = dr.dual_value;
                gap = dr.gap;
                row["beta_hat_dual"] = dr.beta_hat;
            }
            if (lambda == grid.front()) path_anchor_beta = solve.beta;
            csv << format_number(lambda) << ',' << format_number(solve.beta)
                << ',' << format_number(primal) << ',' << format_number(dual)
                << ',' << format_number(gap) << ',' << solve.iterations
                << ",true\n";
            row["solve"] = to_json(solve);
            row["primal"] = primal;
            row["weight_sum"] = tilted.weight_sum();
        } catch (const Error& e) {
            csv << format_number(lambda) << ",nan,nan,nan,nan,0,false\n";
            row["feasible"] = false;
            row["error"] = e.what();
        }
        summary["rows"].push_back(row);
    }

    if (cfg.mode == Mode::path) {
        if (!path_anchor_beta)
            throw InfeasibleLambdaError(
                "path mode: the first grid point is infeasible, nothing to "
                "anchor the ODE on");
        OdePath path = integrate_path(gen, mu, field, grid.front(),
                                      *path_anchor_beta, grid, cfg.solver);
        std::ofstream pcsv(cfg.out_dir / "path.csv");
        pcsv << "lambda,n_ode,n_direct,rel_err\n";
        for (std::size_t i = 0; i < path.lambdas.size(); ++i)
            pcsv << format_number(path.lambdas[i]) << ','
                 << format_number(path.n_values[i]) << ','
                 << format_number(path.n_direct[i]) << ','
                 << format_number(path.rel_err[i]) << "\n";
        summary["path_max_rel_err"] = path.max_rel_err;
        summary["path_truncated"] = path.truncated;
        if (path.boundary_lambda)
            summary["path_boundary_lambda"] = *path.boundary_lambda;
    }

    std::ofstream(cfg.out_dir / "summary.json") << summary.dump(2) << "\n";
    return 0;
}

} // namespace fdr
