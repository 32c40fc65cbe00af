#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gark/integrator.hpp"
#include "gark/problems.hpp"
#include "gark/tableau.hpp"
#include "json.hpp"

namespace gark::cli {

struct ExperimentConfig {
    std::string subcommand;
    std::string problem = "calvo";
    int nx = 0;  ///< 0: problem default
    int ny = 0;
    double dt = 0.0;       ///< 0: problem default
    double t_final = 0.0;  ///< 0: problem default
    double gamma = 0.0;    ///< 0: 1 - sqrt(2)/2
    double alpha = 0.0;    ///< 0: gamma
    int stages = 4;
    double space_pct = 90.0;
    double time_pct = 80.0;
    std::string out = "out";
    std::uint64_t seed = 1;
    std::string tableau_file;
    std::vector<double> levels;  ///< converge: explicit step sizes
    double ref_dt = 0.0;         ///< converge: reference step size
    std::string marking = "union";
    bool cache_references = true;
    nlohmann::json params = nlohmann::json::object();
};

/// Applies a JSON config document on top of the parsed flags.
void apply_config(ExperimentConfig& cfg, const nlohmann::json& j);

/// Parses argv; returns nullopt after printing help or a parse error
/// (the exit code is then stored in `exit_code`).
std::optional<ExperimentConfig> parse_arguments(int argc, char** argv, int& exit_code);

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

int cmd_converge(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_estimate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_refine(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_oracle_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Tableau named by the config: a JSON file when given, otherwise imex22(gamma, alpha).
GarkTableau select_tableau(const ExperimentConfig& cfg);

/// Problem family with the config's grid, final time and parameters applied.
ProblemFamily make_family(const ExperimentConfig& cfg);

/// Step size used when none is given.
double default_step(const std::string& problem, const std::string& subcommand);

struct ConvergenceRow {
    double dt = 0.0;
    double forward_error = 0.0;  ///< relative l2 error of y_N
    double adjoint_error = 0.0;  ///< relative l2 error of lambda_0
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    double forward_slope = 0.0;  ///< NaN when not fitted
    double adjoint_slope = 0.0;
};

/// Fixed-step runs at each dt against a run at ref_dt on the same grid.
ConvergenceStudy convergence_study(const ProblemFamily& family, const GarkTableau& tableau,
                                   const std::vector<double>& dts, double ref_dt,
                                   const StageSolverConfig& solver = {});

struct CheckResult {
    std::string suite;
    std::string name;
    double magnitude = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Duality, finite-difference, three-formulation and tableau-identity checks
/// on `systems` seeded random split systems.
std::vector<CheckResult> oracle_suites(const GarkTableau& tableau, std::uint64_t seed, int systems = 5);

/// Least-squares slope of log(y) against log(x); NaN with fewer than two points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gark::cli
