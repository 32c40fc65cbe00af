#include "cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "gark/adaptivity.hpp"
#include "gark/adjoint.hpp"
#include "gark/error_estimation.hpp"
#include "gark/errors.hpp"
#include "gark/io.hpp"
#include "gark/oracle.hpp"

namespace gark::cli {

using nlohmann::json;

namespace {

std::string sci5(double v) { return io::format_sci(v, 5); }

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidParameter("'" + path + "' is not valid JSON: " + e.what());
    }
}

double rel_norm(const Vector& a, const Vector& ref) {
    const double scale = ref.norm();
    const double diff = (a - ref).norm();
    return scale > 0.0 ? diff / scale : diff;
}

double inf_norm(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

void write_grid_snapshot(const std::string& dir, int stage, const TensorGrid2D& space, const TimeGrid& time) {
    json j;
    j["stage"] = stage;
    j["space"] = to_json(space);
    j["time"] = to_json(time);
    io::write_text(dir + "/stage-" + std::to_string(stage) + ".json", io::dump_json(j, 2) + "\n");
}

EstimateOptions estimate_options(const ExperimentConfig& cfg) {
    EstimateOptions opt;
    if (cfg.cache_references) opt.reference_cache_dir = cfg.out + "/cache";
    return opt;
}

}  // namespace

void apply_config(ExperimentConfig& cfg, const json& j) {
    if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "subcommand") cfg.subcommand = v.get<std::string>();
        else if (key == "problem") cfg.problem = v.get<std::string>();
        else if (key == "nx") cfg.nx = v.get<int>();
        else if (key == "ny") cfg.ny = v.get<int>();
        else if (key == "dt") cfg.dt = v.get<double>();
        else if (key == "t_final") cfg.t_final = v.get<double>();
        else if (key == "gamma") cfg.gamma = v.get<double>();
        else if (key == "alpha") cfg.alpha = v.get<double>();
        else if (key == "stages") cfg.stages = v.get<int>();
        else if (key == "space_pct") cfg.space_pct = v.get<double>();
        else if (key == "time_pct") cfg.time_pct = v.get<double>();
        else if (key == "out") cfg.out = v.get<std::string>();
        else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
        else if (key == "tableau") cfg.tableau_file = v.get<std::string>();
        else if (key == "levels") cfg.levels = v.get<std::vector<double>>();
        else if (key == "ref_dt") cfg.ref_dt = v.get<double>();
        else if (key == "marking") cfg.marking = v.get<std::string>();
        else if (key == "cache_references") cfg.cache_references = v.get<bool>();
        else if (key == "params") cfg.params = v;
        else throw InvalidParameter("unknown config key '" + key + "'");
    }
}

std::optional<ExperimentConfig> parse_arguments(int argc, char** argv, int& exit_code) {
    ExperimentConfig cfg;
    std::string config_file;
    CLI::App app{"GARK integration, discrete adjoints and goal-oriented error estimation"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--problem", cfg.problem, "calvo | gray_scott | bsvd | toy_linear | zero");
        sub->add_option("--nx", cfg.nx, "cells in x");
        sub->add_option("--ny", cfg.ny, "cells in y");
        sub->add_option("--dt", cfg.dt, "time step");
        sub->add_option("--t-final", cfg.t_final, "final time");
        sub->add_option("--gamma", cfg.gamma, "imex22 gamma");
        sub->add_option("--alpha", cfg.alpha, "imex22 alpha");
        sub->add_option("--tableau", cfg.tableau_file, "tableau JSON file");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--seed", cfg.seed, "seed for random systems");
        sub->add_option("--config", config_file, "JSON config; its keys override flags");
    };
    CLI::App* converge = app.add_subcommand("converge", "fixed-step convergence of forward and adjoint");
    CLI::App* estimate = app.add_subcommand("estimate", "temporal and spatial error estimates");
    CLI::App* refine = app.add_subcommand("refine", "adaptive space-time refinement campaign");
    CLI::App* oracle = app.add_subcommand("oracle-check", "adjoint and tableau checks on random systems");
    for (CLI::App* sub : {converge, estimate, refine, oracle}) add_common(sub);
    converge->add_option("--levels", cfg.levels, "step sizes");
    converge->add_option("--ref-dt", cfg.ref_dt, "reference step size");
    refine->add_option("--stages", cfg.stages, "number of refinements");
    refine->add_option("--space-pct", cfg.space_pct, "spatial marking percentile");
    refine->add_option("--time-pct", cfg.time_pct, "temporal marking percentile");
    refine->add_option("--marking", cfg.marking, "union | total");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        exit_code = app.exit(e);
        return std::nullopt;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (!config_file.empty()) {
        try {
            apply_config(cfg, read_json_file(config_file));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            exit_code = 2;
            return std::nullopt;
        }
    }
    exit_code = 0;
    return cfg;
}

GarkTableau select_tableau(const ExperimentConfig& cfg) {
    if (!cfg.tableau_file.empty()) return tableau_from_json(read_json_file(cfg.tableau_file));
    const double gamma = cfg.gamma != 0.0 ? cfg.gamma : imex22_default_gamma();
    const double alpha = cfg.alpha != 0.0 ? cfg.alpha : gamma;
    return build_imex22(gamma, alpha);
}

double default_step(const std::string& problem, const std::string& subcommand) {
    if (problem == "calvo") return 0.0375;
    if (problem == "gray_scott") return 0.02;
    if (problem == "bsvd") return subcommand == "refine" ? 0.02 : 0.01;
    if (problem == "toy_linear") return 0.05;
    if (problem == "zero") return 0.1;
    throw InvalidParameter("unknown problem '" + problem + "'");
}

ProblemFamily make_family(const ExperimentConfig& cfg) {
    json j;
    j["problem"] = cfg.problem;
    if (cfg.t_final > 0.0) {
        j["tF"] = cfg.t_final;
    } else if (cfg.problem == "bsvd" && cfg.subcommand == "refine") {
        j["tF"] = 4.0;
    }
    j["params"] = cfg.params;
    ProblemFamily probe(j);
    if (probe.spatial()) {
        const json& g = probe.config().at("grid");
        int nx = g.at("nx").get<int>();
        int ny = g.at("ny").get<int>();
        if (cfg.problem == "bsvd" && cfg.subcommand == "refine") nx = ny = 20;
        if (cfg.nx > 0) nx = cfg.nx;
        if (cfg.ny > 0) ny = cfg.ny;
        j["grid"] = {{"nx", nx}, {"ny", ny}};
    }
    return ProblemFamily(j);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
        if (x[k] > 0.0 && y[k] > 0.0) {
            lx.push_back(std::log(x[k]));
            ly.push_back(std::log(y[k]));
        }
    }
    if (lx.size() < 2) return std::nan("");
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy convergence_study(const ProblemFamily& family, const GarkTableau& tableau,
                                   const std::vector<double>& dts, double ref_dt,
                                   const StageSolverConfig& solver) {
    if (dts.empty()) throw InvalidParameter("convergence study needs at least one step size");
    const ProblemInstance problem = family.instantiate();
    const GarkTableau t = align_with_problem(tableau, problem);
    auto run = [&](double dt) {
        const TimeGrid grid = TimeGrid::with_step(problem.t0, problem.tF, dt);
        ForwardTrajectory fwd = integrate(problem, t, grid, solver, StorageMode::kFull);
        SweepOptions opt;
        opt.store_theta = false;
        opt.store_ell = false;
        opt.store_mu = false;
        AdjointTrajectory adj = sweep(*problem.system, t, fwd, *problem.goal, opt);
        return std::pair<Vector, Vector>{fwd.final_state(), adj.lambda.front()};
    };
    const auto [y_ref, l_ref] = run(ref_dt);
    ConvergenceStudy out;
    std::vector<double> x, ef, ea;
    for (double dt : dts) {
        const auto [y, l] = run(dt);
        out.rows.push_back({dt, rel_norm(y, y_ref), rel_norm(l, l_ref)});
        x.push_back(dt);
        ef.push_back(out.rows.back().forward_error);
        ea.push_back(out.rows.back().adjoint_error);
    }
    out.forward_slope = loglog_slope(x, ef);
    out.adjoint_slope = loglog_slope(x, ea);
    return out;
}

int cmd_converge(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    const ProblemFamily family = make_family(cfg);
    std::vector<double> levels = cfg.levels;
    double ref_dt = cfg.ref_dt;
    if (levels.empty()) {
        const double base = cfg.dt > 0.0 ? cfg.dt : (cfg.problem == "calvo" ? 0.15 : default_step(cfg.problem, "converge"));
        for (int k = 4; k >= 0; --k) levels.push_back(base * std::ldexp(1.0, -k));
    }
    std::sort(levels.begin(), levels.end());
    if (ref_dt <= 0.0) ref_dt = levels.front() / 8.0;

    const ConvergenceStudy study = convergence_study(family, select_tableau(cfg), levels, ref_dt);
    io::ensure_directory(cfg.out);
    std::ostringstream csv;
    csv << "dt,forward_error,adjoint_error\n";
    for (const auto& r : study.rows) csv << sci5(r.dt) << ',' << sci5(r.forward_error) << ',' << sci5(r.adjoint_error) << '\n';
    io::write_text(cfg.out + "/convergence.csv", csv.str());
    out << csv.str();

    if (study.rows.size() < 2) {
        err << "warning: a single step size gives no convergence fit\n";
        return 0;
    }
    const bool all_zero = std::all_of(study.rows.begin(), study.rows.end(), [](const ConvergenceRow& r) {
        return r.forward_error == 0.0 && r.adjoint_error == 0.0;
    });
    if (all_zero) {
        out << "all errors are zero; fit skipped\n";
        return 0;
    }
    auto local = [&](double e_h, double e_half) { return std::log2(e_h / e_half); };
    out << "forward order " << sci5(study.forward_slope) << " (last halving "
        << sci5(local(study.rows[1].forward_error, study.rows[0].forward_error)) << ")\n";
    out << "adjoint order " << sci5(study.adjoint_slope) << " (last halving "
        << sci5(local(study.rows[1].adjoint_error, study.rows[0].adjoint_error)) << ")\n";
    auto in_band = [](double s) { return s >= 1.8 && s <= 2.2; };
    if (in_band(study.forward_slope) && in_band(study.adjoint_slope)) return 0;
    err << "fitted orders outside [1.8, 2.2]\n";
    return 1;
}

int cmd_estimate(const ExperimentConfig& cfg, std::ostream& out, std::ostream&) {
    const ProblemFamily family = make_family(cfg);
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_step(cfg.problem, "estimate");
    const TimeGrid time = TimeGrid::with_step(family.t0(), family.tF(), dt);
    std::optional<TensorGrid2D> space;
    if (family.spatial()) space = family.default_grid();

    io::ensure_directory(cfg.out);
    const EstimateOptions opt = estimate_options(cfg);
    const EstimateResult res = estimate_errors(family, space ? &*space : nullptr, time, select_tableau(cfg), opt);
    const ErrorReport& r = res.report;

    io::write_text(cfg.out + "/report.json", io::dump_json(to_json(r, true), 2) + "\n");
    io::write_text(cfg.out + "/report.csv", report_csv(r));

    std::ostringstream steps;
    steps << "step,t_start,t_end,contribution\n";
    for (std::size_t n = 0; n < r.step_map.size(); ++n) {
        steps << n + 1 << ',' << sci5(time.t(n)) << ',' << sci5(time.t(n + 1)) << ',' << sci5(r.step_map[n]) << '\n';
    }
    io::write_text(cfg.out + "/step_map.csv", steps.str());

    if (!r.cell_maps.empty()) {
        std::ostringstream cells;
        cells << "i,j";
        for (const auto& name : r.partition_names) cells << ',' << name;
        cells << ",total\n";
        const std::vector<double> total = r.total_cell_map();
        for (std::size_t c = 0; c < total.size(); ++c) {
            cells << c % static_cast<std::size_t>(r.nx_cells) << ',' << c / static_cast<std::size_t>(r.nx_cells);
            for (const auto& m : r.cell_maps) cells << ',' << sci5(m[c]);
            cells << ',' << sci5(total[c]) << '\n';
        }
        io::write_text(cfg.out + "/cell_map.csv", cells.str());
    }
    out << report_csv(r);
    return 0;
}

int cmd_refine(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    const ProblemFamily family = make_family(cfg);
    if (!family.spatial()) throw InvalidParameter("refinement needs a spatial problem");
    RefinementConfig rc;
    rc.space_pct = cfg.space_pct;
    rc.time_pct = cfg.time_pct;
    rc.stages = cfg.stages;
    if (cfg.marking == "total") rc.basis = MarkingBasis::kTotal;
    else if (cfg.marking == "union") rc.basis = MarkingBasis::kUnion;
    else throw InvalidParameter("marking must be 'union' or 'total'");
    io::ensure_directory(cfg.out);
    io::ensure_directory(cfg.out + "/grids");
    rc.estimate = estimate_options(cfg);

    const double dt = cfg.dt > 0.0 ? cfg.dt : default_step(cfg.problem, "refine");
    const StageGrids initial{family.default_grid(), TimeGrid::with_step(family.t0(), family.tF(), dt)};
    const std::string jsonl = cfg.out + "/campaign.jsonl";
    io::write_text(jsonl, "");
    auto on_stage = [&](const RefinementStageLog& log) {
        io::append_line(jsonl, io::dump_json(to_json(log)));
        write_grid_snapshot(cfg.out + "/grids", log.stage, log.space_before, log.time_before);
        out << "stage " << log.stage << ": nodes " << log.space_before.nx_nodes() * log.space_before.ny_nodes()
            << ", steps " << log.time_before.num_steps() << ", estimate " << sci5(log.report.total)
            << ", reference error " << (log.report.e_ref ? sci5(*log.report.e_ref) : std::string("n/a")) << "\n";
    };

    std::vector<RefinementStageLog> logs;
    int code = 0;
    try {
        logs = run_campaign(family, initial, select_tableau(cfg), rc, on_stage);
    } catch (const CampaignError& e) {
        err << "error: " << e.what() << "\n";
        logs = e.completed();
        code = 1;
    }
    io::write_text(cfg.out + "/campaign.csv", campaign_csv(logs));
    const double order = fitted_decay_order(logs);
    out << "fitted decay order of |E_ref| per stage: " << sci5(order) << "\n";
    return code;
}

std::vector<CheckResult> oracle_suites(const GarkTableau& tableau, std::uint64_t seed, int systems) {
    std::vector<CheckResult> results;
    auto record = [&](std::string suite, std::string name, double magnitude, double tol) {
        results.push_back({std::move(suite), std::move(name), magnitude, tol, magnitude <= tol});
    };

    // tableau identities
    const ValidationReport report = validate(tableau);
    if (report.ok()) {
        record("tableau", "invariants", 0.0, kCoefficientTolerance);
    } else {
        for (const auto& issue : report.issues) {
            results.push_back({"tableau", issue.invariant + ": " + issue.detail, issue.residual,
                               kCoefficientTolerance, false});
        }
    }
    bool nonzero_weights = true;
    for (int q = 0; q < tableau.num_partitions(); ++q) nonzero_weights &= (tableau.b(q).array() != 0.0).all();
    if (nonzero_weights) {
        const GarkTableau twice = adjoint_coefficients(adjoint_coefficients(tableau).coefficients()).coefficients();
        double dev = 0.0;
        for (int q = 0; q < tableau.num_partitions(); ++q) {
            for (int m = 0; m < tableau.num_partitions(); ++m) {
                dev = std::max(dev, (twice.a(q, m) - tableau.a(q, m)).cwiseAbs().maxCoeff());
            }
        }
        record("tableau", "adjoint involution", dev, 1e-14);
    }

    StageSolverConfig tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    tight.max_iterations = 50;

    for (int k = 0; k < systems; ++k) {
        const std::uint64_t s = seed * 1000003ULL + static_cast<std::uint64_t>(k);
        const Eigen::Index d = 3 + static_cast<Eigen::Index>((seed + static_cast<std::uint64_t>(k)) % 8);
        const std::string tag = "system " + std::to_string(k) + " (d=" + std::to_string(d) + ")";
        try {
            const oracle::RandomProblem rp = oracle::random_split_system(s, d);
            const TimeGrid grid = TimeGrid::uniform(0.0, 0.4, 8);
            const ForwardTrajectory fwd = integrate(*rp.system, tableau, grid, rp.y0, tight, StorageMode::kFull);
            SweepOptions opt;
            opt.independent_forms = nonzero_weights;
            const AdjointTrajectory adj = sweep(*rp.system, tableau, fwd, *rp.goal, opt);
            const std::size_t N = grid.num_steps();

            // finite-difference sensitivities of Q(y_N)
            double fd_err = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                Vector fd(d);
                for (Eigen::Index j = 0; j < d; ++j) {
                    fd[j] = oracle::fd_sensitivity(*rp.system, *rp.goal, tableau, grid, fwd.state(n), n, j, 0.0, tight);
                }
                fd_err = std::max(fd_err, inf_norm(adj.lambda[n] - fd) / inf_norm(adj.lambda[n]));
            }
            record("fd-sensitivity", tag, fd_err, 1e-5);

            // dot-product test against the dense tangent-linear step
            std::mt19937_64 rng(s ^ 0x9e3779b97f4a7c15ULL);
            std::normal_distribution<double> normal;
            double dual_err = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                Vector v(d), w(d);
                for (Eigen::Index j = 0; j < d; ++j) v[j] = normal(rng);
                for (Eigen::Index j = 0; j < d; ++j) w[j] = normal(rng);
                const auto& values = fwd.stages[n].values;
                const oracle::DensePropagator P =
                    oracle::dense_step_propagator(*rp.system, tableau, grid.t(n), grid.step(n), fwd.state(n), &values);
                const Vector phi_v = P.phi * v;
                const Vector back = adjoint_step_mu(*rp.system, tableau, fwd.stages[n], grid.step(n), w).lambda;
                const double lhs = w.dot(phi_v);
                const double rhs = back.dot(v);
                dual_err = std::max(dual_err, std::abs(lhs - rhs) / (w.norm() * phi_v.norm()));
            }
            record("duality", tag, dual_err, 1e-10);

            // three adjoint formulations
            if (nonzero_weights) {
                double lam_err = 0.0, jt_err = 0.0, hb_err = 0.0;
                for (std::size_t n = 0; n <= N; ++n) {
                    const double scale = inf_norm(adj.lambda[n]);
                    lam_err = std::max(lam_err, inf_norm(adj.lambda_theta[n] - adj.lambda[n]) / scale);
                    lam_err = std::max(lam_err, inf_norm(adj.lambda_ell[n] - adj.lambda[n]) / scale);
                }
                for (std::size_t n = 0; n < N; ++n) {
                    const double h = grid.step(n);
                    const StageJacobians J = stage_jacobians(*rp.system, fwd.stages[n]);
                    const auto& ind = adj.independent_stages[n];
                    const auto& mu = adj.stages[n].mu;
                    const double stage_scale = h * inf_norm(adj.lambda[n + 1]);
                    for (int q = 0; q < tableau.num_partitions(); ++q) {
                        for (int i = 0; i < tableau.stages(q); ++i) {
                            const Vector& th = ind.theta[q][i];
                            const double sc = std::max(inf_norm(th), stage_scale);
                            const Vector jt_mu = J[q][i].transpose() * mu[q][i];
                            jt_err = std::max(jt_err, inf_norm(th - jt_mu) / sc);
                            const Vector hbl = h * tableau.b(q)(i) * ind.ell[q][i];
                            hb_err = std::max(hb_err, inf_norm(th - hbl) / sc);
                        }
                    }
                }
                record("formulations", tag + " lambda", lam_err, 1e-12);
                record("formulations", tag + " theta=J^T mu", jt_err, 1e-10);
                record("formulations", tag + " theta=h b ell", hb_err, 1e-10);
            }
        } catch (const std::exception& e) {
            results.push_back({"run", tag + ": " + e.what(), std::numeric_limits<double>::infinity(), 0.0, false});
        }
    }
    return results;
}

int cmd_oracle_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    const GarkTableau tableau = select_tableau(cfg);
    const std::vector<CheckResult> results = oracle_suites(tableau, cfg.seed);
    int failures = 0;
    for (const auto& r : results) {
        out << (r.pass ? "PASS " : "FAIL ") << r.suite << ": " << r.name << "  " << sci5(r.magnitude)
            << " (tol " << sci5(r.tolerance) << ")\n";
        if (!r.pass) ++failures;
    }
    if (failures) {
        err << failures << " check(s) failed\n";
        return 1;
    }
    return 0;
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.subcommand == "converge") return cmd_converge(cfg, out, err);
        if (cfg.subcommand == "estimate") return cmd_estimate(cfg, out, err);
        if (cfg.subcommand == "refine") return cmd_refine(cfg, out, err);
        if (cfg.subcommand == "oracle-check") return cmd_oracle_check(cfg, out, err);
        err << "error: unknown subcommand '" << cfg.subcommand << "'\n";
        return 2;
    } catch (const StepFailure& e) {
        err << "error: step failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace gark::cli
