// ccstat — command-line front-end for the chance-constrained trajectory
// planning toolkit.
//
// Subcommands
//   make-cwh     emit the bundled rendezvous demo problem + disturbance model
//   solve        run one method (proposed | scenario | osvpi) on a problem
//   certify      Monte-Carlo check of a saved solution against a model
//   bound-table  CSV of the sample tail bound f(lambda) over an N_s grid
//   compare      run all three methods on one problem, one merged table
//   run          execute a batch experiment config end to end
//
// Exit codes: 0 success, 2 infeasible, 3 validation gate, 4 input/output.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccstat/concentration.hpp"
#include "ccstat/dynamics.hpp"
#include "ccstat/io.hpp"
#include "ccstat/problem.hpp"
#include "ccstat/reformulation.hpp"
#include "ccstat/sampling.hpp"
#include "ccstat/solver.hpp"
#include "ccstat/verify.hpp"

namespace fs = std::filesystem;
using namespace ccstat;

namespace {

std::string fmt(double x) { return detail::format_double(x); }

bool is_count(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
               return std::isdigit(c) != 0;
           });
}

SampleSet load_sample_file(const fs::path& path) {
    if (path.extension() == ".csv") return load_samples_csv(path);
    return load_samples_binary(path);
}

// Resolves the --samples argument: a number means "draw that many from the
// model", anything else is a file path (.csv text, otherwise binary).
SampleSet acquire_samples(const std::string& samplesArg, const std::string& modelPath,
                          std::uint64_t seed, std::int64_t defaultCount) {
    if (!samplesArg.empty() && !is_count(samplesArg))
        return load_sample_file(samplesArg);
    std::int64_t count = defaultCount;
    if (!samplesArg.empty()) count = std::strtoll(samplesArg.c_str(), nullptr, 10);
    if (count < 1)
        throw StructuralError("samples",
                              "no sample source: pass --samples with a file path or a count");
    if (modelPath.empty())
        throw StructuralError("samples", "generating samples requires --model");
    GaussianModel model = load_model(modelPath);
    model.seed = seed;
    return generate_samples(model, count);
}

Solution run_method(const std::string& method, const ProblemSpec& problem,
                    const std::optional<SampleSet>& samples,
                    const std::optional<GaussianModel>& model) {
    if (method == "proposed") {
        const SampleStatistics stats = compute_statistics(*samples);
        const BoundContext ctx(samples->count());
        return solve_proposed(build_proposed(problem, stats, ctx));
    }
    if (method == "scenario") return solve_scenario(build_scenario(problem, *samples));
    if (method == "osvpi") return solve_proposed(build_osvpi(problem, *model));
    throw StructuralError("method", "unknown method '" + method +
                                        "' (expected proposed, scenario, or osvpi)");
}

void report_solution(const std::string& method, const Solution& sol) {
    std::cout << method << ": status=" << to_string(sol.status) << " cost=" << fmt(sol.cost)
              << " solve_seconds=" << fmt(sol.solveSeconds) << "\n";
    if (sol.status == SolveStatus::Infeasible && !sol.mostViolated.empty())
        std::cerr << method << ": most violated constraint: " << sol.mostViolated << "\n";
    if (sol.status == SolveStatus::IterLimit)
        std::cerr << method << ": warning: iteration limit reached before convergence\n";
}

struct SolveArgs {
    std::string problemPath, method, samplesArg, modelPath, outPath;
    std::uint64_t seed = 0;
};

int cmd_solve(const SolveArgs& a) {
    const ProblemSpec problem = load_problem(a.problemPath);
    std::optional<SampleSet> samples;
    std::optional<GaussianModel> model;
    if (a.method == "osvpi") {
        if (a.modelPath.empty())
            throw StructuralError("model", "the known-moments method requires --model");
        model = load_model(a.modelPath);
    } else {
        samples = acquire_samples(a.samplesArg, a.modelPath, a.seed, 0);
        std::cout << "samples: " << samples->count() << " x " << samples->dim() << "\n";
    }
    const Solution sol = run_method(a.method, problem, samples, model);
    if (!a.outPath.empty()) {
        save_solution(a.outPath, sol);
        std::cout << "wrote " << a.outPath << "\n";
    }
    report_solution(a.method, sol);
    return sol.status == SolveStatus::Infeasible ? exit_code::infeasible : exit_code::success;
}

struct CertifyArgs {
    std::string problemPath, solutionPath, modelPath, outPath, csvPath;
    std::int64_t trials = 100000;
    std::uint64_t seed = 0;
};

int cmd_certify(const CertifyArgs& a) {
    const ProblemSpec problem = load_problem(a.problemPath);
    const Solution sol = load_solution(a.solutionPath);
    const GaussianModel model = load_model(a.modelPath);
    const CertificationReport report = certify(problem, sol.U, model, a.trials, a.seed);
    if (!a.outPath.empty()) {
        save_certification(a.outPath, report);
        std::cout << "wrote " << a.outPath << "\n";
    }
    if (!a.csvPath.empty()) {
        save_certification_csv(a.csvPath, report);
        std::cout << "wrote " << a.csvPath << "\n";
    }
    std::cout << "satisfaction=" << fmt(report.jointSatisfaction)
              << " stderr=" << fmt(report.standardError) << " trials=" << report.trials
              << "\n";
    return exit_code::success;
}

struct BoundTableArgs {
    std::vector<std::int64_t> sampleCounts{10, 100, 1000};
    double lambdaMin = 0.1, lambdaMax = 6.0, lambdaStep = 0.05;
    std::string outPath;
};

int cmd_bound_table(const BoundTableArgs& a) {
    if (a.lambdaStep <= 0.0)
        throw StructuralError("bound-table", "--lstep must be positive");
    if (a.lambdaMax < a.lambdaMin)
        throw StructuralError("bound-table", "--lmax must be >= --lmin");
    const auto steps =
        static_cast<std::int64_t>(std::floor((a.lambdaMax - a.lambdaMin) / a.lambdaStep + 1e-9));
    std::vector<double> lambdas;
    for (std::int64_t i = 0; i <= steps; ++i)
        lambdas.push_back(a.lambdaMin + static_cast<double>(i) * a.lambdaStep);
    if (a.outPath.empty()) {
        write_bound_table(std::cout, a.sampleCounts, lambdas);
    } else {
        save_bound_table(a.outPath, a.sampleCounts, lambdas);
        std::cout << "wrote " << a.outPath << "\n";
    }
    return exit_code::success;
}

struct MakeCwhArgs {
    std::string outDir = ".";
    double alpha = 0.05;
    int horizon = 5;
};

int cmd_make_cwh(const MakeCwhArgs& a) {
    fs::create_directories(a.outDir);
    const fs::path problemPath = fs::path(a.outDir) / "cwh_problem.json";
    const fs::path modelPath = fs::path(a.outDir) / "cwh_model.json";
    save_problem(problemPath, make_cwh_problem(CwhParameters{}, a.alpha, a.horizon));
    save_model(modelPath, cwh_demo_model(a.horizon));
    std::cout << "wrote " << problemPath.string() << "\n";
    std::cout << "wrote " << modelPath.string() << "\n";
    return exit_code::success;
}

struct CompareArgs {
    std::string problemPath, modelPath, samplesArg, outDir;
    std::uint64_t seed = 0;
    std::int64_t trials = 100000;
};

int cmd_compare(const CompareArgs& a) {
    const ProblemSpec problem = load_problem(a.problemPath);
    const GaussianModel model = load_model(a.modelPath);
    // Default sample budget: the count the scenario approach would demand at
    // confidence 1e-8, so both sample-based methods run on equal footing.
    const std::int64_t defaultCount =
        scenario_sample_count(problem.alpha, 1e-8, problem.input_dims());
    const SampleSet samples = acquire_samples(a.samplesArg, a.modelPath, a.seed, defaultCount);
    std::cout << "samples: " << samples.count() << " x " << samples.dim() << "\n";

    fs::create_directories(a.outDir);
    save_samples_binary(fs::path(a.outDir) / "samples.bin", samples);

    bool anyInfeasible = false;
    std::vector<SummaryRow> rows;
    for (const std::string method : {"proposed", "scenario", "osvpi"}) {
        const Solution sol = run_method(method, problem, samples, model);
        save_solution(fs::path(a.outDir) / ("solution_" + method + ".json"), sol);
        report_solution(method, sol);
        SummaryRow row;
        row.method = method;
        row.cost = sol.cost;
        row.solveSeconds = sol.solveSeconds;
        row.satisfaction = std::numeric_limits<double>::quiet_NaN();
        if (sol.status == SolveStatus::Infeasible) {
            anyInfeasible = true;
        } else {
            // Same certification seed for every method: common random numbers
            // make the satisfaction column directly comparable.
            const CertificationReport report =
                certify(problem, sol.U, model, a.trials, a.seed + 1);
            save_certification(fs::path(a.outDir) / ("certification_" + method + ".json"),
                               report);
            row.satisfaction = report.jointSatisfaction;
            std::cout << method << ": satisfaction=" << fmt(report.jointSatisfaction)
                      << " (" << report.trials << " trials)\n";
        }
        rows.push_back(row);
    }
    const fs::path summaryPath = fs::path(a.outDir) / "summary.csv";
    save_summary_csv(summaryPath, rows);
    std::cout << "wrote " << summaryPath.string() << "\n";
    std::ostringstream table;
    write_summary_csv(table, rows);
    std::cout << table.str();
    return anyInfeasible ? exit_code::infeasible : exit_code::success;
}

struct RunArgs {
    std::string configPath;
};

int cmd_run(const RunArgs& a) {
    const fs::path configFile(a.configPath);
    const ExperimentConfig config = load_config(configFile);
    const fs::path base = configFile.has_parent_path() ? configFile.parent_path() : fs::path(".");
    const auto resolve = [&base](const std::string& p) {
        const fs::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    const ProblemSpec problem = load_problem(resolve(config.problemPath));
    const fs::path outDir = resolve(config.outputDir);
    fs::create_directories(outDir);

    std::optional<GaussianModel> model;
    std::optional<SampleSet> samples;
    if (config.samples.generate) {
        model = load_model(resolve(config.samples.modelPath));
        if (config.method != "osvpi") {
            GaussianModel drawModel = *model;
            drawModel.seed = config.samples.seed;
            samples = generate_samples(drawModel, config.samples.count);
        }
    } else {
        samples = load_sample_file(resolve(config.samples.loadPath));
    }
    if (samples) std::cout << "samples: " << samples->count() << " x " << samples->dim() << "\n";

    const Solution sol = run_method(config.method, problem, samples, model);
    save_solution(outDir / "solution.json", sol);
    std::cout << "wrote " << (outDir / "solution.json").string() << "\n";
    report_solution(config.method, sol);
    if (sol.status == SolveStatus::Infeasible) return exit_code::infeasible;

    SummaryRow row;
    row.method = config.method;
    row.cost = sol.cost;
    row.solveSeconds = sol.solveSeconds;
    row.satisfaction = std::numeric_limits<double>::quiet_NaN();
    if (model) {
        const CertificationReport report =
            certify(problem, sol.U, *model, config.certify.trials, config.certify.seed);
        save_certification(outDir / "certification.json", report);
        save_certification_csv(outDir / "certification.csv", report);
        row.satisfaction = report.jointSatisfaction;
        std::cout << "wrote " << (outDir / "certification.json").string() << "\n";
        std::cout << "satisfaction=" << fmt(report.jointSatisfaction)
                  << " stderr=" << fmt(report.standardError) << " trials=" << report.trials
                  << "\n";
    } else {
        std::cerr << "note: samples were loaded from disk with no disturbance model in the "
                     "config, so no certification is produced\n";
    }

    // Envelope statistics for the trajectory: sample moments when samples
    // exist, otherwise the model's exact moments.
    SampleStatistics stats;
    if (samples) {
        stats = compute_statistics(*samples);
    } else {
        stats.mean = model->mean;
        stats.covariance = model->covariance;
        stats.count = 0;
    }
    if (config.method == "osvpi") {
        stats.mean = model->mean;
        stats.covariance = model->covariance;
        stats.count = 0;
    }
    save_trajectory_csv(outDir / "trajectory.csv", problem, sol.U, stats);
    save_summary_csv(outDir / "summary.csv", {row});
    std::cout << "wrote " << (outDir / "trajectory.csv").string() << "\n";
    std::cout << "wrote " << (outDir / "summary.csv").string() << "\n";
    return exit_code::success;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chance-constrained open-loop trajectory planning toolkit"};
    app.require_subcommand(1);
    int exitCode = exit_code::success;

    SolveArgs solveArgs;
    auto* solve = app.add_subcommand("solve", "solve a planning problem with one method");
    solve->add_option("--problem", solveArgs.problemPath, "problem JSON file")->required();
    solve->add_option("--method", solveArgs.method, "proposed | scenario | osvpi")->required();
    solve->add_option("--samples", solveArgs.samplesArg,
                      "sample file (.csv or binary) or a count to draw from --model");
    solve->add_option("--model", solveArgs.modelPath, "disturbance model JSON file");
    solve->add_option("--seed", solveArgs.seed, "seed for sample generation");
    solve->add_option("--out", solveArgs.outPath, "solution JSON output path");
    solve->callback([&] { exitCode = cmd_solve(solveArgs); });

    CertifyArgs certifyArgs;
    auto* cert = app.add_subcommand("certify", "Monte-Carlo certification of a solution");
    cert->add_option("--problem", certifyArgs.problemPath, "problem JSON file")->required();
    cert->add_option("--solution", certifyArgs.solutionPath, "solution JSON file")->required();
    cert->add_option("--model", certifyArgs.modelPath, "disturbance model JSON file")
        ->required();
    cert->add_option("--trials", certifyArgs.trials, "Monte-Carlo trials (default 100000)");
    cert->add_option("--seed", certifyArgs.seed, "certification seed");
    cert->add_option("--out", certifyArgs.outPath, "certification JSON output path");
    cert->add_option("--csv", certifyArgs.csvPath, "per-row violation CSV output path");
    cert->callback([&] { exitCode = cmd_certify(certifyArgs); });

    BoundTableArgs boundArgs;
    auto* bound = app.add_subcommand("bound-table", "tabulate the sample tail bound");
    bound->add_option("--ns", boundArgs.sampleCounts,
                      "comma-separated sample counts (default 10,100,1000)")
        ->delimiter(',');
    bound->add_option("--lmin", boundArgs.lambdaMin, "smallest lambda (default 0.1)");
    bound->add_option("--lmax", boundArgs.lambdaMax, "largest lambda (default 6)");
    bound->add_option("--lstep", boundArgs.lambdaStep, "lambda grid step (default 0.05)");
    bound->add_option("--out", boundArgs.outPath, "CSV output path (default: stdout)");
    bound->callback([&] { exitCode = cmd_bound_table(boundArgs); });

    MakeCwhArgs cwhArgs;
    auto* cwh = app.add_subcommand("make-cwh", "emit the rendezvous demo problem and model");
    cwh->add_option("--out", cwhArgs.outDir, "output directory (default: current)");
    cwh->add_option("--alpha", cwhArgs.alpha, "joint risk budget (default 0.05)");
    cwh->add_option("--horizon", cwhArgs.horizon, "number of steps (default 5)");
    cwh->callback([&] { exitCode = cmd_make_cwh(cwhArgs); });

    CompareArgs compareArgs;
    auto* compare =
        app.add_subcommand("compare", "run all methods on one problem, emit a merged table");
    compare->add_option("--problem", compareArgs.problemPath, "problem JSON file")->required();
    compare->add_option("--model", compareArgs.modelPath, "disturbance model JSON file")
        ->required();
    compare->add_option("--samples", compareArgs.samplesArg,
                        "sample file or count (default: the scenario-approach count)");
    compare->add_option("--seed", compareArgs.seed, "sampling seed (certification uses seed+1)");
    compare->add_option("--trials", compareArgs.trials, "certification trials per method");
    compare->add_option("--out", compareArgs.outDir, "output directory")->required();
    compare->callback([&] { exitCode = cmd_compare(compareArgs); });

    RunArgs runArgs;
    auto* run = app.add_subcommand("run", "execute a batch experiment config");
    run->add_option("--config", runArgs.configPath, "experiment config JSON file")->required();
    run->callback([&] { exitCode = cmd_run(runArgs); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::io;
    } catch (const GateError& e) {
        std::cerr << "gate violation [" << e.tag() << "]: " << e.what() << "\n";
        if (e.tag() == "insufficient-samples")
            std::cerr << "hint: draw more samples, or relax the risk budget so the "
                         "per-row requirement falls within the bound's range\n";
        return exit_code::gate;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return exit_code::infeasible;
    } catch (const IoError& e) {
        std::cerr << "io error [" << e.tag() << "]: " << e.what() << "\n";
        return exit_code::io;
    } catch (const StructuralError& e) {
        std::cerr << "invalid input [" << e.tag() << "]: " << e.what() << "\n";
        return exit_code::io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::io;
    }
    return exitCode;
}
