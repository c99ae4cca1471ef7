// Acceptance battery for the toolkit. Each criterion prints detail lines and
// exactly one final [PASS]/[FAIL] verdict; the process exits 0 on pass.
//
//   acceptance <criterion>      criterion in 1..10

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccstat/concentration.hpp"
#include "ccstat/dynamics.hpp"
#include "ccstat/problem.hpp"
#include "ccstat/reformulation.hpp"
#include "ccstat/sampling.hpp"
#include "ccstat/solver.hpp"
#include "ccstat/verify.hpp"

using namespace ccstat;

namespace {

struct Check {
    bool ok = true;
    void expect(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            std::cout << "  FAILED: " << what << "\n";
        }
    }
};

std::string num(double x) {
    std::ostringstream ss;
    ss << std::setprecision(6) << x;
    return ss.str();
}

// ---------------------------------------------------------------------------
// Criteria 1-2: Monte-Carlo validity of the tail bounds on an (N_s, lambda)
// grid, 1e4 experiments per cell, 3-sigma binomial slack.
// ---------------------------------------------------------------------------

bool battery(bool outOfSample) {
    const std::int64_t trials = 10000;
    const std::uint64_t seed = outOfSample ? 424201 : 424202;
    Check check;
    for (const std::int64_t ns : {4, 10, 100, 1000}) {
        std::vector<double> lambdas;
        double validityFloor = 0.0;
        if (outOfSample) {
            const BoundContext ctx(ns);
            validityFloor = lambda_min(ctx);
            lambdas = {validityFloor + 0.1, 2.0, 3.0, 5.0};
        } else {
            validityFloor = osvpi_lambda_floor();
            lambdas = {validityFloor + 0.1, 2.0, 3.0, 5.0};
        }
        const auto cells = outOfSample ? validate_out_of_sample_bound({ns}, lambdas, trials, seed)
                                       : validate_in_sample_bound({ns}, lambdas, trials, seed);
        for (const ValidationCell& cell : cells) {
            const bool valid = cell.lambda > validityFloor;
            std::cout << "  ns=" << cell.sampleCount << " lambda=" << num(cell.lambda)
                      << " empirical=" << num(cell.empirical) << " bound=" << num(cell.bound)
                      << " threshold=" << num(cell.threshold) << " -> "
                      << to_string(cell.status) << "\n";
            if (valid) {
                check.expect(cell.status == CellStatus::Pass,
                             "cell (" + std::to_string(cell.sampleCount) + ", " +
                                 num(cell.lambda) + ") did not pass");
                check.expect(cell.empirical <= cell.threshold,
                             "empirical tail above threshold in cell (" +
                                 std::to_string(cell.sampleCount) + ", " + num(cell.lambda) +
                                 ")");
            } else {
                check.expect(cell.status == CellStatus::InvalidLambda,
                             "cell below the validity floor was not flagged invalid");
            }
        }
    }
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: shape of the sample tail bound.
// ---------------------------------------------------------------------------

bool criterion3() {
    Check check;
    for (const std::int64_t ns : {4LL, 10LL, 100LL, 10000LL, 1000000LL}) {
        const BoundContext ctx(ns);
        const double theta = inflection_theta(ctx);
        const double floor = lambda_min(ctx);
        std::cout << "  ns=" << ns << " lambda_min=" << num(floor) << " theta=" << num(theta)
                  << "\n";
        check.expect(floor >= theta, "lambda_min < theta at ns=" + std::to_string(ns));

        // Strict decrease and discrete convexity on a grid beyond theta.
        const double h = 0.02;
        double prev = f(ctx, theta + h);
        double prevprev = std::numeric_limits<double>::quiet_NaN();
        for (int j = 2; j <= 400; ++j) {
            const double value = f(ctx, theta + j * h);
            check.expect(value < prev, "f not strictly decreasing at ns=" +
                                           std::to_string(ns) + ", lambda=" +
                                           num(theta + j * h));
            if (j >= 3) {
                const double secondDiff = value - 2.0 * prev + prevprev;
                check.expect(secondDiff >= -1e-14,
                             "f not discretely convex at ns=" + std::to_string(ns) +
                                 ", lambda=" + num(theta + (j - 1) * h));
            }
            prevprev = prev;
            prev = value;
        }

        // Analytic derivatives against central finite differences.
        for (const double lambda : {theta + 0.5, 2.0, 3.0, 5.0, 8.0}) {
            if (lambda <= theta) continue;
            const double h1 = 1e-6 * std::max(1.0, lambda);
            const double fd1 = (f(ctx, lambda + h1) - f(ctx, lambda - h1)) / (2.0 * h1);
            const double an1 = f_prime(ctx, lambda);
            check.expect(std::abs(fd1 - an1) <= 1e-6 * std::max(1.0, std::abs(an1)),
                         "first derivative mismatch at ns=" + std::to_string(ns) +
                             ", lambda=" + num(lambda) + " (fd " + num(fd1) + " vs " +
                             num(an1) + ")");
            const double h2 = 1e-4 * std::max(1.0, lambda);
            const double fd2 =
                (f(ctx, lambda + h2) - 2.0 * f(ctx, lambda) + f(ctx, lambda - h2)) / (h2 * h2);
            const double an2 = f_second(ctx, lambda);
            check.expect(std::abs(fd2 - an2) <= 1e-6 * std::max(1.0, std::abs(an2)),
                         "second derivative mismatch at ns=" + std::to_string(ns) +
                             ", lambda=" + num(lambda) + " (fd " + num(fd2) + " vs " +
                             num(an2) + ")");
        }
    }
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: one-sample incremental statistics equal batch statistics at
// every prefix of a random stream.
// ---------------------------------------------------------------------------

bool criterion4() {
    Check check;
    std::mt19937_64 gen(44);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index dim = 3;
    MatrixXd stream(50, dim);
    for (Eigen::Index i = 0; i < stream.rows(); ++i)
        for (Eigen::Index j = 0; j < dim; ++j) stream(i, j) = normal(gen);

    SampleStatistics incremental;
    incremental.mean = stream.row(0).transpose();
    incremental.covariance = MatrixXd::Zero(dim, dim);
    incremental.count = 1;
    double worst = 0.0;
    for (Eigen::Index i = 1; i < stream.rows(); ++i) {
        incremental = incremental_update(incremental, stream.row(i).transpose());
        const SampleStatistics batch =
            compute_statistics(SampleSet::unchecked(stream.topRows(i + 1)));
        const double meanErr =
            (incremental.mean - batch.mean).norm() / std::max(1.0, batch.mean.norm());
        const double covErr = (incremental.covariance - batch.covariance).norm() /
                              std::max(1.0, batch.covariance.norm());
        worst = std::max({worst, meanErr, covErr});
        check.expect(meanErr <= 1e-12, "mean mismatch at prefix " + std::to_string(i + 1));
        check.expect(covErr <= 1e-12,
                     "covariance mismatch at prefix " + std::to_string(i + 1));
        check.expect(incremental.count == i + 1, "count mismatch");
    }
    std::cout << "  49 prefixes, worst relative deviation " << num(worst) << "\n";
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criterion 5: stacked propagation equals the step recursion on random
// systems.
// ---------------------------------------------------------------------------

bool criterion5() {
    Check check;
    std::mt19937_64 gen(55);
    std::uniform_int_distribution<int> pickN(1, 4);
    std::uniform_int_distribution<int> pickHorizon(1, 6);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = pickN(gen);
        const int m = pickN(gen);
        const int N = pickHorizon(gen);
        LtiSystem sys;
        sys.A = MatrixXd::NullaryExpr(n, n, [&] { return uniform(gen); });
        sys.B = MatrixXd::NullaryExpr(n, m, [&] { return uniform(gen); });
        const VectorXd x0 = VectorXd::NullaryExpr(n, [&] { return uniform(gen); });
        const VectorXd U = VectorXd::NullaryExpr(static_cast<Eigen::Index>(m) * N,
                                                 [&] { return uniform(gen); });
        const VectorXd W =
            VectorXd::NullaryExpr(static_cast<Eigen::Index>(n) * N, [&] { return uniform(gen); });

        const ConcatenatedDynamics cd = concatenate(sys, N);
        VectorXd x = x0;
        for (int k = 1; k <= N; ++k) {
            x = sys.A * x + sys.B * U.segment(static_cast<Eigen::Index>(k - 1) * m, m) +
                W.segment(static_cast<Eigen::Index>(k - 1) * n, n);
            const VectorXd stacked = propagate_mean(cd, x0, U, W, k);
            const double err = (stacked - x).norm() / std::max(1.0, x.norm());
            worst = std::max(worst, err);
            check.expect(err <= 1e-10, "mismatch at system " + std::to_string(trial) +
                                           ", step " + std::to_string(k) + " (err " +
                                           num(err) + ")");
        }
    }
    std::cout << "  100 systems, worst relative deviation " << num(worst) << "\n";
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: scenario sample-count formula.
// ---------------------------------------------------------------------------

bool criterion6() {
    Check check;
    const std::int64_t count = scenario_sample_count(0.05, 1e-8, 15);
    std::cout << "  scenario_sample_count(0.05, 1e-8, 15) = " << count << "\n";
    check.expect(count == 1337, "expected 1337, got " + std::to_string(count));
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criteria 7-8 solve helpers (shared with criterion 10).
// ---------------------------------------------------------------------------

struct SolvedCase {
    std::string label;
    SmoothProgram program;
    Solution solution;
};

struct DemoSeedRun {
    std::uint64_t seed = 0;
    Solution proposed;
    Solution scenario;
    SmoothProgram proposedProgram;
    SmoothProgram scenarioProgram;
};

std::vector<DemoSeedRun> demo_seed_runs(const ProblemSpec& problem, const GaussianModel& model) {
    std::vector<DemoSeedRun> runs;
    for (const std::uint64_t seed : {101ULL, 202ULL, 303ULL, 404ULL, 505ULL}) {
        GaussianModel seeded = model;
        seeded.seed = seed;
        const SampleSet samples = generate_samples(seeded, 1337);
        DemoSeedRun run;
        run.seed = seed;
        const ReformulatedProgram prop =
            build_proposed(problem, compute_statistics(samples), BoundContext(samples.count()));
        run.proposedProgram = lower(prop);
        run.proposed = solve_proposed(prop);
        const ScenarioProgram scen = build_scenario(problem, samples);
        run.scenarioProgram = lower(scen);
        run.scenario = solve_scenario(scen);
        runs.push_back(std::move(run));
    }
    return runs;
}

struct MomentsRun {
    Solution proposed;
    Solution knownMoments;
    SmoothProgram proposedProgram;
    SmoothProgram knownMomentsProgram;
};

MomentsRun moments_run(const ProblemSpec& problem, const GaussianModel& model) {
    GaussianModel seeded = model;
    seeded.seed = 777;
    const SampleSet samples = generate_samples(seeded, 5000);
    MomentsRun run;
    const ReformulatedProgram prop =
        build_proposed(problem, compute_statistics(samples), BoundContext(samples.count()));
    run.proposedProgram = lower(prop);
    run.proposed = solve_proposed(prop);
    const ReformulatedProgram known = build_osvpi(problem, model);
    run.knownMomentsProgram = lower(known);
    run.knownMoments = solve_proposed(known);
    return run;
}

bool criterion7() {
    Check check;
    const ProblemSpec problem = make_cwh_problem();
    const GaussianModel model = cwh_demo_model();
    const double reference = 9.61e-4;
    for (const DemoSeedRun& run : demo_seed_runs(problem, model)) {
        check.expect(run.proposed.status == SolveStatus::Optimal,
                     "proposed solve not optimal at seed " + std::to_string(run.seed));
        check.expect(run.scenario.status == SolveStatus::Optimal,
                     "scenario solve not optimal at seed " + std::to_string(run.seed));
        const CertificationReport certProp =
            certify(problem, run.proposed.U, model, 100000, run.seed * 7 + 1);
        const CertificationReport certScen =
            certify(problem, run.scenario.U, model, 100000, run.seed * 7 + 2);
        std::cout << "  seed=" << run.seed << " proposed cost=" << num(run.proposed.cost)
                  << " sat=" << std::setprecision(6) << certProp.jointSatisfaction
                  << " | scenario cost=" << num(run.scenario.cost)
                  << " sat=" << certScen.jointSatisfaction
                  << " | solve s: " << num(run.proposed.solveSeconds) << " vs "
                  << num(run.scenario.solveSeconds) << "\n";
        check.expect(certProp.jointSatisfaction == 1.0,
                     "proposed certification below 1.0 at seed " + std::to_string(run.seed));
        check.expect(certScen.jointSatisfaction >= 0.99,
                     "scenario certification below 0.99 at seed " + std::to_string(run.seed));
        check.expect(run.proposed.cost > run.scenario.cost,
                     "cost ordering violated at seed " + std::to_string(run.seed));
        check.expect(run.proposed.cost >= 0.8 * reference &&
                         run.proposed.cost <= 1.2 * reference,
                     "proposed cost outside the 20% band at seed " + std::to_string(run.seed));
        check.expect(run.proposed.solveSeconds < run.scenario.solveSeconds,
                     "proposed solve not faster than scenario at seed " +
                         std::to_string(run.seed));
    }
    return check.ok;
}

bool criterion8() {
    Check check;
    const ProblemSpec problem = make_cwh_problem();
    const GaussianModel model = cwh_demo_model();
    const MomentsRun run = moments_run(problem, model);
    check.expect(run.proposed.status == SolveStatus::Optimal, "sample-based solve not optimal");
    check.expect(run.knownMoments.status == SolveStatus::Optimal,
                 "known-moments solve not optimal");
    const CertificationReport certProp = certify(problem, run.proposed.U, model, 100000, 991);
    const CertificationReport certKnown =
        certify(problem, run.knownMoments.U, model, 100000, 992);
    const double gap = run.proposed.cost / run.knownMoments.cost - 1.0;
    std::cout << "  sample-based cost=" << num(run.proposed.cost)
              << " sat=" << certProp.jointSatisfaction
              << " | known-moments cost=" << num(run.knownMoments.cost)
              << " sat=" << certKnown.jointSatisfaction << " | cost gap=" << num(100.0 * gap)
              << "%\n";
    check.expect(certProp.jointSatisfaction >= 0.99995, "sample-based certification not 1.0000");
    check.expect(certKnown.jointSatisfaction >= 0.99995,
                 "known-moments certification not 1.0000");
    check.expect(gap <= 0.10, "cost gap above 10%");
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criterion 9: random feasible instances certify at their risk level.
// ---------------------------------------------------------------------------

struct RandomInstance {
    ProblemSpec problem;
    GaussianModel model;
    Solution solution;
    SmoothProgram program;
};

RandomInstance make_random_instance(int index) {
    std::mt19937_64 gen(909090ULL + static_cast<std::uint64_t>(index));
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int n = 1 + static_cast<int>(unit(gen) * 3.999);
    const int m = 1 + static_cast<int>(unit(gen) * (n - 0.001));
    const int N = 1 + static_cast<int>(unit(gen) * 3.999);
    const double alpha = 0.02 + 0.13 * unit(gen);

    ProblemSpec p;
    p.system.A = MatrixXd::NullaryExpr(n, n, [&] { return 0.8 * uniform(gen); });
    p.system.B = MatrixXd::NullaryExpr(n, m, [&] { return uniform(gen); });
    p.horizon = N;
    p.x0 = VectorXd::NullaryExpr(n, [&] { return uniform(gen); });
    p.inputLo = VectorXd::Constant(m, -1.0);
    p.inputHi = VectorXd::Constant(m, 1.0);
    p.alpha = alpha;

    const Eigen::Index stacked = static_cast<Eigen::Index>(n) * N;
    GaussianModel model;
    model.mean = VectorXd::NullaryExpr(stacked, [&] { return 0.02 * uniform(gen); });
    MatrixXd shape = MatrixXd::NullaryExpr(stacked, stacked, [&] { return normal(gen); });
    const double sigma0 = 0.005 + 0.015 * unit(gen);
    model.covariance =
        sigma0 * sigma0 *
        (shape * shape.transpose() / static_cast<double>(stacked) +
         0.25 * MatrixXd::Identity(stacked, stacked));
    model.seed = 313000ULL + static_cast<std::uint64_t>(index);

    // Random row directions; one or two rows at the final step plus one row at
    // each earlier step with probability one half.
    std::vector<std::pair<int, VectorXd>> rows;
    const auto randomDirection = [&] {
        VectorXd g = VectorXd::NullaryExpr(n, [&] { return normal(gen); });
        if (g.norm() < 1e-8) g = VectorXd::Unit(n, 0);
        return VectorXd(g / g.norm());
    };
    for (int k = 1; k < N; ++k)
        if (unit(gen) < 0.5) rows.emplace_back(k, randomDirection());
    const int finalRows = 1 + (unit(gen) < 0.5 ? 1 : 0);
    for (int r = 0; r < finalRows; ++r) rows.emplace_back(N, randomDirection());
    const auto M = static_cast<std::int64_t>(rows.size());

    // Sample budget comfortably above the gate, then margins wide enough that
    // the target input remains feasible under sample-estimated deviations.
    const std::int64_t sampleCount = 2 * std::max<std::int64_t>(4, min_samples(M, alpha));
    const BoundContext ctx(sampleCount);
    const double perRow = std::min(std::max(alpha / (2.0 * static_cast<double>(M)),
                                            1.5 * f_asymptote(ctx)),
                                   0.99 / 6.0);
    const double lambdaStar = f_inverse(ctx, perRow);

    VectorXd uTarget(static_cast<Eigen::Index>(m) * N);
    for (Eigen::Index i = 0; i < uTarget.size(); ++i) uTarget[i] = 0.3 * uniform(gen);
    const ConcatenatedDynamics cd = concatenate(p.system, N);
    for (const auto& [k, g] : rows) {
        const VectorXd meanState = cd.power(k) * p.x0 + cd.C(k) * uTarget +
                                   cd.D(k) * model.mean.head(stacked);
        const MatrixXd dk = cd.D(k);
        const double sigmaRow = std::sqrt(
            std::max(0.0, (g.transpose() * dk * model.covariance * dk.transpose() * g)(0)));
        const double margin = (lambdaStar + 0.5) * sigmaRow * 1.15 + 0.05;
        StepPolytope& poly = p.target.perStep[k];
        if (poly.G.rows() == 0) {
            poly.G = MatrixXd::Zero(0, n);
            poly.h = VectorXd::Zero(0);
        }
        poly.G.conservativeResize(poly.G.rows() + 1, n);
        poly.G.row(poly.G.rows() - 1) = g.transpose();
        poly.h.conservativeResize(poly.h.size() + 1);
        poly.h[poly.h.size() - 1] = g.dot(meanState) + margin;
    }
    p.validate();

    RandomInstance inst;
    inst.problem = p;
    inst.model = model;
    const SampleSet samples = generate_samples(model, sampleCount);
    const ReformulatedProgram prog =
        build_proposed(p, compute_statistics(samples), BoundContext(samples.count()));
    inst.program = lower(prog);
    inst.solution = solve_proposed(prog);
    return inst;
}

bool criterion9() {
    Check check;
    for (int i = 0; i < 20; ++i) {
        const RandomInstance inst = make_random_instance(i);
        check.expect(inst.solution.status == SolveStatus::Optimal,
                     "instance " + std::to_string(i) + " did not solve to optimality");
        if (inst.solution.status != SolveStatus::Optimal) continue;
        const CertificationReport report =
            certify(inst.problem, inst.solution.U, inst.model, 100000,
                    777000ULL + static_cast<std::uint64_t>(i));
        const double required =
            1.0 - inst.problem.alpha - 3.0 * report.standardError;
        std::cout << "  instance " << i << ": alpha=" << num(inst.problem.alpha)
                  << " satisfaction=" << report.jointSatisfaction
                  << " required>=" << num(required) << "\n";
        check.expect(report.jointSatisfaction >= required,
                     "instance " + std::to_string(i) + " certifies below its risk level");
    }
    return check.ok;
}

// ---------------------------------------------------------------------------
// Criterion 10: independent KKT residuals on every optimal solution produced
// by criteria 7-9.
// ---------------------------------------------------------------------------

bool criterion10() {
    Check check;
    std::vector<SolvedCase> cases;
    const ProblemSpec problem = make_cwh_problem();
    const GaussianModel model = cwh_demo_model();
    for (DemoSeedRun& run : demo_seed_runs(problem, model)) {
        cases.push_back({"demo seed " + std::to_string(run.seed) + " proposed",
                         std::move(run.proposedProgram), std::move(run.proposed)});
        cases.push_back({"demo seed " + std::to_string(run.seed) + " scenario",
                         std::move(run.scenarioProgram), std::move(run.scenario)});
    }
    {
        MomentsRun run = moments_run(problem, model);
        cases.push_back({"demo 5000-sample proposed", std::move(run.proposedProgram),
                         std::move(run.proposed)});
        cases.push_back({"demo known-moments", std::move(run.knownMomentsProgram),
                         std::move(run.knownMoments)});
    }
    for (int i = 0; i < 20; ++i) {
        RandomInstance inst = make_random_instance(i);
        cases.push_back({"random instance " + std::to_string(i), std::move(inst.program),
                         std::move(inst.solution)});
    }

    for (const SolvedCase& c : cases) {
        check.expect(c.solution.status == SolveStatus::Optimal,
                     c.label + " did not solve to optimality");
        if (c.solution.status != SolveStatus::Optimal) continue;
        const KktResiduals kkt = kkt_residuals(c.program, c.solution.full_point());
        const double worst =
            std::max({kkt.primal, kkt.stationarity, kkt.complementarity});
        std::cout << "  " << c.label << ": primal=" << num(kkt.primal)
                  << " stationarity=" << num(kkt.stationarity)
                  << " complementarity=" << num(kkt.complementarity) << "\n";
        check.expect(worst <= 1e-6, c.label + " residual above 1e-6");
    }
    std::cout << "  " << cases.size() << " solutions checked\n";
    return check.ok;
}

struct Criterion {
    const char* title;
    bool (*run)();
};

bool criterion1() { return battery(true); }
bool criterion2() { return battery(false); }

const Criterion kCriteria[10] = {
    {"out-of-sample tail-bound validity battery", criterion1},
    {"in-sample tail-bound validity battery", criterion2},
    {"tail-bound shape: monotonicity, convexity, derivatives", criterion3},
    {"incremental statistics match batch statistics", criterion4},
    {"stacked propagation matches the step recursion", criterion5},
    {"scenario sample-count formula", criterion6},
    {"rendezvous demo: sample-based vs scenario comparison", criterion7},
    {"rendezvous demo: sample-based vs known-moments comparison", criterion8},
    {"safety property on random feasible instances", criterion9},
    {"independent KKT residuals on all optimal solves", criterion10},
};

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <criterion 1..10>\n";
        return 4;
    }
    const int index = std::atoi(argv[1]);
    if (index < 1 || index > 10) {
        std::cerr << "criterion must be in 1..10\n";
        return 4;
    }
    const Criterion& c = kCriteria[index - 1];
    std::cout << "criterion " << index << ": " << c.title << "\n";
    bool ok = false;
    try {
        ok = c.run();
    } catch (const std::exception& e) {
        std::cout << "  unexpected exception: " << e.what() << "\n";
        ok = false;
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << index << ": " << c.title
              << "\n";
    return ok ? 0 : 1;
}
