#pragma once
// Monte-Carlo certification of a solved input plan against a disturbance
// model, plus the empirical validation battery for the one-sided tail bounds.
//
// Determinism contract: every Monte-Carlo trial consumes its own random
// substream derived from (seed, trial index), so reports are bitwise
// identical for any worker count or batching.  The CCSTAT_THREADS environment
// variable caps the number of worker threads (default: hardware concurrency).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccstat/concentration.hpp"
#include "ccstat/dynamics.hpp"
#include "ccstat/errors.hpp"
#include "ccstat/problem.hpp"
#include "ccstat/rng.hpp"
#include "ccstat/sampling.hpp"

namespace ccstat {

namespace detail {

// Worker-thread budget: hardware concurrency, overridable by CCSTAT_THREADS.
inline int thread_budget() {
    int budget = static_cast<int>(std::thread::hardware_concurrency());
    if (budget < 1) budget = 1;
    if (const char* env = std::getenv("CCSTAT_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && parsed >= 1)
            budget = static_cast<int>(std::min<long>(parsed, 256));
    }
    return budget;
}

inline int plan_workers(std::int64_t total) {
    return static_cast<int>(
        std::min<std::int64_t>(thread_budget(), std::max<std::int64_t>(total, 1)));
}

// Runs fn(worker, first, last) over a contiguous partition of [0, total) on
// `workers` threads.  fn must only write worker-local state; per-item
// substreams make the result independent of the partition.
template <typename Fn>
void run_partitioned(std::int64_t total, int workers, const Fn& fn) {
    if (workers <= 1) {
        fn(0, std::int64_t{0}, total);
        return;
    }
    const std::int64_t chunk = (total + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const std::int64_t first = static_cast<std::int64_t>(w) * chunk;
        const std::int64_t last = std::min<std::int64_t>(total, first + chunk);
        if (first >= last) break;
        pool.emplace_back([&fn, w, first, last] { fn(w, first, last); });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

// ------------------------------------------------------------ certification

// Result of an empirical certification run.
struct CertificationReport {
    std::int64_t trials = 0;
    double jointSatisfaction = 0.0;
    // (step k, row index within that step's polytope) -> violation fraction.
    std::map<std::pair<int, int>, double> perRowViolation;
    double standardError = 0.0; // binomial standard error of jointSatisfaction
    std::uint64_t seed = 0;
};

// Draws `trials` fresh stacked disturbances from `model`, propagates the
// closed-form state response under the fixed plan U, and tests containment in
// every target half-space at every constrained step.  A trial satisfies the
// joint constraint iff all rows hold; boundary hits count as satisfied.
inline CertificationReport certify(const ProblemSpec& problem, const VectorXd& U,
                                   const GaussianModel& model, std::int64_t trials,
                                   std::uint64_t seed) {
    problem.validate();
    if (trials < 1)
        throw StructuralError("trials",
                              "trial count must be >= 1, got " + std::to_string(trials));
    if (U.size() != problem.input_dims())
        throw StructuralError("shape", "stacked input has length " + std::to_string(U.size()) +
                                           ", expected " + std::to_string(problem.input_dims()));
    const ConcatenatedDynamics cd = concatenate(problem.system, problem.horizon);
    const Eigen::Index wdim = cd.horizon() * cd.n();
    if (model.dim() != wdim)
        throw StructuralError("shape", "disturbance model dimension " +
                                           std::to_string(model.dim()) + " does not match " +
                                           std::to_string(wdim));
    for (Eigen::Index i = 0; i < U.size(); ++i) {
        const Eigen::Index channel = i % problem.system.m();
        if (U(i) < problem.inputLo(channel) - 1e-7 || U(i) > problem.inputHi(channel) + 1e-7)
            throw StructuralError(
                "input-box", "input component " + std::to_string(i) + " = " +
                                 std::to_string(U(i)) + " lies outside [" +
                                 std::to_string(problem.inputLo(channel)) + ", " +
                                 std::to_string(problem.inputHi(channel)) +
                                 "]; refusing to certify");
    }

    // Each target row reduces to a scalar test  base + proj . W <= cap.
    const Eigen::Index M = problem.target.total_rows();
    MatrixXd proj(M, wdim);
    VectorXd base(M), cap(M);
    std::vector<std::pair<int, int>> rowKey(static_cast<std::size_t>(M));
    Eigen::Index idx = 0;
    for (const auto& [k, poly] : problem.target.perStep) {
        const VectorXd freeResp = cd.power(k) * problem.x0 + cd.C(k) * U;
        for (Eigen::Index i = 0; i < poly.rows(); ++i) {
            proj.row(idx) = poly.G.row(i) * cd.D(k);
            base(idx) = poly.G.row(i).dot(freeResp);
            cap(idx) = poly.h(i);
            rowKey[static_cast<std::size_t>(idx)] = {k, static_cast<int>(i)};
            ++idx;
        }
    }
    const MatrixXd factor = gaussian_factor(model);

    const int workers = detail::plan_workers(trials);
    std::vector<std::int64_t> jointOk(static_cast<std::size_t>(workers), 0);
    std::vector<std::int64_t> anyViolated(static_cast<std::size_t>(workers), 0);
    std::vector<std::vector<std::int64_t>> rowViolated(
        static_cast<std::size_t>(workers),
        std::vector<std::int64_t>(static_cast<std::size_t>(M), 0));

    detail::run_partitioned(trials, workers, [&](int w, std::int64_t first, std::int64_t last) {
        VectorXd z(wdim), disturbance(wdim), value(M);
        auto& localRows = rowViolated[static_cast<std::size_t>(w)];
        std::int64_t localJoint = 0, localAny = 0;
        for (std::int64_t trial = first; trial < last; ++trial) {
            Substream stream(seed, static_cast<std::uint64_t>(trial));
            for (Eigen::Index j = 0; j < wdim; ++j) z(j) = stream.next_normal();
            disturbance.noalias() = factor * z;
            disturbance += model.mean;
            value = base;
            value.noalias() += proj * disturbance;
            bool all = true;
            for (Eigen::Index r = 0; r < M; ++r)
                if (value(r) > cap(r)) {
                    ++localRows[static_cast<std::size_t>(r)];
                    all = false;
                }
            if (all)
                ++localJoint;
            else
                ++localAny;
        }
        jointOk[static_cast<std::size_t>(w)] = localJoint;
        anyViolated[static_cast<std::size_t>(w)] = localAny;
    });

    std::int64_t satisfied = 0, violated = 0;
    std::vector<std::int64_t> rowCounts(static_cast<std::size_t>(M), 0);
    for (int w = 0; w < workers; ++w) {
        satisfied += jointOk[static_cast<std::size_t>(w)];
        violated += anyViolated[static_cast<std::size_t>(w)];
        for (Eigen::Index r = 0; r < M; ++r)
            rowCounts[static_cast<std::size_t>(r)] +=
                rowViolated[static_cast<std::size_t>(w)][static_cast<std::size_t>(r)];
    }
    // Conjunction counting and union counting must tile the trial set exactly.
    if (satisfied + violated != trials)
        throw std::logic_error("certification counters disagree");

    CertificationReport report;
    report.trials = trials;
    report.seed = seed;
    report.jointSatisfaction = static_cast<double>(satisfied) / static_cast<double>(trials);
    report.standardError = std::sqrt(report.jointSatisfaction *
                                     (1.0 - report.jointSatisfaction) /
                                     static_cast<double>(trials));
    for (Eigen::Index r = 0; r < M; ++r)
        report.perRowViolation[rowKey[static_cast<std::size_t>(r)]] =
            static_cast<double>(rowCounts[static_cast<std::size_t>(r)]) /
            static_cast<double>(trials);
    return report;
}

// ------------------------------------------------- tail-bound validation ----

enum class CellStatus { Pass, Fail, InvalidLambda };

inline std::string to_string(CellStatus status) {
    switch (status) {
    case CellStatus::Pass: return "pass";
    case CellStatus::Fail: return "fail";
    case CellStatus::InvalidLambda: return "invalid-lambda";
    }
    return "unknown";
}

// One (sample count, lambda) cell of a validation table.  Cells whose lambda
// lies at or below the bound's validity threshold carry InvalidLambda and NaN
// numerics: the guarantee does not apply there, so no experiment is run.
struct ValidationCell {
    std::int64_t sampleCount = 0;
    double lambda = 0.0;
    double empirical = std::numeric_limits<double>::quiet_NaN();
    double bound = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN(); // bound + 3 sigma
    CellStatus status = CellStatus::InvalidLambda;
};

namespace detail {

// Shared Monte-Carlo kernel for the two validation batteries.  Per trial it
// draws `ns` standard normal samples (plus one fresh point for the
// out-of-sample variant), forms the ML mean/std, and counts tail hits
//   tested - mean >= lambda * std.
// Trial `i` of cell `c` always uses substream (seed, c * 2^32 + i).
inline double tail_hit_fraction(std::int64_t ns, double lambda, bool outOfSample,
                                std::int64_t trials, std::uint64_t seed,
                                std::uint64_t cellIndex) {
    const int workers = plan_workers(trials);
    std::vector<std::int64_t> hits(static_cast<std::size_t>(workers), 0);
    run_partitioned(trials, workers, [&](int w, std::int64_t first, std::int64_t last) {
        std::int64_t localHits = 0;
        for (std::int64_t trial = first; trial < last; ++trial) {
            Substream stream(seed, (cellIndex << 32) | static_cast<std::uint64_t>(trial));
            double sum = 0.0, sumSq = 0.0, firstDraw = 0.0;
            for (std::int64_t j = 0; j < ns; ++j) {
                const double x = stream.next_normal();
                if (j == 0) firstDraw = x;
                sum += x;
                sumSq += x * x;
            }
            const double mean = sum / static_cast<double>(ns);
            const double var = std::max(0.0, sumSq / static_cast<double>(ns) - mean * mean);
            const double dev = std::sqrt(var);
            const double tested = outOfSample ? stream.next_normal() : firstDraw;
            if (tested - mean >= lambda * dev) ++localHits;
        }
        hits[static_cast<std::size_t>(w)] = localHits;
    });
    std::int64_t total = 0;
    for (const auto h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(trials);
}

inline void require_validation_trials(std::int64_t trials) {
    if (trials < 1)
        throw StructuralError("trials",
                              "trial count must be >= 1, got " + std::to_string(trials));
    if (trials > (std::int64_t{1} << 32))
        throw StructuralError("trials", "at most 2^32 trials per validation cell");
}

inline ValidationCell finish_cell(ValidationCell cell, double bound, double empirical,
                                  std::int64_t trials) {
    cell.bound = bound;
    cell.empirical = empirical;
    cell.threshold =
        bound + 3.0 * std::sqrt(bound * (1.0 - bound) / static_cast<double>(trials));
    cell.status = empirical <= cell.threshold ? CellStatus::Pass : CellStatus::Fail;
    return cell;
}

} // namespace detail

// Out-of-sample validation of the sample-based tail bound: per trial, `ns`
// samples feed the ML statistics and one additional fresh point is tested.
// The empirical tail fraction must stay below the bound plus three binomial
// standard errors.  Rows iterate sample counts, columns iterate lambdas.
inline std::vector<ValidationCell> validate_out_of_sample_bound(const std::vector<std::int64_t>& sampleCounts,
                                                     const std::vector<double>& lambdas,
                                                     std::int64_t trials, std::uint64_t seed) {
    detail::require_validation_trials(trials);
    std::vector<ValidationCell> table;
    table.reserve(sampleCounts.size() * lambdas.size());
    std::uint64_t cellIndex = 0;
    for (const auto ns : sampleCounts) {
        const BoundContext ctx(ns);
        ctx.require_unimodal_gate();
        const double floor = lambda_min(ctx);
        for (const double lambda : lambdas) {
            ValidationCell cell;
            cell.sampleCount = ns;
            cell.lambda = lambda;
            if (lambda > floor) {
                const double empirical =
                    detail::tail_hit_fraction(ns, lambda, /*outOfSample=*/true, trials,
                                              seed, cellIndex);
                cell = detail::finish_cell(cell, f(ctx, lambda), empirical, trials);
            }
            ++cellIndex;
            table.push_back(cell);
        }
    }
    return table;
}

// In-sample validation of the membership tail bound 4 / (9 (lambda^2 + 1)):
// the tested point is the first of the `ns` samples that feed the statistics.
inline std::vector<ValidationCell> validate_in_sample_bound(const std::vector<std::int64_t>& sampleCounts,
                                                   const std::vector<double>& lambdas,
                                                   std::int64_t trials, std::uint64_t seed) {
    detail::require_validation_trials(trials);
    const double floor = osvpi_lambda_floor();
    std::vector<ValidationCell> table;
    table.reserve(sampleCounts.size() * lambdas.size());
    std::uint64_t cellIndex = 0;
    for (const auto ns : sampleCounts) {
        if (ns < 2)
            throw GateError("insufficient-samples",
                            "in-sample validation requires at least 2 samples, got " +
                                std::to_string(ns));
        for (const double lambda : lambdas) {
            ValidationCell cell;
            cell.sampleCount = ns;
            cell.lambda = lambda;
            if (lambda > floor) {
                const double empirical =
                    detail::tail_hit_fraction(ns, lambda, /*outOfSample=*/false, trials,
                                              seed, cellIndex);
                cell = detail::finish_cell(cell, osvpi_bound(lambda), empirical, trials);
            }
            ++cellIndex;
            table.push_back(cell);
        }
    }
    return table;
}

} // namespace ccstat
