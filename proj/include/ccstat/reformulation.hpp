#pragma once
// Builders translating a planning problem plus disturbance information into
// solvable convex programs:
//   - build_proposed: per-row affine constraints with a deviation term scaled
//     by a risk variable, plus a shared tail-bound budget (sample statistics);
//   - build_osvpi:    the same structure with population moments and the
//     analytic unimodal tail bound;
//   - build_scenario: one hard constraint per (row, sample) pair.
// Also hosts the lowering to SmoothProgram and thin solve/report adapters.

#include <string>
#include <utility>
#include <vector>

#include "ccstat/concentration.hpp"
#include "ccstat/dynamics.hpp"
#include "ccstat/errors.hpp"
#include "ccstat/problem.hpp"
#include "ccstat/sampling.hpp"
#include "ccstat/solver.hpp"

namespace ccstat {

struct ReformRow {
    int step = 0;
    Eigen::Index rowInStep = 0;
    Eigen::RowVectorXd coefU;       // contribution of the stacked input
    double sigma = 0.0;             // deviation multiplier on the risk variable
    double rhs = 0.0;               // target offset minus propagated mean terms
    Eigen::Index lambdaIndex = -1;  // -1 marks a zero-deviation row
    std::string label;
};

struct ReformulatedProgram {
    Eigen::Index nU = 0;
    Eigen::Index nLambda = 0;
    std::vector<ReformRow> rows;
    double riskBudget = 0.0;
    double riskPreload = 0.0;  // asymptote charges from zero-deviation rows
    RiskMap map;
    double lambdaFloor = 0.0;
    VectorXd inputLo;  // horizon-stacked box bounds
    VectorXd inputHi;
    MatrixXd objectiveQ;
};

struct ScenarioGroup {
    int step = 0;
    Eigen::Index rowInStep = 0;
    Eigen::RowVectorXd coefU;
    VectorXd rhs;  // one entry per disturbance sample
    std::string label;
};

struct ScenarioProgram {
    Eigen::Index nU = 0;
    Eigen::Index sampleCount = 0;
    std::vector<ScenarioGroup> groups;
    VectorXd inputLo;
    VectorXd inputHi;
    MatrixXd objectiveQ;

    [[nodiscard]] Eigen::Index total_rows() const {
        Eigen::Index total = 0;
        for (const auto& g : groups) total += g.rhs.size();
        return total;
    }
};

namespace detail {

inline VectorXd replicate_bounds(const VectorXd& perStep, int horizon) {
    VectorXd out(perStep.size() * horizon);
    for (int k = 0; k < horizon; ++k)
        out.segment(k * perStep.size(), perStep.size()) = perStep;
    return out;
}

inline void probe_targets(const ProblemSpec& spec) {
    for (const auto& [step, poly] : spec.target.perStep)
        if (!polytope_nonempty(poly.G, poly.h))
            throw InfeasibleError("empty-target", "target polytope at step " +
                                                      std::to_string(step) +
                                                      " is empty");
}

inline std::string row_label(int step, Eigen::Index row) {
    return "target step " + std::to_string(step) + " row " + std::to_string(row);
}

// Smallest value of coef . U over the input box.
inline double box_min(const Eigen::RowVectorXd& coef, const VectorXd& lo,
                      const VectorXd& hi) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < coef.size(); ++j)
        total += coef(j) > 0.0 ? coef(j) * lo(j) : coef(j) * hi(j);
    return total;
}

// Shared row construction for the two moment-based methods.
inline ReformulatedProgram build_rows(const ProblemSpec& spec,
                                      const SampleStatistics& stats,
                                      const RiskMap& map) {
    auto cd = concatenate(spec.system, spec.horizon);
    ReformulatedProgram prog;
    prog.nU = spec.input_dims();
    prog.riskBudget = spec.alpha;
    prog.map = map;
    prog.lambdaFloor = map.floor;
    prog.inputLo = replicate_bounds(spec.inputLo, spec.horizon);
    prog.inputHi = replicate_bounds(spec.inputHi, spec.horizon);
    prog.objectiveQ = spec.objective_matrix();

    const VectorXd zeroU = VectorXd::Zero(prog.nU);
    for (const auto& [step, poly] : spec.target.perStep) {
        for (Eigen::Index i = 0; i < poly.rows(); ++i) {
            const auto [meanConst, dev] = scalar_projection_stats(
                stats, cd, spec.x0, zeroU, poly.G.row(i), step);
            ReformRow row;
            row.step = step;
            row.rowInStep = i;
            row.coefU = poly.G.row(i) * cd.C(step);
            row.sigma = dev;
            row.rhs = poly.h(i) - meanConst;
            row.label = row_label(step, i);
            if (dev > 0.0)
                row.lambdaIndex = prog.nLambda++;
            else
                prog.riskPreload += map.asymptote;

            // Reachability at the loosest admissible risk setting: the row can
            // only ever be met if some input in the box satisfies it with the
            // risk variable at its validity floor.
            const double best = box_min(row.coefU, prog.inputLo, prog.inputHi) +
                                dev * map.floor;
            if (best > row.rhs + 1e-12)
                throw InfeasibleError(
                    "unreachable-target",
                    row.label + " cannot be met by any admissible input (closest "
                                "approach misses by " +
                        std::to_string(best - row.rhs) + ")");
            prog.rows.push_back(std::move(row));
        }
    }
    return prog;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline ReformulatedProgram build_proposed(const ProblemSpec& spec,
                                          const SampleStatistics& stats,
                                          const BoundContext& ctx) {
    spec.validate();
    const Eigen::Index stacked = spec.system.n() * spec.horizon;
    if (stats.mean.size() != stacked || stats.covariance.rows() != stacked ||
        stats.covariance.cols() != stacked)
        throw StructuralError("shape", "disturbance statistics dimension " +
                                           std::to_string(stats.mean.size()) +
                                           " does not match horizon-stacked dimension " +
                                           std::to_string(stacked));
    if (stats.count != ctx.ns)
        throw StructuralError("sample-count",
                              "statistics cover " + std::to_string(stats.count) +
                                  " samples but the bound context expects " +
                                  std::to_string(ctx.ns));
    if (ctx.ns < 4)
        throw GateError("insufficient-samples",
                        "the sample tail bound requires at least 4 samples for "
                        "unimodality; got " + std::to_string(ctx.ns));
    const std::int64_t required =
        min_samples(static_cast<std::int64_t>(spec.target.total_rows()), spec.alpha);
    if (ctx.ns < required)
        throw GateError("insufficient-samples",
                        "risk budget " + std::to_string(spec.alpha) + " over " +
                            std::to_string(spec.target.total_rows()) +
                            " half-spaces requires at least " + std::to_string(required) +
                            " samples; got " + std::to_string(ctx.ns));
    detail::probe_targets(spec);
    return detail::build_rows(spec, stats, sample_risk_map(ctx));
}

inline ReformulatedProgram build_osvpi(const ProblemSpec& spec,
                                       const GaussianModel& model) {
    spec.validate();
    const Eigen::Index stacked = spec.system.n() * spec.horizon;
    if (model.dim() != stacked)
        throw StructuralError("shape", "disturbance model dimension " +
                                           std::to_string(model.dim()) +
                                           " does not match horizon-stacked dimension " +
                                           std::to_string(stacked));
    gaussian_factor(model);  // validates positive semidefiniteness
    detail::probe_targets(spec);
    SampleStatistics population{model.mean, model.covariance, 0};
    return detail::build_rows(spec, population, osvpi_risk_map());
}

inline ScenarioProgram build_scenario(const ProblemSpec& spec, const SampleSet& samples) {
    spec.validate();
    const Eigen::Index stacked = spec.system.n() * spec.horizon;
    if (samples.dim() != stacked)
        throw StructuralError("shape", "samples have dimension " +
                                           std::to_string(samples.dim()) +
                                           " but the stacked disturbance has dimension " +
                                           std::to_string(stacked));
    if (samples.count() < 1)
        throw StructuralError("sample-count", "scenario construction needs at least "
                                              "one sample");
    detail::probe_targets(spec);

    auto cd = concatenate(spec.system, spec.horizon);
    ScenarioProgram prog;
    prog.nU = spec.input_dims();
    prog.sampleCount = samples.count();
    prog.inputLo = detail::replicate_bounds(spec.inputLo, spec.horizon);
    prog.inputHi = detail::replicate_bounds(spec.inputHi, spec.horizon);
    prog.objectiveQ = spec.objective_matrix();

    for (const auto& [step, poly] : spec.target.perStep) {
        const VectorXd freeResp = cd.power(step) * spec.x0;
        for (Eigen::Index i = 0; i < poly.rows(); ++i) {
            ScenarioGroup g;
            g.step = step;
            g.rowInStep = i;
            g.coefU = poly.G.row(i) * cd.C(step);
            const double base = poly.G.row(i) * freeResp;
            const VectorXd projected =
                samples.matrix() * (poly.G.row(i) * cd.D(step)).transpose();
            g.rhs = VectorXd::Constant(samples.count(), poly.h(i) - base) - projected;
            g.label = detail::row_label(step, i);
            prog.groups.push_back(std::move(g));
        }
    }
    return prog;
}

// ---------------------------------------------------------------------------
// Lowering to the solver's program form
// ---------------------------------------------------------------------------

inline SmoothProgram lower(const ReformulatedProgram& prog) {
    SmoothProgram out;
    out.nz = prog.nU + prog.nLambda;
    out.Q = MatrixXd::Zero(out.nz, out.nz);
    out.Q.topLeftCorner(prog.nU, prog.nU) = prog.objectiveQ;
    out.c = VectorXd::Zero(out.nz);
    out.lb = VectorXd::Constant(out.nz, -std::numeric_limits<double>::infinity());
    out.ub = VectorXd::Constant(out.nz, std::numeric_limits<double>::infinity());
    out.lb.head(prog.nU) = prog.inputLo;
    out.ub.head(prog.nU) = prog.inputHi;
    // Closed approximation of the strict validity floor.
    out.lb.tail(prog.nLambda).setConstant(prog.lambdaFloor * (1.0 + 1e-9));

    for (const auto& row : prog.rows) {
        ConstraintGroup g;
        g.coef = Eigen::RowVectorXd::Zero(out.nz);
        g.coef.head(prog.nU) = row.coefU;
        if (row.lambdaIndex >= 0) g.coef(prog.nU + row.lambdaIndex) = row.sigma;
        g.rhs = VectorXd::Constant(1, row.rhs);
        g.label = row.label;
        out.groups.push_back(std::move(g));
    }
    if (prog.nLambda > 0) {
        RiskConstraint rc;
        rc.offset = prog.nU;
        rc.count = prog.nLambda;
        rc.budget = prog.riskBudget;
        rc.preload = prog.riskPreload;
        rc.map = prog.map;
        out.risk = rc;
    }
    return out;
}

inline SmoothProgram lower(const ScenarioProgram& prog) {
    SmoothProgram out;
    out.nz = prog.nU;
    out.Q = prog.objectiveQ;
    out.c = VectorXd::Zero(out.nz);
    out.lb = prog.inputLo;
    out.ub = prog.inputHi;
    for (const auto& g : prog.groups) {
        ConstraintGroup cg;
        cg.coef = g.coefU;
        cg.rhs = g.rhs;
        cg.label = g.label;
        out.groups.push_back(std::move(cg));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Solve / report adapters
// ---------------------------------------------------------------------------

inline Solution solve_proposed(const ReformulatedProgram& prog,
                               const SolverConfig& cfg = {}) {
    if (prog.nLambda == 0 && prog.riskPreload > prog.riskBudget) {
        Solution sol;
        sol.status = SolveStatus::Infeasible;
        sol.mostViolated = "risk budget: zero-deviation rows already load " +
                           std::to_string(prog.riskPreload) + " against budget " +
                           std::to_string(prog.riskBudget);
        sol.kkt.primal = prog.riskPreload - prog.riskBudget;
        return sol;
    }
    return solve_smooth(lower(prog), cfg);
}

inline Solution solve_scenario(const ScenarioProgram& prog,
                               const SolverConfig& cfg = {}) {
    return solve_smooth(lower(prog), cfg);
}

inline KktResiduals kkt_report(const ReformulatedProgram& prog, const Solution& sol) {
    return kkt_residuals(lower(prog), sol.full_point());
}

inline KktResiduals kkt_report(const ScenarioProgram& prog, const Solution& sol) {
    return kkt_residuals(lower(prog), sol.U);
}

} // namespace ccstat
