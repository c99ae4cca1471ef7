#pragma once
// Interior-point engine for the smooth convex programs built by the
// reformulation layer: quadratic objective, stacked affine rows, box bounds,
// and an optional convex risk-sum constraint over dedicated tail variables.
//
// A log-barrier method with Newton inner iterations is used throughout.
// Phase I relaxes only the affine rows (one shared slack, minimized); box
// bounds and the risk constraint stay inside the barrier, so iterates remain
// strictly feasible with respect to them at all times.  Problems whose
// feasible set has no strict interior are reported Infeasible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccstat/concentration.hpp"
#include "ccstat/dynamics.hpp"
#include "ccstat/errors.hpp"

namespace ccstat {

struct SolverConfig {
    double kktTol = 1e-8;
    int maxIter = 200;            // total Newton steps across both phases
    double barrierMuFactor = 10.0;
    double feasTol = 1e-9;

    void validate() const {
        if (!(kktTol > 0.0) || !(feasTol > 0.0) || maxIter < 1 ||
            !(barrierMuFactor > 1.0))
            throw StructuralError("solver-config",
                                  "tolerances must be positive, iteration cap at least "
                                  "1, and the barrier reduction factor above 1");
    }
};

enum class SolveStatus { Optimal, Infeasible, IterLimit };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterLimit: return "iteration-limit";
    }
    return "unknown";
}

struct KktResiduals {
    double primal = 0.0;           // max positive constraint violation
    double stationarity = 0.0;     // Lagrangian gradient norm
    double complementarity = 0.0;  // max dual * slack product
};

// A batch of affine inequality rows sharing one coefficient vector:
//   coef . z <= rhs(j)  for every j.
// Sample-wise constraint sets reuse one coefficient row with many right-hand
// sides, which keeps Hessian assembly at one rank-1 update per group.
struct ConstraintGroup {
    Eigen::RowVectorXd coef;
    VectorXd rhs;
    std::string label;

    [[nodiscard]] Eigen::Index rows() const { return rhs.size(); }
};

// Convex budget constraint  preload + sum_i map.value(z[offset + i]) <= budget
// over a contiguous block of risk variables.
struct RiskConstraint {
    Eigen::Index offset = 0;
    Eigen::Index count = 0;
    double budget = 0.0;
    double preload = 0.0;  // budget already consumed by zero-deviation rows
    RiskMap map;
};

struct SmoothProgram {
    Eigen::Index nz = 0;
    MatrixXd Q;   // objective z^T Q z ...
    VectorXd c;   // ... + c^T z
    std::vector<ConstraintGroup> groups;
    VectorXd lb;  // box bounds; +/-infinity marks an unbounded side
    VectorXd ub;
    std::optional<RiskConstraint> risk;
    VectorXd z0;  // optional start point (empty -> heuristic)

    [[nodiscard]] Eigen::Index total_rows() const {
        Eigen::Index total = 0;
        for (const auto& g : groups) total += g.rows();
        return total;
    }

    void validate() const {
        if (nz < 1) throw StructuralError("program", "no decision variables");
        if (Q.rows() != nz || Q.cols() != nz)
            throw StructuralError("program", "objective matrix dimension mismatch");
        if (c.size() != nz)
            throw StructuralError("program", "objective linear term dimension mismatch");
        if (lb.size() != nz || ub.size() != nz)
            throw StructuralError("program", "box bound dimension mismatch");
        for (Eigen::Index i = 0; i < nz; ++i) {
            const bool finiteLo = std::isfinite(lb(i));
            const bool finiteHi = std::isfinite(ub(i));
            if (finiteLo && finiteHi && !(ub(i) - lb(i) > 1e-12))
                throw GateError("degenerate-box",
                                "box for variable " + std::to_string(i) +
                                    " has no interior");
            if (finiteLo && finiteHi && lb(i) > ub(i))
                throw StructuralError("program", "crossed box bounds");
        }
        for (const auto& g : groups) {
            if (g.coef.size() != nz)
                throw StructuralError("program",
                                      "constraint row dimension mismatch in group \"" +
                                          g.label + "\"");
            if (g.rows() < 1)
                throw StructuralError("program", "empty constraint group \"" + g.label +
                                                     "\"");
            if (!g.coef.allFinite() || !g.rhs.allFinite())
                throw StructuralError("program", "non-finite constraint data in group \"" +
                                                     g.label + "\"");
        }
        if (risk) {
            if (risk->offset < 0 || risk->count < 1 ||
                risk->offset + risk->count > nz)
                throw StructuralError("program", "risk block out of range");
            if (!(risk->budget > 0.0) || risk->preload < 0.0)
                throw StructuralError("program", "risk budget must be positive");
        }
        if (z0.size() != 0 && z0.size() != nz)
            throw StructuralError("program", "start point dimension mismatch");
    }
};

struct Solution {
    VectorXd U;       // decision block before the risk variables
    VectorXd lambda;  // risk block (empty when the program has none)
    double cost = std::numeric_limits<double>::quiet_NaN();
    SolveStatus status = SolveStatus::Infeasible;
    KktResiduals kkt;
    double solveSeconds = 0.0;
    std::vector<double> outerObjectives;  // objective value after each outer pass
    std::string mostViolated;             // set when status is Infeasible

    [[nodiscard]] VectorXd full_point() const {
        VectorXd z(U.size() + lambda.size());
        z << U, lambda;
        return z;
    }
};

struct ViolationReport {
    double value = -std::numeric_limits<double>::infinity();
    std::string label;
};

// Largest signed constraint violation at z (positive means infeasible).
inline ViolationReport max_violation(const SmoothProgram& prog, const VectorXd& z) {
    ViolationReport worst;
    auto consider = [&worst](double v, const std::string& label) {
        if (v > worst.value) {
            worst.value = v;
            worst.label = label;
        }
    };
    for (const auto& g : prog.groups) {
        const double az = g.coef.dot(z);
        consider((az - g.rhs.array()).maxCoeff(), g.label);
    }
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        if (std::isfinite(prog.lb(i)))
            consider(prog.lb(i) - z(i), "lower bound on variable " + std::to_string(i));
        if (std::isfinite(prog.ub(i)))
            consider(z(i) - prog.ub(i), "upper bound on variable " + std::to_string(i));
    }
    if (prog.risk) {
        double load = prog.risk->preload;
        for (Eigen::Index i = 0; i < prog.risk->count; ++i)
            load += prog.risk->map.value(z(prog.risk->offset + i));
        consider(load - prog.risk->budget, "risk budget");
    }
    return worst;
}

// Inverts a decreasing risk map by bisection: returns lambda with
// map.value(lambda) = target, for target strictly between the asymptote and
// the value at the validity floor.
inline double risk_map_inverse(const RiskMap& map, double target) {
    const double lo0 = map.floor * (1.0 + 1e-9) + (map.floor == 0.0 ? 1e-12 : 0.0);
    if (!(target > map.asymptote))
        throw GateError("infeasible-target",
                        "requested risk level is at or below the asymptotic floor");
    if (!(target < map.value(lo0)))
        throw GateError("lambda-min-boundary",
                        "requested risk level is not reachable above the validity "
                        "threshold");
    double lo = lo0, hi = std::max(2.0 * lo0, 1.0);
    while (map.value(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e18)
            throw GateError("infeasible-target", "risk-map inversion failed to bracket");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (map.value(mid) > target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

struct BarrierTerms {
    bool feasible = false;
    double phi = std::numeric_limits<double>::infinity();
};

// Evaluates the barrier potential t*f0(z) - sum log(slacks); optionally
// accumulates gradient and Hessian.
inline BarrierTerms eval_barrier(const SmoothProgram& prog, const VectorXd& z, double t,
                                 VectorXd* grad, MatrixXd* hess) {
    BarrierTerms out;
    const double f0 = z.dot(prog.Q * z) + prog.c.dot(z);
    double phi = t * f0;
    if (grad) *grad = t * (2.0 * prog.Q * z + prog.c);
    if (hess) *hess = 2.0 * t * prog.Q;

    for (const auto& g : prog.groups) {
        const double az = g.coef.dot(z);
        const Eigen::ArrayXd s = g.rhs.array() - az;
        if ((s <= 0.0).any()) return out;
        phi -= s.log().sum();
        if (grad || hess) {
            const Eigen::ArrayXd inv = s.inverse();
            if (grad) grad->noalias() += inv.sum() * g.coef.transpose();
            if (hess)
                hess->noalias() +=
                    inv.square().sum() * (g.coef.transpose() * g.coef);
        }
    }
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        if (std::isfinite(prog.lb(i))) {
            const double s = z(i) - prog.lb(i);
            if (s <= 0.0) return out;
            phi -= std::log(s);
            if (grad) (*grad)(i) -= 1.0 / s;
            if (hess) (*hess)(i, i) += 1.0 / (s * s);
        }
        if (std::isfinite(prog.ub(i))) {
            const double s = prog.ub(i) - z(i);
            if (s <= 0.0) return out;
            phi -= std::log(s);
            if (grad) (*grad)(i) += 1.0 / s;
            if (hess) (*hess)(i, i) += 1.0 / (s * s);
        }
    }
    if (prog.risk) {
        const auto& rc = *prog.risk;
        double load = rc.preload;
        VectorXd primes(rc.count);
        for (Eigen::Index i = 0; i < rc.count; ++i) {
            const double lam = z(rc.offset + i);
            if (lam <= rc.map.theta)
                throw std::logic_error(
                    "risk variable left the convex region of the tail bound");
            load += rc.map.value(lam);
            if (grad || hess) primes(i) = rc.map.prime(lam);
        }
        const double slack = rc.budget - load;
        if (slack <= 0.0) return out;
        phi -= std::log(slack);
        if (grad)
            grad->segment(rc.offset, rc.count) += primes / slack;
        if (hess) {
            hess->block(rc.offset, rc.offset, rc.count, rc.count).noalias() +=
                primes * primes.transpose() / (slack * slack);
            for (Eigen::Index i = 0; i < rc.count; ++i)
                (*hess)(rc.offset + i, rc.offset + i) +=
                    rc.map.second(z(rc.offset + i)) / slack;
        }
    }
    out.feasible = true;
    out.phi = phi;
    return out;
}

// Longest step along d keeping every affine and box slack positive, with a
// 0.99 margin.  The nonlinear risk slack is guarded by the line search.
inline double max_step(const SmoothProgram& prog, const VectorXd& z, const VectorXd& d) {
    double alpha = 1.0;
    for (const auto& g : prog.groups) {
        const double ad = g.coef.dot(d);
        if (ad > 0.0) {
            const double sMin = g.rhs.minCoeff() - g.coef.dot(z);
            alpha = std::min(alpha, 0.99 * sMin / ad);
        }
    }
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        if (d(i) < 0.0 && std::isfinite(prog.lb(i)))
            alpha = std::min(alpha, 0.99 * (z(i) - prog.lb(i)) / (-d(i)));
        if (d(i) > 0.0 && std::isfinite(prog.ub(i)))
            alpha = std::min(alpha, 0.99 * (prog.ub(i) - z(i)) / d(i));
    }
    return alpha;
}

inline Eigen::Index count_barrier_terms(const SmoothProgram& prog) {
    Eigen::Index m = prog.total_rows();
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        if (std::isfinite(prog.lb(i))) ++m;
        if (std::isfinite(prog.ub(i))) ++m;
    }
    if (prog.risk) ++m;
    return m;
}

// Newton descent on the barrier potential at fixed t.  Returns false when the
// global Newton budget is exhausted.
inline bool center(const SmoothProgram& prog, VectorXd& z, double t, int& newtonUsed,
                   const SolverConfig& cfg,
                   const std::function<bool(const VectorXd&)>& earlyExit,
                   double decrementTol = 1e-10) {
    constexpr int innerCap = 60;
    VectorXd grad(prog.nz);
    MatrixXd hess(prog.nz, prog.nz);
    for (int it = 0; it < innerCap; ++it) {
        if (newtonUsed >= cfg.maxIter) return false;
        const auto terms = eval_barrier(prog, z, t, &grad, &hess);
        if (!terms.feasible)
            throw std::logic_error("barrier iterate left the feasible interior");

        VectorXd d;
        double decrement = -1.0;
        double ridge = 0.0;
        for (int tries = 0; tries < 20; ++tries) {
            MatrixXd H = hess;
            if (ridge > 0.0) H.diagonal().array() += ridge;
            Eigen::LDLT<MatrixXd> ldlt(H);
            if (ldlt.info() == Eigen::Success) {
                d = ldlt.solve(-grad);
                decrement = -grad.dot(d);
                if (d.allFinite() && decrement >= 0.0) break;
            }
            ridge = (ridge == 0.0) ? 1e-12 : ridge * 100.0;
        }
        if (!(decrement >= 0.0))
            throw std::logic_error("Newton system could not be stabilized");
        if (0.5 * decrement <= decrementTol) return true;

        ++newtonUsed;
        double alpha = max_step(prog, z, d);
        const double phi0 = terms.phi;
        const double slope = grad.dot(d);  // negative
        bool stepped = false;
        while (alpha > 1e-13) {
            const VectorXd trial = z + alpha * d;
            const auto trialTerms = eval_barrier(prog, trial, t, nullptr, nullptr);
            if (trialTerms.feasible && trialTerms.phi <= phi0 + 1e-4 * alpha * slope) {
                z = trial;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!stepped) return true;  // numerical floor: cannot improve further
        if (earlyExit && earlyExit(z)) return true;
    }
    return true;
}

// Strict feasibility with margin over the affine rows only (box and risk are
// maintained by the barrier).
inline double worst_row_violation(const SmoothProgram& prog, const VectorXd& z) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& g : prog.groups)
        worst = std::max(worst, g.coef.dot(z) - g.rhs.minCoeff());
    return worst;
}

inline VectorXd heuristic_start(const SmoothProgram& prog) {
    VectorXd z(prog.nz);
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        const bool finiteLo = std::isfinite(prog.lb(i));
        const bool finiteHi = std::isfinite(prog.ub(i));
        if (finiteLo && finiteHi)
            z(i) = 0.5 * (prog.lb(i) + prog.ub(i));
        else if (finiteLo)
            z(i) = prog.lb(i) + 1.0;
        else if (finiteHi)
            z(i) = prog.ub(i) - 1.0;
        else
            z(i) = 0.0;
    }
    return z;
}

// Re-targets the risk block so the budget constraint holds strictly:
// every risk variable is set to consume an equal share of 95% of the
// headroom above the asymptotic floor.
inline void reset_risk_block(const SmoothProgram& prog, VectorXd& z) {
    const auto& rc = *prog.risk;
    const double headroom =
        (rc.budget - rc.preload) / static_cast<double>(rc.count) - rc.map.asymptote;
    const double target = rc.map.asymptote + 0.95 * headroom;
    const double lam = risk_map_inverse(rc.map, target);
    for (Eigen::Index i = 0; i < rc.count; ++i) z(rc.offset + i) = lam;
}

} // namespace detail

// Solves the program with a two-phase log-barrier method.  Status Optimal
// means the barrier ran to the configured complementarity level; IterLimit
// returns the best iterate when the Newton budget runs out; Infeasible names
// the most violated constraint.
inline Solution solve_smooth(const SmoothProgram& prog, const SolverConfig& cfg = {}) {
    prog.validate();
    cfg.validate();
    const auto tic = std::chrono::steady_clock::now();

    Solution sol;
    auto finalize = [&](const VectorXd& z, SolveStatus status) {
        if (prog.risk) {
            sol.U = z.head(prog.risk->offset);
            sol.lambda = z.segment(prog.risk->offset, prog.risk->count);
        } else {
            sol.U = z.head(prog.nz);
            sol.lambda.resize(0);
        }
        sol.cost = z.dot(prog.Q * z) + prog.c.dot(z);
        sol.status = status;
        sol.solveSeconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
                .count();
        return sol;
    };

    // A budget at or below the risk map's asymptotic floor can never be met.
    if (prog.risk) {
        const auto& rc = *prog.risk;
        const double minimumLoad =
            rc.preload + static_cast<double>(rc.count) * rc.map.asymptote;
        if (rc.budget <= minimumLoad * (1.0 + 1e-12)) {
            sol.mostViolated =
                "risk budget: minimum achievable load " + std::to_string(minimumLoad) +
                " does not fit the budget " + std::to_string(rc.budget);
            sol.kkt.primal = minimumLoad - rc.budget;
            return finalize(detail::heuristic_start(prog), SolveStatus::Infeasible);
        }
    }

    VectorXd z = prog.z0.size() == prog.nz ? prog.z0 : detail::heuristic_start(prog);
    // Clamp into the open box so barrier terms are defined.
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        if (std::isfinite(prog.lb(i)) && std::isfinite(prog.ub(i))) {
            const double w = prog.ub(i) - prog.lb(i);
            z(i) = std::clamp(z(i), prog.lb(i) + 1e-3 * w, prog.ub(i) - 1e-3 * w);
        } else if (std::isfinite(prog.lb(i))) {
            z(i) = std::max(z(i), prog.lb(i) + 1e-9 * std::max(1.0, std::abs(prog.lb(i))));
        } else if (std::isfinite(prog.ub(i))) {
            z(i) = std::min(z(i), prog.ub(i) - 1e-9 * std::max(1.0, std::abs(prog.ub(i))));
        }
    }
    if (prog.risk) {
        double load = prog.risk->preload;
        for (Eigen::Index i = 0; i < prog.risk->count; ++i)
            load += prog.risk->map.value(z(prog.risk->offset + i));
        if (load >= prog.risk->budget) detail::reset_risk_block(prog, z);
    }

    int newtonUsed = 0;
    const double strictMargin = 1e-9;

    // ---------------------------------------------------------------- phase I
    if (!prog.groups.empty() &&
        detail::worst_row_violation(prog, z) >= -strictMargin) {
        SmoothProgram p1;
        p1.nz = prog.nz + 1;
        p1.Q = MatrixXd::Zero(p1.nz, p1.nz);
        p1.c = VectorXd::Zero(p1.nz);
        p1.c(prog.nz) = 1.0;  // minimize the shared relaxation slack
        p1.lb = VectorXd::Constant(p1.nz, -std::numeric_limits<double>::infinity());
        p1.ub = VectorXd::Constant(p1.nz, std::numeric_limits<double>::infinity());
        p1.lb.head(prog.nz) = prog.lb;
        p1.ub.head(prog.nz) = prog.ub;
        p1.groups.reserve(prog.groups.size());
        for (const auto& g : prog.groups) {
            ConstraintGroup relaxed;
            relaxed.coef.resize(p1.nz);
            relaxed.coef << g.coef, -1.0;
            relaxed.rhs = g.rhs;
            relaxed.label = g.label;
            p1.groups.push_back(std::move(relaxed));
        }
        p1.risk = prog.risk;

        VectorXd z1(p1.nz);
        z1.head(prog.nz) = z;
        z1(prog.nz) = detail::worst_row_violation(prog, z) + 1.0;

        auto feasibleNow = [&](const VectorXd& current) {
            return detail::worst_row_violation(prog, current.head(prog.nz)) <
                   -strictMargin;
        };

        double t = 1.0;
        const double m1 = static_cast<double>(detail::count_barrier_terms(p1));
        bool budgetLeft = true;
        while (budgetLeft && !feasibleNow(z1)) {
            budgetLeft = detail::center(p1, z1, t, newtonUsed, cfg, feasibleNow);
            if (feasibleNow(z1)) break;
            if (m1 / t <= 1e-6) break;  // converged while still infeasible
            t *= cfg.barrierMuFactor;
        }
        z = z1.head(prog.nz);
        if (!feasibleNow(z1)) {
            if (!budgetLeft) return finalize(z, SolveStatus::IterLimit);
            ViolationReport worst = max_violation(prog, z);
            sol.mostViolated = worst.label;
            sol.kkt.primal = std::max(0.0, worst.value);
            return finalize(z, SolveStatus::Infeasible);
        }
    }

    // --------------------------------------------------------------- phase II
    const double m = std::max<double>(1, detail::count_barrier_terms(prog));
    double t = 1.0;
    bool budgetLeft = true;
    for (;;) {
        budgetLeft = detail::center(prog, z, t, newtonUsed, cfg, nullptr);
        sol.outerObjectives.push_back(z.dot(prog.Q * z) + prog.c.dot(z));
        if (!budgetLeft) break;
        if (m / t <= cfg.kktTol) break;
        t *= cfg.barrierMuFactor;
    }
    // Polish the final centering with a tighter Newton stop so the returned
    // point supports an accurate multiplier reconstruction downstream.  The
    // solve already met the convergence test, so exhausting the remaining
    // Newton budget during the polish does not change the reported status.
    if (budgetLeft) detail::center(prog, z, t, newtonUsed, cfg, nullptr, 1e-13);

    VectorXd grad(prog.nz);
    const auto terms = detail::eval_barrier(prog, z, t, &grad, nullptr);
    sol.kkt.primal = std::max(0.0, max_violation(prog, z).value);
    sol.kkt.stationarity = terms.feasible ? grad.norm() / t : std::numeric_limits<double>::quiet_NaN();
    sol.kkt.complementarity = m / t;
    return finalize(z, budgetLeft ? SolveStatus::Optimal : SolveStatus::IterLimit);
}

// ---------------------------------------------------------------------------
// Independent optimality check: rebuilds candidate multipliers from problem
// data and the returned point alone.  One multiplier column is kept per
// constraint; since every row of a stacked group shares one normal, only the
// tightest row of a group can carry weight (any weight on a looser row has the
// same stationarity effect and strictly worse complementarity).  Multipliers
// solve a slack-penalized nonnegative least-squares problem
//     min ||gradF0 + A mu||^2 + sum_i (slack_i mu_i)^2,   mu >= 0,
// so constraints with visible slack are discouraged from carrying weight
// without any hard active-set cutoff, and the reported pair
// (stationarity, complementarity) is meaningful at near-degenerate optima.
// ---------------------------------------------------------------------------
inline KktResiduals kkt_residuals(const SmoothProgram& prog, const VectorXd& z) {
    KktResiduals out;
    out.primal = std::max(0.0, max_violation(prog, z).value);

    const VectorXd gradF0 = 2.0 * prog.Q * z + prog.c;
    const double scale = 1.0 + gradF0.norm();

    std::vector<VectorXd> normals;
    std::vector<double> slacks;
    for (const auto& g : prog.groups) {
        const double az = g.coef.dot(z);
        normals.push_back(g.coef.transpose());
        slacks.push_back(g.rhs.minCoeff() - az);
    }
    for (Eigen::Index i = 0; i < prog.nz; ++i) {
        if (std::isfinite(prog.lb(i))) {
            VectorXd n = VectorXd::Zero(prog.nz);
            n(i) = -1.0;
            normals.push_back(std::move(n));
            slacks.push_back(z(i) - prog.lb(i));
        }
        if (std::isfinite(prog.ub(i))) {
            VectorXd n = VectorXd::Zero(prog.nz);
            n(i) = 1.0;
            normals.push_back(std::move(n));
            slacks.push_back(prog.ub(i) - z(i));
        }
    }
    if (prog.risk) {
        const auto& rc = *prog.risk;
        double load = rc.preload;
        VectorXd n = VectorXd::Zero(prog.nz);
        for (Eigen::Index i = 0; i < rc.count; ++i) {
            const double lam = z(rc.offset + i);
            load += rc.map.value(lam);
            n(rc.offset + i) = rc.map.prime(lam);
        }
        normals.push_back(std::move(n));
        slacks.push_back(rc.budget - load);
    }

    if (normals.empty()) {
        out.stationarity = gradF0.norm() / scale;
        out.complementarity = 0.0;
        return out;
    }

    const auto nc = static_cast<Eigen::Index>(normals.size());
    VectorXd mu = VectorXd::Zero(nc);
    std::vector<Eigen::Index> active(static_cast<std::size_t>(nc));
    for (Eigen::Index k = 0; k < nc; ++k) active[static_cast<std::size_t>(k)] = k;

    // Backward active-set pass on the penalized least-squares problem: solve
    // on the current set, drop negative multipliers (all at once on the first
    // pass, then one most-negative per pass), stop when all are nonnegative.
    for (int pass = 0; pass < 200 && !active.empty(); ++pass) {
        const auto na = static_cast<Eigen::Index>(active.size());
        MatrixXd aug = MatrixXd::Zero(prog.nz + na, na);
        VectorXd target = VectorXd::Zero(prog.nz + na);
        target.head(prog.nz) = -gradF0;
        for (Eigen::Index k = 0; k < na; ++k) {
            const auto idx = active[static_cast<std::size_t>(k)];
            aug.col(k).head(prog.nz) = normals[static_cast<std::size_t>(idx)];
            aug(prog.nz + k, k) = std::max(0.0, slacks[static_cast<std::size_t>(idx)]);
        }
        const VectorXd muSub = aug.colPivHouseholderQr().solve(target);
        const double dropTol = -1e-9 * (1.0 + muSub.cwiseAbs().maxCoeff());

        if (pass == 0) {
            std::vector<Eigen::Index> kept;
            for (Eigen::Index k = 0; k < na; ++k)
                if (muSub(k) >= dropTol) kept.push_back(active[static_cast<std::size_t>(k)]);
            if (static_cast<Eigen::Index>(kept.size()) < na) {
                active = std::move(kept);
                continue;
            }
        }
        Eigen::Index worst = -1;
        double worstVal = dropTol;
        for (Eigen::Index k = 0; k < na; ++k)
            if (muSub(k) < worstVal) {
                worstVal = muSub(k);
                worst = k;
            }
        if (worst < 0) {
            for (Eigen::Index k = 0; k < na; ++k)
                mu(active[static_cast<std::size_t>(k)]) = std::max(0.0, muSub(k));
            break;
        }
        active.erase(active.begin() + worst);
    }

    VectorXd residual = gradF0;
    double comp = 0.0;
    for (Eigen::Index k = 0; k < nc; ++k) {
        residual += mu(k) * normals[static_cast<std::size_t>(k)];
        comp = std::max(comp, mu(k) * std::max(0.0, slacks[static_cast<std::size_t>(k)]));
    }
    out.stationarity = residual.norm() / scale;
    out.complementarity = comp;
    return out;
}

// Geometric emptiness probe for a polytope {x : G x <= h} intersected with a
// large bounding box.  Used to reject impossible target sets early.
inline bool polytope_nonempty(const MatrixXd& G, const VectorXd& h,
                              double boxRadius = 1e6) {
    if (G.rows() != h.size() || G.rows() < 1)
        throw StructuralError("polytope", "row-count mismatch");
    SmoothProgram probe;
    probe.nz = G.cols();
    probe.Q = MatrixXd::Zero(probe.nz, probe.nz);
    probe.c = VectorXd::Zero(probe.nz);
    probe.lb = VectorXd::Constant(probe.nz, -boxRadius);
    probe.ub = VectorXd::Constant(probe.nz, boxRadius);
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
        ConstraintGroup g;
        g.coef = G.row(i);
        g.rhs = VectorXd::Constant(1, h(i));
        g.label = "row " + std::to_string(i);
        probe.groups.push_back(std::move(g));
    }
    SolverConfig cfg;
    cfg.kktTol = 1e-6;
    return solve_smooth(probe, cfg).status != SolveStatus::Infeasible;
}

} // namespace ccstat
