#pragma once
// Planning-problem description: time-varying polytopic target sets, a box
// input set, a joint risk budget, and the bundled orbital rendezvous demo.

#include <map>
#include <utility>

#include "ccstat/dynamics.hpp"
#include "ccstat/errors.hpp"
#include "ccstat/sampling.hpp"

namespace ccstat {

// Half-space description G x <= h of one step's target polytope.
struct StepPolytope {
    MatrixXd G;
    VectorXd h;

    [[nodiscard]] Eigen::Index rows() const { return G.rows(); }
};

// Target polytopes keyed by time step (1-based; step 0 is the fixed initial
// state and cannot be constrained).
struct TargetSet {
    std::map<int, StepPolytope> perStep;

    [[nodiscard]] Eigen::Index total_rows() const {
        Eigen::Index total = 0;
        for (const auto& [step, poly] : perStep) total += poly.rows();
        return total;
    }

    void validate(Eigen::Index stateDim, int horizon) const {
        if (perStep.empty())
            throw StructuralError("target-set", "target set has no constrained steps");
        for (const auto& [step, poly] : perStep) {
            if (step < 1 || step > horizon)
                throw StructuralError("target-set",
                                      "target step " + std::to_string(step) +
                                          " outside horizon 1.." + std::to_string(horizon));
            if (poly.G.rows() != poly.h.size() || poly.G.rows() < 1)
                throw StructuralError("target-set",
                                      "row-count mismatch at step " + std::to_string(step));
            if (poly.G.cols() != stateDim)
                throw StructuralError("target-set",
                                      "half-space dimension mismatch at step " +
                                          std::to_string(step));
            if (!poly.G.allFinite() || !poly.h.allFinite())
                throw StructuralError("target-set",
                                      "non-finite entries at step " + std::to_string(step));
            for (Eigen::Index i = 0; i < poly.G.rows(); ++i)
                if (poly.G.row(i).norm() == 0.0)
                    throw StructuralError("target-set",
                                          "zero normal vector at step " +
                                              std::to_string(step) + ", row " +
                                              std::to_string(i));
        }
    }
};

// Full open-loop planning problem over a finite horizon.
struct ProblemSpec {
    LtiSystem system;
    int horizon = 0;
    VectorXd x0;
    VectorXd inputLo;  // componentwise bounds on each u(k)
    VectorXd inputHi;
    TargetSet target;
    double alpha = 0.0;  // joint violation budget
    MatrixXd objectiveQ; // cost U^T Q U; empty means identity

    [[nodiscard]] Eigen::Index input_dims() const {
        return static_cast<Eigen::Index>(horizon) * system.m();
    }

    void validate() const {
        system.validate();
        if (horizon < 1) throw StructuralError("problem", "horizon must be at least 1");
        if (x0.size() != system.n())
            throw StructuralError("problem", "initial state dimension mismatch");
        if (!x0.allFinite()) throw StructuralError("problem", "non-finite initial state");
        if (inputLo.size() != system.m() || inputHi.size() != system.m())
            throw StructuralError("problem", "input bound dimension mismatch");
        if (!inputLo.allFinite() || !inputHi.allFinite())
            throw StructuralError("problem", "non-finite input bounds");
        if ((inputLo.array() > inputHi.array()).any())
            throw StructuralError("problem", "input lower bound exceeds upper bound");
        if (!(alpha > 0.0) || !(alpha < 1.0 / 6.0))
            throw GateError("alpha-range",
                            "joint violation budget must lie strictly between 0 and 1/6; "
                            "got " + std::to_string(alpha));
        target.validate(system.n(), horizon);
        if (objectiveQ.size() != 0) {
            const Eigen::Index d = input_dims();
            if (objectiveQ.rows() != d || objectiveQ.cols() != d)
                throw StructuralError("problem", "objective matrix dimension mismatch");
            if (!objectiveQ.allFinite())
                throw StructuralError("problem", "non-finite objective matrix");
            if (!objectiveQ.isApprox(objectiveQ.transpose(), 1e-12))
                throw StructuralError("problem", "objective matrix must be symmetric");
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(objectiveQ);
            const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
            if (es.eigenvalues().minCoeff() < -1e-10 * scale)
                throw StructuralError("problem",
                                      "objective matrix must be positive semidefinite");
        }
    }

    [[nodiscard]] MatrixXd objective_matrix() const {
        if (objectiveQ.size() != 0) return objectiveQ;
        return MatrixXd::Identity(input_dims(), input_dims());
    }
};

// ---------------------------------------------------------------------------
// Bundled demo: deputy-satellite rendezvous in the relative orbital frame.
//
// The demo works in mean-motion-scaled coordinates: time is measured in units
// of 1/omega and velocities are scaled accordingly, which keeps positions,
// velocities, and the unit input box at comparable magnitudes.  The dynamics
// matrix is the relative-motion transition matrix at unit mean motion over
// the scaled sampling interval omega*dt, and the per-step impulse gains
// 1/(mass*omega) in the scaled velocity rows.
// ---------------------------------------------------------------------------

inline LtiSystem build_cwh_scaled(const CwhParameters& p) {
    p.validate();
    const double theta = p.omega() * p.dt;
    Eigen::Matrix<double, 6, 6> A = cwh_stm(1.0, theta);
    Eigen::Matrix<double, 6, 3> impulse = Eigen::Matrix<double, 6, 3>::Zero();
    impulse.block<3, 3>(3, 0) =
        Eigen::Matrix3d::Identity() / (p.mass * p.omega());
    return LtiSystem{MatrixXd(A), MatrixXd(A * impulse)};
}

// Line-of-sight cone rows |y| <= x/2, |z| <= x/2, x <= 10 used at every
// intermediate step of the demo.
inline StepPolytope demo_cone_polytope() {
    MatrixXd G(5, 6);
    G << -1.0, 0.0, 2.0, 0.0, 0.0, 0.0,   //  2z <= x
        -1.0, 2.0, 0.0, 0.0, 0.0, 0.0,    //  2y <= x
        -1.0, 0.0, -2.0, 0.0, 0.0, 0.0,   // -2z <= x
        -1.0, -2.0, 0.0, 0.0, 0.0, 0.0,   // -2y <= x
        1.0, 0.0, 0.0, 0.0, 0.0, 0.0;     //   x <= 10
    VectorXd h(5);
    h << 0.0, 0.0, 0.0, 0.0, 10.0;
    return StepPolytope{G, h};
}

// Terminal docking box: 0 <= x <= 2, |y| <= 1, |z| <= 1, each |v| <= 0.1.
inline StepPolytope demo_terminal_polytope() {
    MatrixXd G = MatrixXd::Zero(12, 6);
    for (int j = 0; j < 6; ++j) {
        G(2 * j, j) = 1.0;
        G(2 * j + 1, j) = -1.0;
    }
    VectorXd h(12);
    h << 2.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1;
    return StepPolytope{G, h};
}

inline ProblemSpec make_cwh_problem(const CwhParameters& params = CwhParameters{},
                                    double alpha = 0.05, int horizon = 5) {
    ProblemSpec spec;
    spec.system = build_cwh_scaled(params);
    spec.horizon = horizon;
    spec.x0 = VectorXd(6);
    spec.x0 << 0.8, 0.37, -0.37, -0.112237, -0.464386, 0.394034;
    spec.inputLo = VectorXd::Constant(3, -1.0);
    spec.inputHi = VectorXd::Constant(3, 1.0);
    for (int k = 1; k < horizon; ++k) spec.target.perStep[k] = demo_cone_polytope();
    spec.target.perStep[horizon] = demo_terminal_polytope();
    spec.alpha = alpha;
    spec.validate();
    return spec;
}

// Disturbance model used by the demo: zero mean, diagonal covariance with
// per-step position noise 1e-6 and velocity noise 5e-8, expressed in the same
// scaled coordinates as the demo problem.
inline GaussianModel cwh_demo_model(int horizon = 5, std::uint64_t seed = 0) {
    const Eigen::Index d = 6 * static_cast<Eigen::Index>(horizon);
    VectorXd blockDiag(6);
    blockDiag << 1e-6, 1e-6, 1e-6, 5e-8, 5e-8, 5e-8;
    MatrixXd cov = MatrixXd::Zero(d, d);
    for (int k = 0; k < horizon; ++k)
        cov.block(6 * k, 6 * k, 6, 6) = blockDiag.asDiagonal();
    return GaussianModel{VectorXd::Zero(d), cov, seed};
}

} // namespace ccstat
