#pragma once
// Discrete-time LTI systems, the stacked (concatenated) prediction form, and
// the Clohessy-Wiltshire relative-orbit benchmark system.
//
// For x(k+1) = A x(k) + B u(k) + w(k), the concatenated form expresses the
// state at step k as an affine function of the initial state, the stacked
// input U = [u(0); ...; u(N-1)] and the stacked disturbance
// W = [w(0); ...; w(N-1)]:
//
//   x(k) = A^k x(0) + C(k) U + D(k) W,
//   C(k) = [A^{k-1}B ... A B  B  0 ... 0]   (n x N m)
//   D(k) = [A^{k-1}  ... A    I  0 ... 0]   (n x N n)

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ccstat/errors.hpp"

namespace ccstat {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LtiSystem {
    MatrixXd A; // n x n state transition
    MatrixXd B; // n x m input map

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }

    void validate() const {
        if (A.rows() != A.cols())
            throw StructuralError("system-shape", "state matrix must be square, got " +
                                                      std::to_string(A.rows()) + "x" +
                                                      std::to_string(A.cols()));
        if (B.rows() != A.rows())
            throw StructuralError("system-shape",
                                  "input matrix must have one row per state; state dim " +
                                      std::to_string(A.rows()) + ", input rows " +
                                      std::to_string(B.rows()));
        if (A.rows() < 1 || B.cols() < 1)
            throw StructuralError("system-shape", "state and input dimensions must be >= 1");
        if (!A.allFinite() || !B.allFinite())
            throw StructuralError("system-shape", "system matrices must be finite");
    }
};

// Stacked prediction matrices for all steps k = 1..N of a horizon.
class ConcatenatedDynamics {
public:
    ConcatenatedDynamics(const LtiSystem& sys, int horizon) : n_(sys.n()), m_(sys.m()), N_(horizon) {
        sys.validate();
        if (horizon < 1)
            throw StructuralError("horizon", "horizon must be >= 1, got " + std::to_string(horizon));
        powers_.reserve(static_cast<std::size_t>(N_));
        MatrixXd Ak = sys.A;
        for (int k = 1; k <= N_; ++k) {
            if (k > 1) Ak = sys.A * Ak;
            powers_.push_back(Ak); // A^k
        }
        C_.assign(static_cast<std::size_t>(N_), MatrixXd::Zero(n_, N_ * m_));
        D_.assign(static_cast<std::size_t>(N_), MatrixXd::Zero(n_, N_ * n_));
        for (int k = 1; k <= N_; ++k) {
            MatrixXd& Ck = C_[static_cast<std::size_t>(k - 1)];
            MatrixXd& Dk = D_[static_cast<std::size_t>(k - 1)];
            // Block j multiplies u(j) / w(j); for j < k the weight is A^{k-1-j}.
            for (int j = 0; j < k; ++j) {
                const int p = k - 1 - j; // power of A
                const MatrixXd& Ap = p == 0 ? identity() : powers_[static_cast<std::size_t>(p - 1)];
                Ck.block(0, static_cast<Eigen::Index>(j) * m_, n_, m_) = Ap * sys.B;
                Dk.block(0, static_cast<Eigen::Index>(j) * n_, n_, n_) = Ap;
            }
        }
    }

    Eigen::Index n() const { return n_; }
    Eigen::Index m() const { return m_; }
    int horizon() const { return N_; }

    // All accessors use the 1-based step index k in 1..N.
    const MatrixXd& C(int k) const { return C_[checked(k)]; }
    const MatrixXd& D(int k) const { return D_[checked(k)]; }
    const MatrixXd& power(int k) const { return powers_[checked(k)]; }

private:
    std::size_t checked(int k) const {
        if (k < 1 || k > N_)
            throw StructuralError("step-range", "step index " + std::to_string(k) +
                                                    " outside 1.." + std::to_string(N_));
        return static_cast<std::size_t>(k - 1);
    }
    const MatrixXd& identity() const {
        static thread_local MatrixXd cache;
        if (cache.rows() != n_) cache = MatrixXd::Identity(n_, n_);
        return cache;
    }

    Eigen::Index n_, m_;
    int N_;
    std::vector<MatrixXd> powers_; // powers_[k-1] = A^k
    std::vector<MatrixXd> C_, D_;
};

inline ConcatenatedDynamics concatenate(const LtiSystem& sys, int horizon) {
    return ConcatenatedDynamics(sys, horizon);
}

// Mean state at step k: A^k x0 + C(k) U + D(k) Wbar.
inline VectorXd propagate_mean(const ConcatenatedDynamics& cd, const VectorXd& x0,
                               const VectorXd& U, const VectorXd& Wbar, int k) {
    if (x0.size() != cd.n())
        throw StructuralError("shape", "x0 has length " + std::to_string(x0.size()) +
                                           ", expected " + std::to_string(cd.n()));
    if (U.size() != cd.horizon() * cd.m())
        throw StructuralError("shape", "stacked input has length " + std::to_string(U.size()) +
                                           ", expected " + std::to_string(cd.horizon() * cd.m()));
    if (Wbar.size() != cd.horizon() * cd.n())
        throw StructuralError("shape", "stacked disturbance has length " +
                                           std::to_string(Wbar.size()) + ", expected " +
                                           std::to_string(cd.horizon() * cd.n()));
    return cd.power(k) * x0 + cd.C(k) * U + cd.D(k) * Wbar;
}

// ------------------------------------------------------------------ CWH -----

struct CwhParameters {
    double mu = 398600.4418; // gravitational parameter, km^3/s^2
    double r0 = 7000.0;      // chief orbital radius, km
    double mass = 100.0;     // deputy mass, kg
    double dt = 60.0;        // sampling time, s

    double omega() const { return std::sqrt(mu / (r0 * r0 * r0)); } // mean motion, rad/s

    void validate() const {
        if (!(mu > 0) || !(r0 > 0) || !(mass > 0) || !(dt > 0))
            throw StructuralError("cwh-params", "all CWH parameters must be strictly positive");
        if (!std::isfinite(omega()))
            throw StructuralError("cwh-params", "mean motion is not finite");
    }
};

// Exact closed-form Clohessy-Wiltshire state-transition matrix over time t for
// mean motion n, state ordering (x, y, z, vx, vy, vz) with x radial, y
// along-track, z cross-track.
inline Eigen::Matrix<double, 6, 6> cwh_stm(double n, double t) {
    const double nt = n * t;
    const double s = std::sin(nt);
    const double c = std::cos(nt);
    Eigen::Matrix<double, 6, 6> A;
    A << 4.0 - 3.0 * c, 0.0, 0.0, s / n, 2.0 * (1.0 - c) / n, 0.0,
        6.0 * (s - nt), 1.0, 0.0, 2.0 * (c - 1.0) / n, (4.0 * s - 3.0 * nt) / n, 0.0,
        0.0, 0.0, c, 0.0, 0.0, s / n,
        3.0 * n * s, 0.0, 0.0, c, 2.0 * s, 0.0,
        6.0 * n * (c - 1.0), 0.0, 0.0, -2.0 * s, 4.0 * c - 3.0, 0.0,
        0.0, 0.0, -n * s, 0.0, 0.0, c;
    return A;
}

// Discrete CWH system under impulsive thrust: an impulse at the start of the
// interval changes velocity by F/mass, so B = A * [0; I/mass].
inline LtiSystem build_cwh(const CwhParameters& p) {
    p.validate();
    LtiSystem sys;
    sys.A = cwh_stm(p.omega(), p.dt);
    Eigen::Matrix<double, 6, 3> impulse = Eigen::Matrix<double, 6, 3>::Zero();
    impulse.block<3, 3>(3, 0) = Eigen::Matrix3d::Identity() / p.mass;
    sys.B = sys.A * impulse;
    return sys;
}

} // namespace ccstat
