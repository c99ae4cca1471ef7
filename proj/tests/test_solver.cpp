#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ccstat/rng.hpp"
#include "ccstat/solver.hpp"

using namespace ccstat;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SmoothProgram free_qp(const VectorXd& targetPoint) {
    SmoothProgram p;
    p.nz = targetPoint.size();
    p.Q = MatrixXd::Identity(p.nz, p.nz);
    p.c = -2.0 * targetPoint;
    p.lb = VectorXd::Constant(p.nz, -kInf);
    p.ub = VectorXd::Constant(p.nz, kInf);
    return p;
}

} // namespace

TEST_CASE("quadratic minimization without constraints") {
    VectorXd a(3);
    a << 1.5, -0.25, 2.0;
    auto sol = solve_smooth(free_qp(a));
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE((sol.U - a).norm() < 1e-7);
    REQUIRE(sol.cost == Catch::Approx(-a.squaredNorm()).margin(1e-7));
    REQUIRE(sol.lambda.size() == 0);
}

TEST_CASE("box clamps the unconstrained optimum") {
    VectorXd a(2);
    a << 3.0, 0.2;
    auto p = free_qp(a);
    p.lb = VectorXd::Constant(2, -1.0);
    p.ub = VectorXd::Constant(2, 1.0);
    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.U(0) == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(sol.U(1) == Catch::Approx(0.2).margin(1e-6));
    auto kkt = kkt_residuals(p, sol.U);
    REQUIRE(kkt.primal <= 1e-8);
    REQUIRE(kkt.stationarity <= 1e-6);
    REQUIRE(kkt.complementarity <= 1e-6);
}

TEST_CASE("single active affine row") {
    SmoothProgram p;
    p.nz = 2;
    p.Q = MatrixXd::Identity(2, 2);
    p.c = VectorXd::Zero(2);
    p.lb = VectorXd::Constant(2, -kInf);
    p.ub = VectorXd::Constant(2, kInf);
    ConstraintGroup g;
    g.coef = Eigen::RowVectorXd::Zero(2);
    g.coef << 1.0, 1.0;
    g.rhs = VectorXd::Constant(1, -1.0);
    g.label = "sum row";
    p.groups.push_back(g);
    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.U(0) == Catch::Approx(-0.5).margin(1e-6));
    REQUIRE(sol.U(1) == Catch::Approx(-0.5).margin(1e-6));
}

TEST_CASE("stacked right-hand sides match separate rows") {
    auto base = [] {
        SmoothProgram p;
        p.nz = 2;
        p.Q = MatrixXd::Identity(2, 2);
        p.c = VectorXd::Zero(2);
        p.lb = VectorXd::Constant(2, -kInf);
        p.ub = VectorXd::Constant(2, kInf);
        return p;
    };
    Eigen::RowVectorXd coef(2);
    coef << 1.0, 1.0;
    VectorXd rhs = VectorXd::LinSpaced(50, -1.0, 3.0);

    auto grouped = base();
    ConstraintGroup g;
    g.coef = coef;
    g.rhs = rhs;
    g.label = "stacked";
    grouped.groups.push_back(g);

    auto split = base();
    for (Eigen::Index j = 0; j < rhs.size(); ++j) {
        ConstraintGroup single;
        single.coef = coef;
        single.rhs = VectorXd::Constant(1, rhs(j));
        single.label = "row " + std::to_string(j);
        split.groups.push_back(single);
    }

    auto a = solve_smooth(grouped);
    auto b = solve_smooth(split);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    REQUIRE((a.U - b.U).norm() < 1e-8);
}

TEST_CASE("contradictory rows are reported infeasible") {
    SmoothProgram p;
    p.nz = 1;
    p.Q = MatrixXd::Identity(1, 1);
    p.c = VectorXd::Zero(1);
    p.lb = VectorXd::Constant(1, -kInf);
    p.ub = VectorXd::Constant(1, kInf);
    ConstraintGroup g1;
    g1.coef = Eigen::RowVectorXd::Constant(1, 1.0);
    g1.rhs = VectorXd::Constant(1, -1.0);
    g1.label = "upper cap";
    ConstraintGroup g2;
    g2.coef = Eigen::RowVectorXd::Constant(1, -1.0);
    g2.rhs = VectorXd::Constant(1, 0.0);
    g2.label = "lower cap";
    p.groups.push_back(g1);
    p.groups.push_back(g2);
    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Infeasible);
    REQUIRE_FALSE(sol.mostViolated.empty());
    REQUIRE(std::isnan(sol.cost) == false);
}

TEST_CASE("feasibility restoration from an excluded start") {
    SmoothProgram p;
    p.nz = 2;
    p.Q = MatrixXd::Identity(2, 2);
    p.c = VectorXd::Zero(2);
    p.lb = VectorXd::Constant(2, -1.0);
    p.ub = VectorXd::Constant(2, 1.0);
    ConstraintGroup g;
    g.coef = Eigen::RowVectorXd::Zero(2);
    g.coef << -1.0, 0.0;
    g.rhs = VectorXd::Constant(1, -0.5);  // z1 >= 0.5 excludes the box center
    g.label = "half plane";
    p.groups.push_back(g);
    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.U(0) == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(sol.U(1) == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("risk-coupled toy matches the closed form") {
    BoundContext ctx(1000);
    const double alpha = 0.05;
    const double sigma = 0.5;

    SmoothProgram p;
    p.nz = 2;
    p.Q = MatrixXd::Zero(2, 2);
    p.Q(0, 0) = 1.0;
    p.c = VectorXd::Zero(2);
    p.lb = VectorXd(2);
    p.ub = VectorXd(2);
    p.lb << -10.0, lambda_min(ctx) * (1.0 + 1e-9);
    p.ub << 10.0, kInf;
    ConstraintGroup g;
    g.coef = Eigen::RowVectorXd::Zero(2);
    g.coef << 1.0, sigma;
    g.rhs = VectorXd::Constant(1, -1.0);
    g.label = "coupled row";
    p.groups.push_back(g);
    RiskConstraint rc;
    rc.offset = 1;
    rc.count = 1;
    rc.budget = alpha;
    rc.map = sample_risk_map(ctx);
    p.risk = rc;

    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const double lamStar = f_inverse(ctx, alpha);
    REQUIRE(sol.lambda(0) == Catch::Approx(lamStar).margin(1e-5));
    REQUIRE(sol.U(0) == Catch::Approx(-1.0 - sigma * lamStar).margin(1e-6));
    REQUIRE(sol.lambda(0) >= lambda_min(ctx));
    REQUIRE(f(ctx, sol.lambda(0)) <= alpha + 1e-9);

    auto kkt = kkt_residuals(p, sol.full_point());
    REQUIRE(kkt.primal <= 1e-8);
    REQUIRE(kkt.stationarity <= 1e-6);
    REQUIRE(kkt.complementarity <= 1e-6);

    SECTION("iteration cap returns the best iterate instead of failing") {
        SolverConfig tight;
        tight.maxIter = 1;
        auto limited = solve_smooth(p, tight);
        REQUIRE(limited.status == SolveStatus::IterLimit);
        REQUIRE(limited.U.allFinite());
    }
}

TEST_CASE("risk budget below the asymptotic floor is infeasible") {
    BoundContext ctx(4);  // asymptote 4/45
    SmoothProgram p;
    p.nz = 3;
    p.Q = MatrixXd::Identity(3, 3);
    p.c = VectorXd::Zero(3);
    p.lb = VectorXd(3);
    p.ub = VectorXd::Constant(3, kInf);
    p.lb << -kInf, lambda_min(ctx) * (1.0 + 1e-9), lambda_min(ctx) * (1.0 + 1e-9);
    RiskConstraint rc;
    rc.offset = 1;
    rc.count = 2;
    rc.budget = 0.1;  // 2 * 4/45 = 0.1778 > 0.1
    rc.map = sample_risk_map(ctx);
    p.risk = rc;
    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Infeasible);
    REQUIRE(sol.mostViolated.find("risk budget") != std::string::npos);
}

TEST_CASE("risk variables are barred from the non-convex region") {
    BoundContext ctx(100);
    SmoothProgram p;
    p.nz = 2;
    p.Q = MatrixXd::Zero(2, 2);
    p.Q(0, 0) = 1.0;
    p.c = VectorXd::Zero(2);
    p.c(1) = 1.0;  // pull the risk variable down toward the invalid bound
    p.lb = VectorXd(2);
    p.ub = VectorXd::Constant(2, kInf);
    p.lb << -1.0, 0.0;  // lower bound deliberately below the convexity threshold
    p.ub(0) = 1.0;
    RiskConstraint rc;
    rc.offset = 1;
    rc.count = 1;
    rc.budget = 0.16;
    rc.map = sample_risk_map(ctx);
    p.risk = rc;
    REQUIRE_THROWS_AS(solve_smooth(p), std::logic_error);
}

TEST_CASE("outer-iteration objective trace is monotone after feasibility") {
    VectorXd a(2);
    a << 3.0, -2.0;
    auto p = free_qp(a);
    p.lb = VectorXd::Constant(2, -1.0);
    p.ub = VectorXd::Constant(2, 1.0);
    auto sol = solve_smooth(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.outerObjectives.size() >= 2);
    for (std::size_t i = 1; i < sol.outerObjectives.size(); ++i)
        REQUIRE(sol.outerObjectives[i] <=
                sol.outerObjectives[i - 1] + 1e-9 * (1.0 + std::abs(sol.outerObjectives[i - 1])));
}

TEST_CASE("program validation rejects malformed inputs") {
    SmoothProgram p;
    p.nz = 2;
    p.Q = MatrixXd::Identity(2, 2);
    p.c = VectorXd::Zero(2);
    p.lb = VectorXd::Constant(2, 0.0);
    p.ub = VectorXd::Constant(2, 0.0);  // no interior
    REQUIRE_THROWS_AS(solve_smooth(p), GateError);

    p.lb = VectorXd::Constant(2, -1.0);
    p.ub = VectorXd::Constant(2, 1.0);
    ConstraintGroup g;
    g.coef = Eigen::RowVectorXd::Zero(3);  // wrong width
    g.rhs = VectorXd::Constant(1, 0.0);
    g.label = "bad";
    p.groups.push_back(g);
    REQUIRE_THROWS_AS(solve_smooth(p), StructuralError);
}

TEST_CASE("independent optimality report") {
    SECTION("hand-built optimum of a one-dimensional program") {
        // minimize (z-2)^2 subject to z <= 1: optimum z = 1, multiplier 2.
        SmoothProgram p;
        p.nz = 1;
        p.Q = MatrixXd::Identity(1, 1);
        p.c = VectorXd::Constant(1, -4.0);
        p.lb = VectorXd::Constant(1, -kInf);
        p.ub = VectorXd::Constant(1, kInf);
        ConstraintGroup g;
        g.coef = Eigen::RowVectorXd::Constant(1, 1.0);
        g.rhs = VectorXd::Constant(1, 1.0);
        g.label = "cap";
        p.groups.push_back(g);
        auto kkt = kkt_residuals(p, VectorXd::Constant(1, 1.0));
        REQUIRE(kkt.primal <= 1e-12);
        REQUIRE(kkt.stationarity <= 1e-10);
        REQUIRE(kkt.complementarity <= 1e-10);
    }
    SECTION("perturbation inflates the KKT residuals") {
        SmoothProgram p;
        p.nz = 1;
        p.Q = MatrixXd::Identity(1, 1);
        p.c = VectorXd::Constant(1, -4.0);
        p.lb = VectorXd::Constant(1, -kInf);
        p.ub = VectorXd::Constant(1, kInf);
        ConstraintGroup g;
        g.coef = Eigen::RowVectorXd::Constant(1, 1.0);
        g.rhs = VectorXd::Constant(1, 1.0);
        g.label = "cap";
        p.groups.push_back(g);
        auto kkt = kkt_residuals(p, VectorXd::Constant(1, 1.0 - 1e-3));
        // At a strictly interior point the gradient can only be cancelled by a
        // multiplier on a constraint with visible slack, so either the
        // stationarity or the complementarity residual must expose the gap.
        REQUIRE(std::max(kkt.stationarity, kkt.complementarity) >= 1e-4);
    }
    SECTION("violated point reports the gap") {
        SmoothProgram p;
        p.nz = 1;
        p.Q = MatrixXd::Identity(1, 1);
        p.c = VectorXd::Zero(1);
        p.lb = VectorXd::Constant(1, -kInf);
        p.ub = VectorXd::Constant(1, kInf);
        ConstraintGroup g;
        g.coef = Eigen::RowVectorXd::Constant(1, 1.0);
        g.rhs = VectorXd::Constant(1, -2.0);
        g.label = "cap";
        p.groups.push_back(g);
        auto kkt = kkt_residuals(p, VectorXd::Constant(1, 0.0));
        REQUIRE(kkt.primal == Catch::Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("random feasible instances solve to verified optimality") {
    Substream rng(246813579ULL, 0);
    int solved = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index nz = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
        MatrixXd M(nz, nz);
        for (Eigen::Index i = 0; i < nz; ++i)
            for (Eigen::Index j = 0; j < nz; ++j) M(i, j) = rng.next_normal();
        SmoothProgram p;
        p.nz = nz;
        p.Q = M.transpose() * M + 0.1 * MatrixXd::Identity(nz, nz);
        p.c.resize(nz);
        for (Eigen::Index i = 0; i < nz; ++i) p.c(i) = rng.next_normal();
        p.lb = VectorXd::Constant(nz, -2.0);
        p.ub = VectorXd::Constant(nz, 2.0);
        VectorXd anchor(nz);
        for (Eigen::Index i = 0; i < nz; ++i)
            anchor(i) = 2.0 * rng.next_uniform() - 1.0;
        for (int r = 0; r < 3; ++r) {
            ConstraintGroup g;
            g.coef.resize(nz);
            for (Eigen::Index i = 0; i < nz; ++i) g.coef(i) = rng.next_normal();
            g.rhs = VectorXd::Constant(
                1, g.coef.dot(anchor) + 0.1 + rng.next_uniform());
            g.label = "row " + std::to_string(r);
            p.groups.push_back(g);
        }
        auto sol = solve_smooth(p);
        REQUIRE(sol.status == SolveStatus::Optimal);
        auto kkt = kkt_residuals(p, sol.U);
        REQUIRE(kkt.primal <= 1e-8);
        REQUIRE(kkt.stationarity <= 1e-6);
        REQUIRE(kkt.complementarity <= 1e-6);
        ++solved;
    }
    REQUIRE(solved == 50);
}

TEST_CASE("polytope emptiness probe") {
    SECTION("unit box is nonempty") {
        MatrixXd G(4, 2);
        G << 1, 0, -1, 0, 0, 1, 0, -1;
        REQUIRE(polytope_nonempty(G, VectorXd::Ones(4)));
    }
    SECTION("contradictory half-planes are empty") {
        MatrixXd G(2, 1);
        G << 1, -1;
        VectorXd h(2);
        h << -1.0, 0.0;  // x <= -1 and x >= 0
        REQUIRE_FALSE(polytope_nonempty(G, h));
    }
    SECTION("narrow shifted slab is nonempty") {
        MatrixXd G(2, 3);
        G << 1, 0, 0, -1, 0, 0;
        VectorXd h(2);
        h << 1000.001, -1000.0;  // 1000 <= x <= 1000.001
        REQUIRE(polytope_nonempty(G, h));
    }
}

TEST_CASE("risk map inversion helper") {
    BoundContext ctx(1337);
    auto map = sample_risk_map(ctx);
    const double lam = risk_map_inverse(map, 0.05 / 32.0);
    REQUIRE(map.value(lam) == Catch::Approx(0.05 / 32.0).epsilon(1e-10));
    REQUIRE_THROWS_AS(risk_map_inverse(map, map.asymptote * 0.5), GateError);
    REQUIRE_THROWS_AS(risk_map_inverse(map, 0.2), GateError);

    auto analytic = osvpi_risk_map();
    const double lamA = risk_map_inverse(analytic, 1e-3);
    REQUIRE(analytic.value(lamA) == Catch::Approx(1e-3).epsilon(1e-10));
}
