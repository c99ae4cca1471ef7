#pragma once
// Sample-based one-sided concentration machinery.
//
// Given N_s i.i.d. samples of a scalar with sample mean m and sample standard
// deviation s (divisor N_s), the out-of-sample tail of a fresh draw x obeys
//
//   P(x - m >= lambda * s) <= f(lambda)
//                          =  4 (sqrt(N*) + lambda)^2
//                             ------------------------------------,  N* = N_s + 1,
//                             9 (lambda^2 N_s + (sqrt(N*) + lambda)^2)
//
// valid for lambda > lambda_min = sqrt(5 N*) / (sqrt(3 N_s) - sqrt(5)) when
// the underlying distribution is unimodal. As N_s -> infinity, f converges to
// the analytic one-sided Vysochanskij-Petunin bound 4 / (9 (lambda^2 + 1)),
// valid for lambda > sqrt(5/3). f is strictly decreasing, and convex for
// lambda above the inflection point theta(N_s), with lambda_min >= theta.
//
// All evaluators here are templated on the floating type so the test suite
// can cross-check double results against long-double evaluation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "ccstat/errors.hpp"

namespace ccstat {

// Sample-count context for the sample-based bound.
struct BoundContext {
    std::int64_t ns;   // N_s, number of samples
    double nstar;      // N_s + 1
    double sqrt_nstar; // sqrt(N_s + 1)

    explicit BoundContext(std::int64_t sampleCount)
        : ns(sampleCount), nstar(static_cast<double>(sampleCount) + 1.0),
          sqrt_nstar(std::sqrt(static_cast<double>(sampleCount) + 1.0)) {
        if (sampleCount < 2)
            throw GateError("insufficient-samples",
                            "concentration bound requires at least 2 samples, got " +
                                std::to_string(sampleCount));
    }

    // The unimodality gate: the planner's use of the bound needs N_s >= 4.
    void require_unimodal_gate() const {
        if (ns < 4)
            throw GateError("insufficient-samples",
                            "the sample-based bound requires N_s >= 4 (unimodality gate), got " +
                                std::to_string(ns));
    }
};

struct RiskBound {
    double lambda;
    double probability;
};

namespace detail {

template <typename T>
T f_impl(T ns, T lambda) {
    // Stabilized form: f = 4 / (9 (kappa^2 + 1)) with
    // kappa = lambda sqrt(N_s) / (sqrt(N*) + lambda); exact at the asymptotes.
    const T s = std::sqrt(ns + T(1));
    const T kappa = lambda * std::sqrt(ns) / (s + lambda);
    return T(4) / (T(9) * (kappa * kappa + T(1)));
}

template <typename T>
T f_prime_impl(T ns, T lambda) {
    const T s = std::sqrt(ns + T(1));
    const T d = ns * lambda * lambda + (s + lambda) * (s + lambda);
    return -T(8) * ns * s * lambda * (s + lambda) / (T(9) * d * d);
}

template <typename T>
T f_second_impl(T ns, T lambda) {
    const T s = std::sqrt(ns + T(1));
    const T d = ns * lambda * lambda + (s + lambda) * (s + lambda);
    const T cubic = T(2) * lambda * lambda * lambda + T(3) * s * lambda * lambda - s;
    return T(8) * ns * (ns + T(1)) * s * cubic / (T(9) * d * d * d);
}

inline void require_positive_lambda(double lambda) {
    if (!(lambda > 0.0))
        throw GateError("lambda-domain",
                        "lambda must be strictly positive, got " + std::to_string(lambda));
}

} // namespace detail

// Large-lambda limit of the sample-based bound: 4 / (9 (N_s + 1)).
inline double f_asymptote(const BoundContext& ctx) { return 4.0 / (9.0 * ctx.nstar); }

// The sample-based tail bound f(lambda). Evaluates for any lambda > 0; the
// concentration guarantee additionally requires lambda > lambda_min(ctx).
inline double f(const BoundContext& ctx, double lambda) {
    detail::require_positive_lambda(lambda);
    return detail::f_impl<double>(static_cast<double>(ctx.ns), lambda);
}

inline double f_prime(const BoundContext& ctx, double lambda) {
    detail::require_positive_lambda(lambda);
    return detail::f_prime_impl<double>(static_cast<double>(ctx.ns), lambda);
}

inline double f_second(const BoundContext& ctx, double lambda) {
    detail::require_positive_lambda(lambda);
    return detail::f_second_impl<double>(static_cast<double>(ctx.ns), lambda);
}

// Validity threshold sqrt(5 N*) / (sqrt(3 N_s) - sqrt(5)); decreasing in N_s
// with limit sqrt(5/3).
inline double lambda_min(const BoundContext& ctx) {
    const double nsd = static_cast<double>(ctx.ns);
    return std::sqrt(5.0 * ctx.nstar) / (std::sqrt(3.0 * nsd) - std::sqrt(5.0));
}

// Positive inflection point of f: the unique positive root of
// (2 / sqrt(N*)) t^3 + 3 t^2 - 1 = 0, in closed trigonometric form.
inline double inflection_theta(const BoundContext& ctx) {
    const double nsd = static_cast<double>(ctx.ns);
    const double ratio = -(nsd - 1.0) / ctx.nstar;
    return ctx.sqrt_nstar * (std::cos(std::acos(ratio) / 3.0) - 0.5);
}

// Numeric inverse of f on its strictly decreasing branch: returns lambda with
// |f(lambda) - target| <= 1e-12. Valid targets lie strictly between the
// asymptote 4/(9 N*) and f(lambda_min).
inline double f_inverse(const BoundContext& ctx, double target) {
    const double floor = lambda_min(ctx);
    const double lo_value = f(ctx, floor);
    const double asym = f_asymptote(ctx);
    if (!(target > asym))
        throw GateError("infeasible-target",
                        "target " + std::to_string(target) +
                            " is at or below the large-lambda asymptote " + std::to_string(asym));
    if (!(target < lo_value))
        throw GateError("lambda-min-boundary",
                        "target " + std::to_string(target) + " is at or above f(lambda_min) = " +
                            std::to_string(lo_value));
    double lo = floor;
    double hi = std::max(2.0 * floor, 1.0);
    while (f(ctx, hi) > target) hi *= 2.0;
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double value = f(ctx, mid);
        if (std::abs(value - target) <= 1e-12) break;
        if (value > target)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

// Minimum sample count for a risk budget alpha spread over `totalHalfspaces`
// constraints: ceil(4 T / (9 alpha) - 1), evaluated in exact integer
// arithmetic on the binary representation of alpha so the ceiling never
// suffers floating-point off-by-one. Necessary, not sufficient.
inline std::int64_t min_samples(std::int64_t totalHalfspaces, double alpha) {
    if (totalHalfspaces < 1)
        throw GateError("halfspace-count", "total half-space count must be >= 1, got " +
                                               std::to_string(totalHalfspaces));
    if (!(alpha > 0.0) || !(alpha < 1.0 / 6.0))
        throw GateError("alpha-domain",
                        "alpha must lie in (0, 1/6), got " + std::to_string(alpha));
    int exponent = 0;
    const double fraction = std::frexp(alpha, &exponent); // alpha = fraction * 2^exponent
    const auto mantissa = static_cast<__int128>(std::ldexp(fraction, 53)); // exact
    const int shift = 53 - exponent; // alpha = mantissa / 2^shift, shift >= 55 here
    if (shift < 0 || shift > 110)
        throw GateError("alpha-domain", "alpha too small for exact sample-count evaluation");
    const __int128 fourT = static_cast<__int128>(4) * totalHalfspaces;
    // Overflow guard for fourT << shift within signed 128-bit range.
    __int128 limit = static_cast<__int128>(1) << 126;
    if (fourT > (limit >> shift))
        throw GateError("min-samples-overflow",
                        "half-space count too large for exact sample-count evaluation");
    const __int128 numerator = (fourT << shift) - 9 * mantissa; // 4T/(9a) - 1, over 9*mantissa
    const __int128 denominator = 9 * mantissa;
    __int128 q = numerator / denominator;
    const __int128 r = numerator % denominator;
    if (r != 0 && numerator > 0) q += 1; // ceiling for the positive case
    return static_cast<std::int64_t>(q);
}

// Analytic one-sided Vysochanskij-Petunin tail bound for unimodal variables.
inline double osvpi_lambda_floor() { return std::sqrt(5.0 / 3.0); }

inline double osvpi_bound(double lambda) {
    if (!(lambda > osvpi_lambda_floor()))
        throw GateError("lambda-domain", "the analytic bound requires lambda > sqrt(5/3), got " +
                                             std::to_string(lambda));
    return 4.0 / (9.0 * (lambda * lambda + 1.0));
}

// Derivatives of the analytic bound (no domain gate; callers keep lambda in
// the valid region). Convex for lambda > 1/sqrt(3).
inline double osvpi_prime(double lambda) {
    const double d = lambda * lambda + 1.0;
    return -8.0 * lambda / (9.0 * d * d);
}

inline double osvpi_second(double lambda) {
    const double d = lambda * lambda + 1.0;
    return 8.0 * (3.0 * lambda * lambda - 1.0) / (9.0 * d * d * d);
}

// Bundled risk map handed to the solver: tail-bound value/derivatives plus
// the validity floor, convexity threshold and large-lambda asymptote.
struct RiskMap {
    std::function<double(double)> value;
    std::function<double(double)> prime;
    std::function<double(double)> second;
    double floor = 0.0;      // validity threshold (strict lower bound on lambda)
    double theta = 0.0;      // convexity threshold; floor >= theta always
    double asymptote = 0.0;  // infimum of the bound as lambda -> infinity
};

inline RiskMap sample_risk_map(const BoundContext& ctx) {
    const double nsd = static_cast<double>(ctx.ns);
    RiskMap map;
    map.value = [nsd](double lam) { return detail::f_impl<double>(nsd, lam); };
    map.prime = [nsd](double lam) { return detail::f_prime_impl<double>(nsd, lam); };
    map.second = [nsd](double lam) { return detail::f_second_impl<double>(nsd, lam); };
    map.floor = lambda_min(ctx);
    map.theta = inflection_theta(ctx);
    map.asymptote = f_asymptote(ctx);
    return map;
}

inline RiskMap osvpi_risk_map() {
    RiskMap map;
    map.value = [](double lam) { return 4.0 / (9.0 * (lam * lam + 1.0)); };
    map.prime = [](double lam) { return osvpi_prime(lam); };
    map.second = [](double lam) { return osvpi_second(lam); };
    map.floor = osvpi_lambda_floor();
    map.theta = 1.0 / std::sqrt(3.0);
    map.asymptote = 0.0;
    return map;
}

// Scenario-approach sample complexity ceil((2/alpha)(ln(1/beta) + nOpt)),
// evaluated in long double. Exactly-representable results (dyadic alpha with
// beta = 1) are computed without rounding, so the ceiling is exact; in all
// other cases the long-double error (~1e-17 relative) is far below the
// distance from the true value to the nearest integer.
inline std::int64_t scenario_sample_count(double alpha, double beta, std::int64_t nOpt) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw GateError("scenario-count-domain",
                        "alpha must lie in (0,1), got " + std::to_string(alpha));
    if (!(beta > 0.0) || !(beta <= 1.0))
        throw GateError("scenario-count-domain",
                        "beta must lie in (0,1], got " + std::to_string(beta));
    if (nOpt < 1)
        throw GateError("scenario-count-domain",
                        "decision-variable count must be >= 1, got " + std::to_string(nOpt));
    const long double value = (2.0L / static_cast<long double>(alpha)) *
                              (std::log(1.0L / static_cast<long double>(beta)) +
                               static_cast<long double>(nOpt));
    return static_cast<std::int64_t>(std::ceil(value));
}

} // namespace ccstat
