#pragma once
// Disturbance sample sets, their statistics, and a reproducible Gaussian
// generator.
//
// Statistics use the maximum-likelihood normalization (divisor N_s, no Bessel
// correction) because the concentration bound in concentration.hpp is stated
// for exactly that statistic. Batch statistics use a fixed two-pass
// algorithm with sequential summation in sample order 0..N_s-1, so
// recomputation is bitwise reproducible.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccstat/dynamics.hpp"
#include "ccstat/errors.hpp"
#include "ccstat/rng.hpp"

namespace ccstat {

// N_s stacked disturbance samples, one per row.
class SampleSet {
public:
    // Checked construction: rejects degenerate sets in which every sample is
    // numerically identical (all max-norm distances to the first sample below
    // 1e-14). Use for externally supplied data.
    static SampleSet from_samples(MatrixXd samples) {
        SampleSet set{std::move(samples)};
        set.validate_shape();
        if (set.is_degenerate())
            throw GateError("degenerate-samples",
                            "all " + std::to_string(set.count()) +
                                " samples are numerically identical");
        return set;
    }

    // Unchecked construction: used by the internal generator, where a
    // zero-covariance model legitimately produces identical samples.
    static SampleSet unchecked(MatrixXd samples) {
        SampleSet set{std::move(samples)};
        set.validate_shape();
        return set;
    }

    Eigen::Index count() const { return samples_.rows(); }
    Eigen::Index dim() const { return samples_.cols(); }
    const MatrixXd& matrix() const { return samples_; }
    VectorXd sample(Eigen::Index i) const { return samples_.row(i).transpose(); }

    bool is_degenerate() const {
        const auto anchor = samples_.row(0);
        double maxDiff = 0.0;
        for (Eigen::Index i = 1; i < samples_.rows(); ++i)
            maxDiff = std::max(maxDiff, (samples_.row(i) - anchor).cwiseAbs().maxCoeff());
        return maxDiff < 1e-14;
    }

private:
    explicit SampleSet(MatrixXd samples) : samples_(std::move(samples)) {}
    void validate_shape() const {
        if (samples_.rows() < 1 || samples_.cols() < 1)
            throw StructuralError("sample-shape", "sample set must be non-empty");
        if (!samples_.allFinite())
            throw StructuralError("sample-shape", "samples must be finite");
    }
    MatrixXd samples_;
};

// Sample mean and ML covariance (divisor N_s) of a sample set.
struct SampleStatistics {
    VectorXd mean;
    MatrixXd covariance;
    std::int64_t count = 0;
};

inline SampleStatistics compute_statistics(const SampleSet& set) {
    if (set.count() < 2)
        throw GateError("insufficient-samples", "statistics require at least 2 samples, got " +
                                                    std::to_string(set.count()));
    if (set.is_degenerate())
        throw GateError("degenerate-samples", "all samples are numerically identical");
    const Eigen::Index n = set.count();
    const Eigen::Index d = set.dim();
    VectorXd mean = VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) mean += set.matrix().row(i).transpose();
    mean /= static_cast<double>(n);
    MatrixXd cov = MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const VectorXd centered = set.matrix().row(i).transpose() - mean;
        cov += centered * centered.transpose();
    }
    cov /= static_cast<double>(n);
    return SampleStatistics{std::move(mean), std::move(cov), static_cast<std::int64_t>(n)};
}

// One-sample update of (mean, covariance, count) statistics:
//   mean'       = mean + (x - mean) / (N+1)
//   covariance' = (N/(N+1)) covariance + (N/(N+1)^2) (x - mean)(x - mean)^T
inline SampleStatistics incremental_update(const SampleStatistics& stats, const VectorXd& x) {
    if (stats.count < 1)
        throw StructuralError("statistics-count", "incremental update requires count >= 1");
    if (x.size() != stats.mean.size())
        throw StructuralError("shape", "new sample has length " + std::to_string(x.size()) +
                                           ", expected " + std::to_string(stats.mean.size()));
    const double n = static_cast<double>(stats.count);
    const double nstar = n + 1.0;
    const VectorXd delta = x - stats.mean;
    SampleStatistics out;
    out.mean = stats.mean + delta / nstar;
    out.covariance =
        (n / nstar) * stats.covariance + (n / (nstar * nstar)) * (delta * delta.transpose());
    out.count = stats.count + 1;
    return out;
}

// Mean and standard deviation of the scalar G * x(k) when x(k) is propagated
// through the stacked dynamics with disturbance statistics `stats`. The
// standard deviation does not depend on U.
inline std::pair<double, double> scalar_projection_stats(const SampleStatistics& stats,
                                                         const ConcatenatedDynamics& cd,
                                                         const VectorXd& x0, const VectorXd& U,
                                                         const Eigen::RowVectorXd& G, int k) {
    if (G.size() != cd.n())
        throw StructuralError("shape", "half-space normal has length " + std::to_string(G.size()) +
                                           ", expected " + std::to_string(cd.n()));
    if (stats.mean.size() != cd.horizon() * cd.n())
        throw StructuralError("shape", "statistics dimension " + std::to_string(stats.mean.size()) +
                                           " does not match stacked disturbance dimension " +
                                           std::to_string(cd.horizon() * cd.n()));
    const double mean = G * propagate_mean(cd, x0, U, stats.mean, k);
    const Eigen::RowVectorXd projection = G * cd.D(k);
    const double radicand = projection * stats.covariance * projection.transpose();
    if (radicand < -1e-12)
        throw GateError("negative-variance",
                        "projected variance " + std::to_string(radicand) +
                            " is negative beyond tolerance; covariance is not PSD");
    return {mean, std::sqrt(std::max(radicand, 0.0))};
}

// ------------------------------------------------------- Gaussian model -----

// Disturbance model N(mean, covariance) with a seed for reproducible draws.
struct GaussianModel {
    VectorXd mean;
    MatrixXd covariance;
    std::uint64_t seed = 0;

    Eigen::Index dim() const { return mean.size(); }
};

// Dense factor F with F F^T = covariance, from a pivoted LDL^T factorization
// with small negative pivots clamped to zero.
inline MatrixXd gaussian_factor(const GaussianModel& model) {
    if (model.covariance.rows() != model.mean.size() ||
        model.covariance.cols() != model.mean.size())
        throw StructuralError("model-shape", "covariance must be square with the mean's dimension");
    Eigen::LDLT<MatrixXd> ldlt(model.covariance);
    VectorXd d = ldlt.vectorD();
    const double scale = std::max(d.cwiseAbs().maxCoeff(), 1e-300);
    if (d.minCoeff() < -1e-10 * scale)
        throw GateError("model-covariance",
                        "covariance is not positive semi-definite (pivot " +
                            std::to_string(d.minCoeff()) + "); cannot factorize");
    const VectorXd sqrtD = d.cwiseMax(0.0).cwiseSqrt();
    MatrixXd factor = MatrixXd(ldlt.matrixL()) * sqrtD.asDiagonal();
    factor = ldlt.transpositionsP().transpose() * factor;
    return factor;
}

// `count` i.i.d. draws from the model. Sample i always consumes substream
// (model.seed, i), so results are identical no matter how generation is
// batched; generate(model, k) is a prefix of generate(model, k') for k < k'.
inline SampleSet generate_samples(const GaussianModel& model, std::int64_t count) {
    if (count < 1)
        throw StructuralError("sample-count", "sample count must be >= 1, got " +
                                                  std::to_string(count));
    const MatrixXd factor = gaussian_factor(model);
    const Eigen::Index d = model.dim();
    MatrixXd samples(count, d);
    VectorXd z(d);
    for (std::int64_t i = 0; i < count; ++i) {
        Substream stream(model.seed, static_cast<std::uint64_t>(i));
        for (Eigen::Index j = 0; j < d; ++j) z[j] = stream.next_normal();
        samples.row(i) = (model.mean + factor * z).transpose();
    }
    return SampleSet::unchecked(std::move(samples));
}

} // namespace ccstat
