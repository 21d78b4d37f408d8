#pragma once

#include "heatperim/generator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace heatperim {

enum class HeatStrategy { Auto, Spectral, Krylov };

const char* toString(HeatStrategy s);

struct HeatOptions {
    HeatStrategy strategy = HeatStrategy::Auto;
    /// Relative accuracy target in the sup norm.
    double tol = 1e-10;
    /// Auto picks the spectral strategy up to this many points.
    Index spectralThreshold = 4096;
    int krylovDimension = 60;
    int maxSubsteps = 20000;
};

/// The heat semigroup T_t = exp(tA). Immutable once constructed; apply() is safe to call from
/// several threads.
///
/// Spectral: full eigendecomposition of the symmetrized generator mu^(1/2) A mu^(-1/2).
/// Krylov: Lanczos in the mu-inner product with full reorthogonalization and adaptive time steps.
class HeatOperator {
public:
    explicit HeatOperator(Generator gen, HeatOptions options = {});

    const Generator& generator() const { return gen_; }
    const MetricMeasureSpace& space() const { return gen_.space(); }
    HeatStrategy strategy() const { return strategy_; }
    double tol() const { return options_.tol; }

    /// exp(tA) f. t = 0 returns f unchanged.
    Vector apply(const Vector& f, double t) const;

    /// Eigenvalues of A, ascending (spectral strategy only).
    const Vector& eigenvalues() const;

private:
    Vector applySpectral(const Vector& f, double t) const;
    Vector applyKrylov(const Vector& f, double t) const;

    Generator gen_;
    HeatOptions options_;
    HeatStrategy strategy_;
    Vector sqrtMu_;
    Eigen::MatrixXd eigenvectors_;
    Vector eigenvalues_;
};

Vector applySemigroup(const HeatOperator& op, const Vector& f, double t);

/// p(t, x, .) = (T_t delta_x)(.) / mu(x), the density of T_t against mu. Entries below -tol times
/// the row maximum are clamped to that floor and counted in `clamped`.
Vector heatKernelRow(const HeatOperator& op, double t, Index x, int* clamped = nullptr);

// ---------------------------------------------------------------------------------------------
// Two-sided Gaussian bounds for the heat kernel.

struct GaussianSample {
    double t = 0.0;
    Index x = 0;
    Index y = 0;
};

struct GaussianSampleSpec {
    std::vector<double> times;
    std::size_t centers = 4;
    std::size_t perCenter = 48;
    /// Off-diagonal targets are drawn with d^2 / t in [0, maxRatio].
    double maxRatio = 16.0;
    std::uint64_t seed = 7;
};

/// Diagonal samples plus off-diagonal ones spread evenly in d^2/t for random centers.
std::vector<GaussianSample> gaussianSamples(const MetricMeasureSpace& space, const GaussianSampleSpec& spec);

struct GaussianFit {
    /// Single constant for both bounds: max(cUpper, cLower).
    double C = 0.0;
    double cUpper = 0.0;  // fixed by the diagonal: max p sqrt(mu B mu B)
    double cLower = 0.0;  // fixed by the diagonal: 1 / min p sqrt(mu B mu B)
    double C1 = 0.0;      // lower bound exponent
    double C2 = 0.0;      // upper bound exponent
    double r2 = 0.0;      // log-linear fit on the decay regime d^2/t in [1, 10]
    double decaySlope = 0.0;
    std::size_t samples = 0;
    std::size_t decaySamples = 0;
    std::string sampleSpec;
    bool verified = false;
};

/// Fits C, C1, C2 in
///   exp(-d^2 / (C1 t)) / (C V) <= p(t,x,y) <= C exp(-d^2 / (C2 t)) / V,  V = sqrt(mu B_sqrt(t)(x) mu B_sqrt(t)(y)),
/// then re-checks both bounds on every sample.
GaussianFit fitGaussianBounds(const HeatOperator& op, std::span<const GaussianSample> samples,
                              std::string sampleSpec = {}, unsigned workers = 1);

}  // namespace heatperim
