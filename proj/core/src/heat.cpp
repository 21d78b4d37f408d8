#include "heatperim/heat.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace heatperim {

namespace {

bool eigenpairsHold(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V, const Vector& lambda) {
    const Eigen::Index n = S.rows();
    if (!V.allFinite() || !lambda.allFinite()) return false;
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    const Eigen::Index probes = std::min<Eigen::Index>(n, 24);
    for (Eigen::Index p = 0; p < probes; ++p) {
        const Eigen::Index k = probes == 1 ? 0 : p * (n - 1) / (probes - 1);
        const auto v = V.col(k);
        if (std::abs(v.squaredNorm() - 1.0) > 1e-8) return false;
        if ((S * v - lambda[k] * v).norm() > 1e-8 * scale) return false;
        if (k > 0 && std::abs(v.dot(V.col(k - 1))) > 1e-8) return false;
    }
    return true;
}

}  // namespace

const char* toString(HeatStrategy s) {
    switch (s) {
        case HeatStrategy::Spectral: return "spectral";
        case HeatStrategy::Krylov: return "krylov";
        default: return "auto";
    }
}

HeatOperator::HeatOperator(Generator gen, HeatOptions options)
    : gen_(std::move(gen)), options_(options), strategy_(options.strategy) {
    require(options_.tol > 0.0, "HeatOperator: tol must be positive");
    require(options_.krylovDimension >= 2, "HeatOperator: Krylov dimension must be at least 2");
    const Index n = gen_.size();
    if (strategy_ == HeatStrategy::Auto)
        strategy_ = n <= options_.spectralThreshold ? HeatStrategy::Spectral : HeatStrategy::Krylov;
    sqrtMu_ = gen_.space().measure().cwiseSqrt();
    if (strategy_ != HeatStrategy::Spectral) return;

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    const SparseRowMatrix& A = gen_.matrix();
    for (Index i = 0; i < n; ++i)
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) S(i, it.col()) = sqrtMu_[i] * it.value() / sqrtMu_[it.col()];
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::MatrixXd V = S;
    eigenvalues_.resize(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, V.data(), n, eigenvalues_.data());
    if (info == 0 && eigenpairsHold(S, V, eigenvalues_)) {
        eigenvectors_ = std::move(V);
    } else {
        // Some BLAS builds miscompute on newer CPUs; fall back to Eigen's own solver.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
        if (eig.info() != Eigen::Success || !eigenpairsHold(S, eig.eigenvectors(), eig.eigenvalues()))
            fail(ErrorKind::Numerical, "HeatOperator: symmetric eigendecomposition failed");
        eigenvalues_ = eig.eigenvalues();
        eigenvectors_ = eig.eigenvectors();
    }
    // The generator is conservative and connected: its top pair is exactly (0, sqrt(mu)).
    // Pinning it keeps T_t 1 = 1 at large t instead of drifting by t * eps * |A|.
    eigenvalues_ = eigenvalues_.cwiseMin(0.0);
    eigenvalues_[n - 1] = 0.0;
    const Vector top = sqrtMu_ / sqrtMu_.norm();
    eigenvectors_.col(n - 1) = top;
    if (n > 1) {
        const Eigen::RowVectorXd overlap = top.transpose() * eigenvectors_.leftCols(n - 1);
        eigenvectors_.leftCols(n - 1) -= top * overlap;
    }
}

const Vector& HeatOperator::eigenvalues() const {
    require(strategy_ == HeatStrategy::Spectral, "HeatOperator::eigenvalues: spectral strategy only");
    return eigenvalues_;
}

Vector HeatOperator::apply(const Vector& f, double t) const {
    require(f.size() == gen_.size(), "applySemigroup: vector length does not match the space");
    require(t >= 0.0 && std::isfinite(t), "applySemigroup: t must be finite and >= 0");
    require(f.allFinite(), "applySemigroup: f must be finite");
    // Conservative generators fix constants exactly.
    if (t == 0.0 || f.size() == 0 || f.maxCoeff() == f.minCoeff()) return f;
    return strategy_ == HeatStrategy::Spectral ? applySpectral(f, t) : applyKrylov(f, t);
}

Vector HeatOperator::applySpectral(const Vector& f, double t) const {
    Vector g = eigenvectors_.transpose() * sqrtMu_.cwiseProduct(f);
    g.array() *= (t * eigenvalues_.array()).exp();
    return (eigenvectors_ * g).cwiseQuotient(sqrtMu_);
}

Vector HeatOperator::applyKrylov(const Vector& f, double t) const {
    const Vector& mu = gen_.space().measure();
    const SparseRowMatrix& A = gen_.matrix();
    const Index n = gen_.size();
    const int mMax = std::min<int>(options_.krylovDimension, n);
    auto inner = [&](const Vector& a, const Vector& b) { return (mu.array() * a.array() * b.array()).sum(); };

    // Sup-norm target translated to the mu-norm in which Lanczos is orthogonal.
    const double normScale = std::sqrt(mu.minCoeff() / gen_.space().totalMeasure());
    const double budget = options_.tol * normScale * std::sqrt(inner(f, f));

    // The spectrum lies in [-4 rho, 0] with 4 rho the Gershgorin width. k Lanczos steps resolve
    // exp(tau A) once k^2 >= 5 rho tau ln(10 / tol), even when the residual estimate is blind to
    // modes the Krylov space has not reached yet.
    const double rho = std::max(0.5 * A.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    const double decay = 5.0 * std::log(10.0 / (options_.tol * normScale));
    auto resolvable = [&](int k, double tau) { return tau * rho <= k * double(k) / decay; };
    const double maxTau = mMax * double(mMax) / (decay * rho);

    Vector v = f;
    double remaining = t;
    int substeps = 0;
    Eigen::MatrixXd Q(n, mMax + 1);
    std::vector<double> alpha, beta;
    while (remaining > 0.0) {
        const double beta0 = std::sqrt(inner(v, v));
        if (beta0 == 0.0) return v;
        Q.col(0) = v / beta0;
        alpha.clear();
        beta.clear();
        double anorm = 0.0;
        bool breakdown = false;

        auto expAction = [&](int k, double tau, double& estimate) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
            for (int i = 0; i < k; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            // Pade keeps the trailing entry relatively accurate; an eigendecomposition floors it at eps.
            const Eigen::MatrixXd E = (tau * T).exp();
            const Vector coeff = E.col(0);
            estimate = (breakdown || static_cast<int>(beta.size()) < k) ? 0.0 : beta0 * beta[k - 1] * std::abs(coeff[k - 1]);
            return coeff;
        };

        int k = 0;
        double tau = std::min(remaining, maxTau);
        Vector coeff;
        double estimate = 0.0;
        bool converged = false;
        for (k = 1; k <= mMax; ++k) {
            Vector w = A * Q.col(k - 1);
            const double a = inner(w, Q.col(k - 1));
            alpha.push_back(a);
            for (int pass = 0; pass < 2; ++pass)
                for (int j = 0; j < k; ++j) w -= inner(w, Q.col(j)) * Q.col(j);
            const double b = std::sqrt(inner(w, w));
            anorm = std::max({anorm, std::abs(a), b});
            if (b <= 1e-13 * anorm) {
                breakdown = true;
                coeff = expAction(k, tau, estimate);
                converged = true;
                break;
            }
            beta.push_back(b);
            if (k < mMax) Q.col(k) = w / b;
            if ((k % 4 == 0 || k == mMax) && resolvable(k, tau)) {
                coeff = expAction(k, tau, estimate);
                if (estimate <= budget * tau / t) {
                    converged = true;
                    break;
                }
            }
        }
        if (!converged) {
            k = mMax;
            coeff = expAction(k, tau, estimate);
            for (int halvings = 0; estimate > budget * tau / t; ++halvings) {
                if (halvings > 60)
                    fail(ErrorKind::Numerical, "Krylov exponential failed to converge; residual estimate " +
                                                   std::to_string(estimate));
                tau *= 0.5;
                coeff = expAction(k, tau, estimate);
            }
        }
        v = beta0 * (Q.leftCols(k) * coeff);
        remaining = (tau >= remaining) ? 0.0 : remaining - tau;
        if (++substeps > options_.maxSubsteps)
            fail(ErrorKind::Numerical, "Krylov exponential exceeded " + std::to_string(options_.maxSubsteps) +
                                           " substeps; last residual estimate " + std::to_string(estimate));
    }
    return v;
}

Vector applySemigroup(const HeatOperator& op, const Vector& f, double t) { return op.apply(f, t); }

Vector heatKernelRow(const HeatOperator& op, double t, Index x, int* clamped) {
    require(t > 0.0, "heatKernelRow: t must be positive");
    op.space().checkIndex(x);
    Vector delta = Vector::Zero(op.space().size());
    delta[x] = 1.0;
    Vector row = op.apply(delta, t) / op.space().measure(x);
    const double floor = -op.tol() * row.maxCoeff();
    int count = 0;
    for (Eigen::Index y = 0; y < row.size(); ++y)
        if (row[y] < floor) {
            row[y] = floor;
            ++count;
        }
    if (clamped) *clamped = count;
    return row;
}

std::vector<GaussianSample> gaussianSamples(const MetricMeasureSpace& space, const GaussianSampleSpec& spec) {
    require(!spec.times.empty() && spec.centers > 0 && spec.perCenter >= 2, "gaussianSamples: empty specification");
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<Index> pick(0, space.size() - 1);
    std::vector<GaussianSample> out;
    for (double t : spec.times) {
        require(t > 0.0, "gaussianSamples: times must be positive");
        for (std::size_t c = 0; c < spec.centers; ++c) {
            const Index x = pick(rng);
            std::vector<std::pair<double, Index>> byDistance;
            const double reach = std::sqrt(spec.maxRatio * t);
            space.forEachWithin(x, reach, true, [&](Index y, double d) { byDistance.emplace_back(d, y); });
            std::sort(byDistance.begin(), byDistance.end());
            std::vector<char> used(space.size(), 0);
            for (std::size_t k = 0; k < spec.perCenter; ++k) {
                const double target = std::sqrt(spec.maxRatio * t * k / (spec.perCenter - 1));
                auto it = std::lower_bound(byDistance.begin(), byDistance.end(), std::pair{target, Index{-1}});
                if (it == byDistance.end()) --it;
                if (it != byDistance.begin() && target - std::prev(it)->first < it->first - target) --it;
                if (used[it->second]) continue;
                used[it->second] = 1;
                out.push_back({t, x, it->second});
            }
        }
    }
    return out;
}

GaussianFit fitGaussianBounds(const HeatOperator& op, std::span<const GaussianSample> samples, std::string sampleSpec,
                              unsigned workers) {
    require(!samples.empty(), "fitGaussianBounds: no samples");
    const MetricMeasureSpace& space = op.space();

    std::map<std::pair<double, Index>, std::size_t> rowIndex;
    std::vector<std::pair<double, Index>> rowKeys;
    for (const auto& s : samples) {
        require(s.t > 0.0, "fitGaussianBounds: sample times must be positive");
        space.checkIndex(s.y);
        if (rowIndex.emplace(std::pair{s.t, s.x}, rowKeys.size()).second) rowKeys.emplace_back(s.t, s.x);
    }
    std::vector<Vector> rows(rowKeys.size());
    parallelFor(rowKeys.size(), workers,
                [&](std::size_t k) { rows[k] = heatKernelRow(op, rowKeys[k].first, rowKeys[k].second); });

    struct Point {
        double q, ratio;
        bool diagonal;
    };
    std::vector<Point> points;
    points.reserve(samples.size());
    for (const auto& s : samples) {
        const double p = rows[rowIndex.at({s.t, s.x})][s.y];
        if (!(p > 0.0)) fail(ErrorKind::Precondition, "fitGaussianBounds: sample with non-positive kernel value");
        const double r = std::sqrt(s.t);
        const double volume = std::sqrt(space.ballMeasure(s.x, r) * space.ballMeasure(s.y, r));
        const double d = space.distance(s.x, s.y);
        points.push_back({p * volume, d * d / s.t, s.x == s.y});
    }

    GaussianFit fit;
    fit.samples = points.size();
    fit.sampleSpec = std::move(sampleSpec);
    double maxDiag = 0.0, minDiag = std::numeric_limits<double>::infinity(), maxOff = 0.0;
    for (const auto& pt : points) {
        if (pt.diagonal) {
            maxDiag = std::max(maxDiag, pt.q);
            minDiag = std::min(minDiag, pt.q);
        } else {
            maxOff = std::max(maxOff, pt.q);
        }
    }
    if (maxDiag == 0.0) fail(ErrorKind::Precondition, "fitGaussianBounds: no diagonal samples to fix C");
    fit.cUpper = maxOff >= maxDiag ? 1.01 * maxOff : maxDiag;
    fit.cLower = 1.0 / minDiag;
    fit.C = std::max(fit.cUpper, fit.cLower);

    std::vector<double> xs, ys;
    fit.C1 = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
        if (pt.ratio <= 0.0) continue;
        fit.C2 = std::max(fit.C2, pt.ratio / std::log(fit.cUpper / pt.q));
        if (fit.cLower * pt.q < 1.0) fit.C1 = std::min(fit.C1, pt.ratio / -std::log(fit.cLower * pt.q));
        if (pt.ratio >= 1.0 && pt.ratio <= 10.0) {
            xs.push_back(pt.ratio);
            ys.push_back(std::log(pt.q));
        }
    }
    if (!std::isfinite(fit.C1)) fit.C1 = fit.C2;
    fit.decaySamples = xs.size();
    if (xs.size() < 3)
        fail(ErrorKind::Precondition, "fitGaussianBounds: " + std::to_string(xs.size()) +
                                          " samples in the decay regime d^2/t in [1, 10], need at least 3");

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.decaySlope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.r2 = (sxx > 0.0 && syy > 0.0) ? sxy * sxy / (sxx * syy) : 0.0;

    constexpr double slack = 1e-12;
    fit.verified = true;
    for (const auto& pt : points) {
        const double upper = fit.C * std::exp(-pt.ratio / fit.C2);
        const double lower = std::exp(-pt.ratio / fit.C1) / fit.C;
        if (pt.q > upper * (1.0 + slack) || pt.q < lower * (1.0 - slack)) fit.verified = false;
    }
    if (!fit.verified) fail(ErrorKind::Numerical, "fitGaussianBounds: fitted constants fail on a sample");
    return fit;
}

}  // namespace heatperim
