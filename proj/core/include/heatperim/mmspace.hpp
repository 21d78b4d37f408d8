#pragma once

#include "heatperim/common.hpp"
#include "heatperim/ladder.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace heatperim {

/// Builder metadata carried by spaces that were generated rather than read from a dense table.
struct SpaceProvenance {
    std::string builder;     // empty for dense spaces
    std::string paramsJson;  // canonical JSON of the builder parameters
};

/// Hints used by discretizations. `dimension` is the volume growth exponent the builder knows
/// (1 for circle/interval, 2 for the torus); `latticeSpacing` > 0 marks a uniform lattice.
struct SpaceGeometry {
    int dimension = 0;
    double latticeSpacing = 0.0;
};

/// Finite metric measure space (X, d, mu). Immutable after construction; every query is const
/// and safe to call concurrently.
///
/// Two storage kinds exist: a dense distance table, and points embedded in R^k with an l2 metric
/// that wraps around in every coordinate with a positive period (circle, torus). Embedded spaces
/// answer ball queries through a uniform cell grid.
class MetricMeasureSpace {
public:
    /// Validates the metric axioms (exhaustively for n <= 256, on 10^4 random triples otherwise)
    /// and strict positivity of `mu`.
    static MetricMeasureSpace dense(Eigen::MatrixXd dist, Vector mu, std::string label,
                                    std::uint64_t tripleSeed = 0x5eed);

    /// `coords` is n x k; `periods[c] > 0` makes coordinate c periodic, 0 leaves it Euclidean.
    static MetricMeasureSpace embedded(Eigen::MatrixXd coords, std::vector<double> periods, Vector mu,
                                       std::string label, SpaceGeometry geometry = {},
                                       SpaceProvenance provenance = {});

    Index size() const { return n_; }
    double distance(Index i, Index j) const;
    const Vector& measure() const { return mu_; }
    double measure(Index i) const { return mu_[i]; }
    double totalMeasure() const { return totalMu_; }
    /// Exact for dense spaces; an attained-or-upper bound for embedded ones.
    double diameter() const { return diameter_; }
    /// Minimal positive interpoint distance.
    double resolution() const { return resolution_; }
    const std::string& label() const { return label_; }
    const SpaceGeometry& geometry() const { return geometry_; }
    const SpaceProvenance& provenance() const { return provenance_; }

    bool isDense() const { return coords_.size() == 0; }
    const Eigen::MatrixXd& denseDistances() const { return dist_; }
    const Eigen::MatrixXd& coordinates() const { return coords_; }
    const std::vector<double>& periods() const { return periods_; }

    /// Calls fn(y, d(x, y)) for every y with d(x, y) < r (open) or d(x, y) <= r (closed).
    template <class Fn>
    void forEachWithin(Index x, double r, bool closed, Fn&& fn) const;

    /// Open ball {y : d(x, y) < r}, sorted.
    IndexSet ball(Index x, double r) const;
    /// Closed ball {y : d(x, y) <= r}, sorted.
    IndexSet closedBall(Index x, double r) const;
    double ballMeasure(Index x, double r) const;
    /// mu(B_r(x)) for every x.
    Vector ballMeasures(double r, unsigned workers = 1) const;

    void checkIndex(Index x) const;

private:
    MetricMeasureSpace() = default;
    void finalizeMeasure();
    void buildGrid();
    double embeddedDistance(Index i, Index j) const;
    template <class Fn>
    void scanCells(Index x, double r, Fn&& fn) const;

    Index n_ = 0;
    Vector mu_;
    double totalMu_ = 0.0;
    double diameter_ = 0.0;
    double resolution_ = 0.0;
    std::string label_;
    SpaceGeometry geometry_;
    SpaceProvenance provenance_;

    Eigen::MatrixXd dist_;    // dense kind
    Eigen::MatrixXd coords_;  // embedded kind, n x k
    std::vector<double> periods_;
    std::vector<double> lower_, extent_;  // per coordinate: grid origin and span
    std::vector<int> cells_;              // grid cells per coordinate
    std::vector<double> cellSize_;
    std::vector<int> cellStart_;          // CSR layout of points per cell
    std::vector<Index> cellPoints_;
};

// ---------------------------------------------------------------------------------------------
// Diagnostics: doubling and Poincare constants, estimated by sampling.

struct RadiusProbe {
    Index x = 0;
    double r = 0.0;
};

/// Random ball probes: centers uniform over points, radii log-uniform in [rMin, rMax]. With
/// snapUnit > 0 radii are moved to half-integer multiples of snapUnit (off lattice distance ties).
struct ProbeSpec {
    std::size_t count = 64;
    double rMin = 0.0;
    double rMax = 0.0;
    std::uint64_t seed = 1;
    double snapUnit = 0.0;
};

std::vector<RadiusProbe> sampleProbes(const MetricMeasureSpace& space, const ProbeSpec& spec);

struct DoublingReport {
    double cD = 1.0;
    double qMu = 0.0;  // log2(cD)
    std::vector<RadiusProbe> radiiSampled;
    std::uint64_t seed = 0;
};

/// cD = max over probes of mu(B_2r(x)) / mu(B_r(x)).
DoublingReport doublingEstimate(const MetricMeasureSpace& space, std::span<const RadiusProbe> probes,
                                std::uint64_t seed = 0);
DoublingReport doublingEstimate(const MetricMeasureSpace& space, const ProbeSpec& spec);

/// Supplies lip(u) at every point for a function u on the space.
using GradientOracle = std::function<Vector(const Vector&)>;

struct PoincareReport {
    double cP = 0.0;
    double lambda = 1.0;
    std::size_t testFunctions = 0;
    std::size_t admissibleProbes = 0;
    std::uint64_t seed = 0;
};

/// cP = max over (u, ball) of [avg_B |u - u_B|] / [r * avg_{lambda B} lip(u)], skipping probes
/// with a vanishing denominator. Throws when no probe is admissible.
PoincareReport poincareEstimate(const MetricMeasureSpace& space, const GradientOracle& gradient, double lambda,
                                std::span<const Vector> testFunctions, std::span<const RadiusProbe> balls,
                                std::uint64_t seed = 0);

/// Random smooth distance profiles and tent-smoothed indicators of balls, for Poincare probes.
std::vector<Vector> poincareTestFunctions(const MetricMeasureSpace& space, std::size_t count,
                                          std::uint64_t seed);

// ---------------------------------------------------------------------------------------------
// Coverings.

struct EpsilonNet {
    double eps = 0.0;
    IndexSet centers;        // in selection order, which is ascending index order
    double dilation = 4.0;   // overlap is measured for balls of radius dilation * eps
    int overlap = 0;         // max over points of the number of dilated balls containing it
    bool belowResolution = false;  // eps < resolution: every point became a center
};

/// Greedy maximal eps/2-separated subset in ascending index order; every point lies within eps/2
/// of a center. Overlap is measured for the 4*lambda*eps dilates.
EpsilonNet epsilonNet(const MetricMeasureSpace& space, double eps, double lambda = 1.0);

struct PartitionOfUnity {
    double eps = 0.0;
    /// centers x points; column x holds phi_i(x) for the centers whose support contains x.
    Eigen::SparseMatrix<double> phi;
    /// Per center, max |phi_i(x) - phi_i(y)| / d(x, y) over pairs with d(x, y) <= edgeRadius.
    std::vector<double> lipBound;
    double edgeRadius = 0.0;
    /// max_i lipBound[i] * eps: the measured constant C in Lip(phi_i) <= C / eps.
    double lipConstant = 0.0;
};

/// Normalized tents phi_i = psi_i / sum_j psi_j with psi_i(x) = max(0, 1 - d(x, x_i) / (2 eps)).
/// edgeRadius <= 0 selects eps / 2.
PartitionOfUnity partitionOfUnity(const MetricMeasureSpace& space, const EpsilonNet& net, double edgeRadius = 0.0);

// ---------------------------------------------------------------------------------------------
// Set geometry.

/// Union of the open r-balls centered in E.
IndexSet tubularNeighborhood(const MetricMeasureSpace& space, const IndexSet& set, double r);

/// Points x with a point y across the set boundary at d(x, y) <= radius: the vertex boundary on
/// both sides of E at scale `radius`.
IndexSet boundaryVertices(const MetricMeasureSpace& space, const IndexSet& set, double radius);

/// mu(union of B_r over `boundary`) / r along a strictly decreasing radius ladder. The trusted
/// window excludes radii below 4x the space resolution and limitEst is the minimum over it.
FunctionalLadder minkowskiContent(const MetricMeasureSpace& space, const IndexSet& boundary,
                                  std::span<const double> rLadder, double windowFactor = 4.0);

/// Finite-scale surrogate of Sigma_gamma: points where the max over the ladder of
/// min(mu(B_r & E), mu(B_r \ E)) / mu(B_r) is at least gamma.
IndexSet sigmaGammaBoundary(const MetricMeasureSpace& space, const IndexSet& set, double gamma,
                            std::span<const double> rLadder);

// ---------------------------------------------------------------------------------------------

inline double MetricMeasureSpace::embeddedDistance(Index i, Index j) const {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < coords_.cols(); ++c) {
        double d = std::abs(coords_(i, c) - coords_(j, c));
        if (periods_[c] > 0.0) d = std::min(d, periods_[c] - d);
        sum += d * d;
    }
    return std::sqrt(sum);
}

template <class Fn>
void MetricMeasureSpace::scanCells(Index x, double r, Fn&& fn) const {
    const int k = static_cast<int>(coords_.cols());
    std::vector<int> first(k), count(k), idx(k, 0);
    for (int c = 0; c < k; ++c) {
        const int nc = cells_[c];
        const int home = std::clamp(static_cast<int>((coords_(x, c) - lower_[c]) / cellSize_[c]), 0, nc - 1);
        const long reach = std::isfinite(r) ? static_cast<long>(std::ceil(r / cellSize_[c])) : nc;
        if (2 * reach + 1 >= nc) {
            first[c] = 0;
            count[c] = nc;
        } else if (periods_[c] > 0.0) {
            first[c] = home - static_cast<int>(reach);
            count[c] = 2 * static_cast<int>(reach) + 1;
        } else {
            first[c] = std::max(0, home - static_cast<int>(reach));
            count[c] = std::min(nc - 1, home + static_cast<int>(reach)) - first[c] + 1;
        }
    }
    while (true) {
        int cell = 0;
        for (int c = k - 1; c >= 0; --c) {
            const int nc = cells_[c];
            const int v = ((first[c] + idx[c]) % nc + nc) % nc;
            cell = cell * nc + v;
        }
        for (int p = cellStart_[cell]; p < cellStart_[cell + 1]; ++p) fn(cellPoints_[p]);
        int c = 0;
        while (c < k && ++idx[c] == count[c]) idx[c++] = 0;
        if (c == k) break;
    }
}

template <class Fn>
void MetricMeasureSpace::forEachWithin(Index x, double r, bool closed, Fn&& fn) const {
    if (isDense()) {
        for (Index y = 0; y < n_; ++y) {
            const double d = dist_(x, y);
            if (d < r || (closed && d == r)) fn(y, d);
        }
        return;
    }
    scanCells(x, r, [&](Index y) {
        const double d = embeddedDistance(x, y);
        if (d < r || (closed && d == r)) fn(y, d);
    });
}

}  // namespace heatperim
