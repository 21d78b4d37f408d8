#include "heatperim/mmspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace heatperim {

namespace {

constexpr double kMetricSlack = 1e-12;

std::string pointName(Index i) { return "point " + std::to_string(i); }

void validateMeasure(const Vector& mu) {
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (!(mu[i] > 0.0) || !std::isfinite(mu[i]))
            fail(ErrorKind::Config, "measure weight of " + pointName(static_cast<Index>(i)) +
                                        " must be strictly positive and finite");
}

}  // namespace

// --------------------------------------------------------------------------------------------
// Construction

MetricMeasureSpace MetricMeasureSpace::dense(Eigen::MatrixXd dist, Vector mu, std::string label,
                                             std::uint64_t tripleSeed) {
    const Eigen::Index n = dist.rows();
    if (n == 0 || dist.cols() != n || mu.size() != n)
        fail(ErrorKind::Config, "dense space: distance matrix must be n x n with n = |mu| > 0");
    validateMeasure(mu);

    const double scale = std::max(1.0, dist.cwiseAbs().maxCoeff());
    double resolution = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dist(i, i) != 0.0) fail(ErrorKind::Config, "dense space: d(i,i) != 0 at " + pointName(i));
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d = dist(i, j);
            if (!std::isfinite(d) || d <= 0.0)
                fail(ErrorKind::Config, "dense space: d(" + std::to_string(i) + "," + std::to_string(j) +
                                            ") must be finite and positive");
            if (std::abs(d - dist(j, i)) > kMetricSlack * scale)
                fail(ErrorKind::Config, "dense space: distance matrix is not symmetric");
            resolution = std::min(resolution, d);
        }
    }

    auto triangle = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k) {
        if (dist(i, j) > dist(i, k) + dist(k, j) + kMetricSlack * scale)
            fail(ErrorKind::Config, "dense space: triangle inequality fails on (" + std::to_string(i) + "," +
                                        std::to_string(j) + "," + std::to_string(k) + ")");
    };
    if (n <= 256) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index k = 0; k < n; ++k) triangle(i, j, k);
    } else {
        std::mt19937_64 rng(tripleSeed);
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        for (int s = 0; s < 10000; ++s) triangle(pick(rng), pick(rng), pick(rng));
    }

    MetricMeasureSpace space;
    space.n_ = static_cast<Index>(n);
    space.diameter_ = dist.maxCoeff();
    space.resolution_ = n > 1 ? resolution : 0.0;
    space.dist_ = std::move(dist);
    space.mu_ = std::move(mu);
    space.label_ = std::move(label);
    space.finalizeMeasure();
    return space;
}

MetricMeasureSpace MetricMeasureSpace::embedded(Eigen::MatrixXd coords, std::vector<double> periods, Vector mu,
                                                std::string label, SpaceGeometry geometry,
                                                SpaceProvenance provenance) {
    const Eigen::Index n = coords.rows();
    const Eigen::Index k = coords.cols();
    if (n == 0 || k == 0 || mu.size() != n || static_cast<Eigen::Index>(periods.size()) != k)
        fail(ErrorKind::Config, "embedded space: need n x k coordinates, k periods and n weights");
    validateMeasure(mu);
    for (Eigen::Index c = 0; c < k; ++c) {
        if (!(periods[c] >= 0.0) || !std::isfinite(periods[c]))
            fail(ErrorKind::Config, "embedded space: periods must be finite and >= 0");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(coords(i, c))) fail(ErrorKind::Config, "embedded space: non-finite coordinate");
            if (periods[c] > 0.0) {
                double v = std::fmod(coords(i, c), periods[c]);
                if (v < 0.0) v += periods[c];
                coords(i, c) = v;
            }
        }
    }

    MetricMeasureSpace space;
    space.n_ = static_cast<Index>(n);
    space.coords_ = std::move(coords);
    space.periods_ = std::move(periods);
    space.mu_ = std::move(mu);
    space.label_ = std::move(label);
    space.geometry_ = geometry;
    space.provenance_ = std::move(provenance);
    space.buildGrid();
    space.finalizeMeasure();

    double diam2 = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
        const double span = space.periods_[c] > 0.0 ? 0.5 * space.periods_[c]
                                                     : space.coords_.col(c).maxCoeff() - space.coords_.col(c).minCoeff();
        diam2 += span * span;
    }
    space.diameter_ = std::sqrt(diam2);

    // Nearest-neighbor distance per point, searching outward through the grid.
    double resolution = std::numeric_limits<double>::infinity();
    const double startRadius = *std::min_element(space.cellSize_.begin(), space.cellSize_.end());
    for (Index x = 0; x < space.n_ && space.n_ > 1; ++x) {
        double nearest = std::numeric_limits<double>::infinity();
        for (double r = startRadius; !std::isfinite(nearest); r *= 2.0) {
            space.forEachWithin(x, r, true, [&](Index y, double d) {
                if (y != x) nearest = std::min(nearest, d);
            });
            if (r > 2.0 * space.diameter_ + 1.0) break;
        }
        if (nearest == 0.0) fail(ErrorKind::Config, "embedded space: duplicate coordinates at " + pointName(x));
        resolution = std::min(resolution, nearest);
    }
    space.resolution_ = space.n_ > 1 ? resolution : 0.0;
    return space;
}

void MetricMeasureSpace::finalizeMeasure() { totalMu_ = mu_.sum(); }

void MetricMeasureSpace::buildGrid() {
    const int k = static_cast<int>(coords_.cols());
    const int perDim = std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(n_), 1.0 / k))));
    lower_.assign(k, 0.0);
    extent_.assign(k, 1.0);
    cells_.assign(k, perDim);
    cellSize_.assign(k, 1.0);
    for (int c = 0; c < k; ++c) {
        if (periods_[c] > 0.0) {
            lower_[c] = 0.0;
            extent_[c] = periods_[c];
        } else {
            lower_[c] = coords_.col(c).minCoeff();
            const double span = coords_.col(c).maxCoeff() - lower_[c];
            extent_[c] = span > 0.0 ? span : 1.0;
        }
        cellSize_[c] = extent_[c] / cells_[c];
    }

    std::vector<int> cellOf(n_);
    int total = 1;
    for (int c = 0; c < k; ++c) total *= cells_[c];
    cellStart_.assign(total + 1, 0);
    for (Index i = 0; i < n_; ++i) {
        int cell = 0;
        for (int c = k - 1; c >= 0; --c) {
            const int v = std::clamp(static_cast<int>((coords_(i, c) - lower_[c]) / cellSize_[c]), 0, cells_[c] - 1);
            cell = cell * cells_[c] + v;
        }
        cellOf[i] = cell;
        ++cellStart_[cell + 1];
    }
    for (int c = 0; c < total; ++c) cellStart_[c + 1] += cellStart_[c];
    cellPoints_.assign(n_, 0);
    std::vector<int> fill(cellStart_.begin(), cellStart_.end() - 1);
    for (Index i = 0; i < n_; ++i) cellPoints_[fill[cellOf[i]]++] = i;
}

// --------------------------------------------------------------------------------------------
// Queries

void MetricMeasureSpace::checkIndex(Index x) const {
    if (x < 0 || x >= n_)
        fail(ErrorKind::Precondition, "point index " + std::to_string(x) + " out of range [0, " +
                                          std::to_string(n_) + ")");
}

double MetricMeasureSpace::distance(Index i, Index j) const {
    checkIndex(i);
    checkIndex(j);
    return isDense() ? dist_(i, j) : embeddedDistance(i, j);
}

IndexSet MetricMeasureSpace::ball(Index x, double r) const {
    checkIndex(x);
    require(r > 0.0, "ball: radius must be positive");
    IndexSet out;
    forEachWithin(x, r, false, [&](Index y, double) { out.push_back(y); });
    std::sort(out.begin(), out.end());
    return out;
}

IndexSet MetricMeasureSpace::closedBall(Index x, double r) const {
    checkIndex(x);
    require(r >= 0.0, "closedBall: radius must be nonnegative");
    IndexSet out;
    forEachWithin(x, r, true, [&](Index y, double) { out.push_back(y); });
    std::sort(out.begin(), out.end());
    return out;
}

double MetricMeasureSpace::ballMeasure(Index x, double r) const {
    checkIndex(x);
    require(r > 0.0, "ballMeasure: radius must be positive");
    double m = 0.0;
    forEachWithin(x, r, false, [&](Index y, double) { m += mu_[y]; });
    return m;
}

Vector MetricMeasureSpace::ballMeasures(double r, unsigned workers) const {
    require(r > 0.0, "ballMeasures: radius must be positive");
    Vector out(n_);
    parallelFor(static_cast<std::size_t>(n_), workers, [&](std::size_t x) {
        double m = 0.0;
        forEachWithin(static_cast<Index>(x), r, false, [&](Index y, double) { m += mu_[y]; });
        out[static_cast<Eigen::Index>(x)] = m;
    });
    return out;
}

// --------------------------------------------------------------------------------------------
// Diagnostics

std::vector<RadiusProbe> sampleProbes(const MetricMeasureSpace& space, const ProbeSpec& spec) {
    require(spec.count > 0, "sampleProbes: need at least one probe");
    require(spec.rMin > 0.0 && spec.rMax >= spec.rMin, "sampleProbes: need 0 < rMin <= rMax");
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<Index> pickPoint(0, space.size() - 1);
    std::uniform_real_distribution<double> pickLog(std::log(spec.rMin), std::log(spec.rMax));
    std::vector<RadiusProbe> probes;
    probes.reserve(spec.count);
    for (std::size_t s = 0; s < spec.count; ++s) {
        RadiusProbe p{pickPoint(rng), std::exp(pickLog(rng))};
        if (spec.snapUnit > 0.0) p.r = (std::floor(p.r / spec.snapUnit) + 0.5) * spec.snapUnit;
        probes.push_back(p);
    }
    return probes;
}

DoublingReport doublingEstimate(const MetricMeasureSpace& space, std::span<const RadiusProbe> probes,
                                std::uint64_t seed) {
    require(!probes.empty(), "doublingEstimate: probes must be nonempty");
    DoublingReport report;
    report.seed = seed;
    for (const auto& p : probes) {
        const double inner = space.ballMeasure(p.x, p.r);
        const double outer = space.ballMeasure(p.x, 2.0 * p.r);
        report.cD = std::max(report.cD, outer / inner);
    }
    report.qMu = std::log2(report.cD);
    report.radiiSampled.assign(probes.begin(), probes.end());
    return report;
}

DoublingReport doublingEstimate(const MetricMeasureSpace& space, const ProbeSpec& spec) {
    const auto probes = sampleProbes(space, spec);
    return doublingEstimate(space, probes, spec.seed);
}

PoincareReport poincareEstimate(const MetricMeasureSpace& space, const GradientOracle& gradient, double lambda,
                                std::span<const Vector> testFunctions, std::span<const RadiusProbe> balls,
                                std::uint64_t seed) {
    require(lambda >= 1.0, "poincareEstimate: lambda must be >= 1");
    require(!testFunctions.empty() && !balls.empty(), "poincareEstimate: need test functions and balls");
    const Vector& mu = space.measure();
    PoincareReport report;
    report.lambda = lambda;
    report.testFunctions = testFunctions.size();
    report.seed = seed;
    for (const Vector& u : testFunctions) {
        require(u.size() == space.size(), "poincareEstimate: test function has wrong length");
        const Vector lip = gradient(u);
        for (const auto& b : balls) {
            double mass = 0.0, moment = 0.0;
            space.forEachWithin(b.x, b.r, false, [&](Index y, double) {
                mass += mu[y];
                moment += mu[y] * u[y];
            });
            const double mean = moment / mass;
            double oscillation = 0.0;
            space.forEachWithin(b.x, b.r, false, [&](Index y, double) { oscillation += mu[y] * std::abs(u[y] - mean); });
            double bigMass = 0.0, lipMass = 0.0;
            space.forEachWithin(b.x, lambda * b.r, false, [&](Index y, double) {
                bigMass += mu[y];
                lipMass += mu[y] * lip[y];
            });
            const double denominator = b.r * lipMass / bigMass;
            if (!(denominator > 0.0)) continue;
            ++report.admissibleProbes;
            report.cP = std::max(report.cP, (oscillation / mass) / denominator);
        }
    }
    if (report.admissibleProbes == 0) fail(ErrorKind::Numerical, "poincareEstimate: no admissible probe");
    return report;
}

std::vector<Vector> poincareTestFunctions(const MetricMeasureSpace& space, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pickPoint(0, space.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double diam = std::max(space.diameter(), space.resolution());
    auto distancesFrom = [&](Index c) {
        Vector d(space.size());
        for (Index y = 0; y < space.size(); ++y) d[y] = space.distance(c, y);
        return d;
    };

    std::vector<Vector> out;
    for (std::size_t s = 0; s < count; ++s) {
        Vector u = Vector::Zero(space.size());
        if (s % 2 == 0) {
            for (int term = 0; term < 3; ++term) {
                const Vector d = distancesFrom(pickPoint(rng));
                const double amplitude = 2.0 * unit(rng) - 1.0;
                const double width = (0.1 + 0.4 * unit(rng)) * diam;
                u += amplitude * (std::numbers::pi * d.array() / width).cos().matrix();
            }
        } else {
            const Vector d = distancesFrom(pickPoint(rng));
            const double radius = (0.1 + 0.3 * unit(rng)) * diam;
            const double width = (0.02 + 0.1 * unit(rng)) * diam;
            u = ((radius - d.array()) / width).min(1.0).max(0.0).matrix();
        }
        out.push_back(std::move(u));
    }
    return out;
}

// --------------------------------------------------------------------------------------------
// Coverings

EpsilonNet epsilonNet(const MetricMeasureSpace& space, double eps, double lambda) {
    require(eps > 0.0, "epsilonNet: eps must be positive");
    require(lambda >= 1.0, "epsilonNet: lambda must be >= 1");
    EpsilonNet net;
    net.eps = eps;
    net.dilation = 4.0 * lambda;
    net.belowResolution = eps < space.resolution();

    std::vector<char> isCenter(space.size(), 0);
    for (Index x = 0; x < space.size(); ++x) {
        bool covered = false;
        space.forEachWithin(x, 0.5 * eps, false, [&](Index y, double) { covered = covered || isCenter[y]; });
        if (!covered) {
            isCenter[x] = 1;
            net.centers.push_back(x);
        }
    }

    std::vector<int> hits(space.size(), 0);
    for (Index c : net.centers)
        space.forEachWithin(c, net.dilation * eps, false, [&](Index y, double) { ++hits[y]; });
    net.overlap = *std::max_element(hits.begin(), hits.end());
    return net;
}

PartitionOfUnity partitionOfUnity(const MetricMeasureSpace& space, const EpsilonNet& net, double edgeRadius) {
    require(!net.centers.empty() && net.eps > 0.0, "partitionOfUnity: empty net");
    const double eps = net.eps;
    const Index m = static_cast<Index>(net.centers.size());
    std::vector<Eigen::Triplet<double>> entries;
    Vector total = Vector::Zero(space.size());
    for (Index i = 0; i < m; ++i) {
        space.forEachWithin(net.centers[i], 2.0 * eps, false, [&](Index x, double d) {
            const double psi = 1.0 - d / (2.0 * eps);
            if (psi > 0.0) {
                entries.emplace_back(i, x, psi);
                total[x] += psi;
            }
        });
    }
    for (Index x = 0; x < space.size(); ++x)
        if (!(total[x] > 0.0))
            fail(ErrorKind::Precondition, "partitionOfUnity: " + pointName(x) + " is not covered by the net");
    for (auto& e : entries) e = Eigen::Triplet<double>(e.row(), e.col(), e.value() / total[e.col()]);

    PartitionOfUnity pou;
    pou.eps = eps;
    pou.phi.resize(m, space.size());
    pou.phi.setFromTriplets(entries.begin(), entries.end());
    pou.phi.makeCompressed();
    pou.edgeRadius = edgeRadius > 0.0 ? edgeRadius : 0.5 * eps;
    pou.lipBound.assign(m, 0.0);

    using InnerIt = Eigen::SparseMatrix<double>::InnerIterator;
    for (Index x = 0; x < space.size(); ++x) {
        space.forEachWithin(x, pou.edgeRadius, true, [&](Index y, double d) {
            if (y <= x) return;
            InnerIt a(pou.phi, x), b(pou.phi, y);
            while (a || b) {
                Index row;
                double diff;
                if (a && (!b || a.row() < b.row())) {
                    row = static_cast<Index>(a.row());
                    diff = a.value();
                    ++a;
                } else if (b && (!a || b.row() < a.row())) {
                    row = static_cast<Index>(b.row());
                    diff = b.value();
                    ++b;
                } else {
                    row = static_cast<Index>(a.row());
                    diff = a.value() - b.value();
                    ++a;
                    ++b;
                }
                pou.lipBound[row] = std::max(pou.lipBound[row], std::abs(diff) / d);
            }
        });
    }
    for (double l : pou.lipBound) pou.lipConstant = std::max(pou.lipConstant, l * eps);
    return pou;
}

// --------------------------------------------------------------------------------------------
// Set geometry

IndexSet tubularNeighborhood(const MetricMeasureSpace& space, const IndexSet& set, double r) {
    require(r > 0.0, "tubularNeighborhood: radius must be positive");
    std::vector<char> inTube(space.size(), 0);
    for (Index x : set) {
        space.checkIndex(x);
        space.forEachWithin(x, r, false, [&](Index y, double) { inTube[y] = 1; });
    }
    IndexSet out;
    for (Index y = 0; y < space.size(); ++y)
        if (inTube[y]) out.push_back(y);
    return out;
}

IndexSet boundaryVertices(const MetricMeasureSpace& space, const IndexSet& set, double radius) {
    const auto inSet = membershipMask(set, space.size());
    IndexSet out;
    for (Index x = 0; x < space.size(); ++x) {
        bool across = false;
        space.forEachWithin(x, radius * (1.0 + 1e-9), true, [&](Index y, double) { across = across || inSet[y] != inSet[x]; });
        if (across) out.push_back(x);
    }
    return out;
}

FunctionalLadder minkowskiContent(const MetricMeasureSpace& space, const IndexSet& boundary,
                                  std::span<const double> rLadder, double windowFactor) {
    require(!rLadder.empty(), "minkowskiContent: empty radius ladder");
    FunctionalLadder out;
    out.name = "minkowskiContent";
    out.window = lengthWindow(space.resolution(), windowFactor);
    const Vector& mu = space.measure();
    for (std::size_t k = 0; k < rLadder.size(); ++k) {
        const double r = rLadder[k];
        require(r > 0.0 && (k == 0 || r < rLadder[k - 1]), "minkowskiContent: radii must be positive and strictly decreasing");
        double tube = 0.0;
        if (!boundary.empty())
            for (Index y : tubularNeighborhood(space, boundary, r)) tube += mu[y];
        LadderSample s{r, tube / r, out.window.contains(r)};
        if (s.inWindow) out.minInWindow = out.minInWindow ? std::min(*out.minInWindow, s.value) : s.value;
        out.samples.push_back(s);
    }
    out.limitEst = out.minInWindow;
    out.verdict = out.limitEst ? Verdict::Plateau : Verdict::NoPlateau;
    return out;
}

IndexSet sigmaGammaBoundary(const MetricMeasureSpace& space, const IndexSet& set, double gamma,
                            std::span<const double> rLadder) {
    require(gamma > 0.0 && gamma <= 0.5, "sigmaGammaBoundary: gamma must lie in (0, 1/2]");
    require(!rLadder.empty(), "sigmaGammaBoundary: empty radius ladder");
    const auto inSet = membershipMask(set, space.size());
    const Vector& mu = space.measure();
    IndexSet out;
    for (Index x = 0; x < space.size(); ++x) {
        double best = 0.0;
        for (double r : rLadder) {
            double in = 0.0, outside = 0.0;
            space.forEachWithin(x, r, false, [&](Index y, double) { (inSet[y] ? in : outside) += mu[y]; });
            best = std::max(best, std::min(in, outside) / (in + outside));
        }
        if (best >= gamma) out.push_back(x);
    }
    return out;
}

}  // namespace heatperim
