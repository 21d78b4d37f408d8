#include "heatperim/generator.hpp"

#include "heatperim/hash.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

namespace heatperim {

namespace {

constexpr double kEdgeSlack = 1e-9;
constexpr double kGaussianCutoff = 3.0;

double theta(KernelShape shape, double s) {
    return shape == KernelShape::Indicator ? 1.0 : std::exp(-s * s);
}

double kernelReach(KernelShape shape) { return shape == KernelShape::Indicator ? 1.0 : kGaussianCutoff; }

struct Edge {
    Index j;
    double d;
};

std::vector<std::vector<Edge>> radiusNeighbors(const MetricMeasureSpace& space, double reach) {
    std::vector<std::vector<Edge>> nbrs(space.size());
    parallelFor(static_cast<std::size_t>(space.size()), 0, [&](std::size_t i) {
        const Index x = static_cast<Index>(i);
        space.forEachWithin(x, reach, true, [&](Index y, double d) {
            if (y != x) nbrs[i].push_back({y, d});
        });
        std::sort(nbrs[i].begin(), nbrs[i].end(), [](const Edge& a, const Edge& b) { return a.j < b.j; });
    });
    return nbrs;
}

std::vector<std::vector<Edge>> knnNeighbors(const MetricMeasureSpace& space, int k, double& h) {
    const Index n = space.size();
    require(k >= 1 && k < n, "buildGenerator: kNN rule needs 1 <= k < n");
    std::vector<std::vector<Edge>> nearest(n);
    const double start = std::max(space.resolution(), 1e-300);
    parallelFor(static_cast<std::size_t>(n), 0, [&](std::size_t i) {
        const Index x = static_cast<Index>(i);
        std::vector<Edge> found;
        for (double r = 2.0 * start;; r *= 2.0) {
            found.clear();
            space.forEachWithin(x, r, true, [&](Index y, double d) {
                if (y != x) found.push_back({y, d});
            });
            if (static_cast<int>(found.size()) >= k || r > 4.0 * space.diameter() + 1.0) break;
        }
        std::sort(found.begin(), found.end(),
                  [](const Edge& a, const Edge& b) { return a.d < b.d || (a.d == b.d && a.j < b.j); });
        found.resize(std::min<std::size_t>(found.size(), k));
        nearest[i] = std::move(found);
    });
    h = 0.0;
    std::vector<std::vector<Edge>> nbrs(n);
    for (Index x = 0; x < n; ++x) {
        for (const Edge& e : nearest[x]) {
            h = std::max(h, e.d);
            nbrs[x].push_back(e);
            nbrs[e.j].push_back({x, e.d});
        }
    }
    for (auto& list : nbrs) {
        std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.j < b.j; });
        list.erase(std::unique(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.j == b.j; }),
                   list.end());
    }
    return nbrs;
}

void requireConnected(const std::vector<std::vector<Edge>>& nbrs) {
    const Index n = static_cast<Index>(nbrs.size());
    std::vector<Index> component(n, -1);
    std::vector<std::pair<Index, Index>> summary;  // representative, size
    for (Index s = 0; s < n; ++s) {
        if (component[s] >= 0) continue;
        const Index id = static_cast<Index>(summary.size());
        Index size = 0;
        std::vector<Index> stack{s};
        component[s] = id;
        while (!stack.empty()) {
            const Index x = stack.back();
            stack.pop_back();
            ++size;
            for (const Edge& e : nbrs[x])
                if (component[e.j] < 0) {
                    component[e.j] = id;
                    stack.push_back(e.j);
                }
        }
        summary.emplace_back(s, size);
    }
    if (summary.size() == 1) return;
    std::ostringstream msg;
    msg << "proximity graph is disconnected: " << summary.size() << " components";
    const std::size_t shown = std::min<std::size_t>(summary.size(), 8);
    for (std::size_t c = 0; c < shown; ++c)
        msg << (c ? ", " : " [") << "{first point " << summary[c].first << ", " << summary[c].second << " points}";
    msg << (summary.size() > shown ? ", ...]" : "]");
    fail(ErrorKind::Precondition, msg.str());
}

double unitBallVolume(int m) {
    return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

void checkInvariants(const MetricMeasureSpace& space, const SparseRowMatrix& A) {
    const Index n = space.size();
    if (A.rows() != n || A.cols() != n) fail(ErrorKind::Config, "generator: matrix size does not match the space");
    const Vector& mu = space.measure();
    double scale = 0.0;
    for (Index i = 0; i < n; ++i) {
        double rowSum = 0.0, rowScale = 0.0;
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
            if (it.col() != i && it.value() < 0.0)
                fail(ErrorKind::Config, "generator: negative off-diagonal rate at (" + std::to_string(i) + "," +
                                            std::to_string(it.col()) + ")");
            rowSum += it.value();
            rowScale += std::abs(it.value());
        }
        scale = std::max(scale, rowScale);
        if (std::abs(rowSum) > 1e-12 * std::max(rowScale, 1e-300))
            fail(ErrorKind::Config, "generator: row " + std::to_string(i) + " does not sum to zero");
    }
    Eigen::SparseMatrix<double> M = mu.asDiagonal() * Eigen::SparseMatrix<double>(A);
    Eigen::SparseMatrix<double> Mt = M.transpose();
    Eigen::SparseMatrix<double> diff = M - Mt;
    double asym = 0.0, mscale = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    for (int k = 0; k < M.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) mscale = std::max(mscale, std::abs(it.value()));
    if (asym > 1e-12 * mscale) fail(ErrorKind::Config, "generator: mu(i) A(i,j) != mu(j) A(j,i)");
}

}  // namespace

std::string GraphRule::describe() const {
    std::ostringstream out;
    out << std::setprecision(17);
    if (kind == Kind::Radius)
        out << "radius h=" << h;
    else
        out << "knn k=" << k;
    out << (shape == KernelShape::Indicator ? " indicator" : " gaussian");
    return out.str();
}

Generator Generator::fromMatrix(std::shared_ptr<const MetricMeasureSpace> space, SparseRowMatrix A, double h,
                                std::string rule) {
    require(space != nullptr, "Generator::fromMatrix: null space");
    A.makeCompressed();
    checkInvariants(*space, A);
    Generator g;
    g.space_ = std::move(space);
    g.A_ = std::move(A);
    g.h_ = h;
    g.rule_ = std::move(rule);
    return g;
}

Generator Generator::scaled(double c) const {
    require(c > 0.0 && std::isfinite(c), "Generator::scaled: factor must be positive");
    Generator g = *this;
    g.A_ *= c;
    g.cNorm_ *= c;
    return g;
}

Generator buildGenerator(std::shared_ptr<const MetricMeasureSpace> spacePtr, const GraphRule& rule) {
    require(spacePtr != nullptr, "buildGenerator: null space");
    const MetricMeasureSpace& space = *spacePtr;
    const Index n = space.size();
    require(n >= 2, "buildGenerator: need at least two points");

    double h = rule.h;
    std::vector<std::vector<Edge>> nbrs;
    if (rule.kind == GraphRule::Kind::Radius) {
        require(h > 0.0 && std::isfinite(h), "buildGenerator: radius h must be positive");
        if (h < space.resolution() * (1.0 - kEdgeSlack))
            fail(ErrorKind::Precondition, "buildGenerator: h is below the minimal point spacing; no edges exist");
        nbrs = radiusNeighbors(space, kernelReach(rule.shape) * h * (1.0 + kEdgeSlack));
    } else {
        nbrs = knnNeighbors(space, rule.k, h);
        require(h > 0.0, "buildGenerator: degenerate kNN scale");
    }
    requireConnected(nbrs);

    const Vector& mu = space.measure();
    const int m = std::max(1, space.geometry().dimension);
    const bool continuum = space.geometry().dimension > 0 && space.geometry().latticeSpacing <= 0.0;
    double M2;
    std::string calibration;
    if (continuum) {
        const double hm2 = std::pow(h, m + 2);
        M2 = rule.shape == KernelShape::Indicator ? unitBallVolume(m) * hm2 / (m + 2)
                                                  : 0.5 * std::pow(std::numbers::pi, 0.5 * m) * hm2;
        calibration = "continuum";
    } else {
        // Median over points of the local second moment: the interior value on a lattice.
        std::vector<double> moments(n);
        for (Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (const Edge& e : nbrs[i]) s += theta(rule.shape, e.d / h) * mu[e.j] * e.d * e.d;
            moments[i] = s / m;
        }
        std::nth_element(moments.begin(), moments.begin() + n / 2, moments.end());
        M2 = moments[n / 2];
        calibration = space.geometry().latticeSpacing > 0.0 ? "lattice" : "empirical";
    }
    require(M2 > 0.0, "buildGenerator: vanishing kernel moment");

    std::vector<Eigen::Triplet<double>> entries;
    for (Index i = 0; i < n; ++i) {
        double diag = 0.0;
        for (const Edge& e : nbrs[i]) {
            const double a = 2.0 * theta(rule.shape, e.d / h) * mu[e.j] / M2;
            entries.emplace_back(i, e.j, a);
            diag -= a;
        }
        entries.emplace_back(i, i, diag);
    }
    SparseRowMatrix A(n, n);
    A.setFromTriplets(entries.begin(), entries.end());
    A.makeCompressed();

    Generator g;
    g.space_ = std::move(spacePtr);
    g.A_ = std::move(A);
    g.h_ = h;
    g.rule_ = rule.describe();
    g.calibration_ = calibration;
    g.cNorm_ = 2.0 * std::pow(h, m + 2) / M2;
    checkInvariants(g.space(), g.A_);
    return g;
}

double dirichletEnergy(const Generator& gen, const Vector& u, const Vector& v) {
    require(u.size() == gen.size() && v.size() == gen.size(), "dirichletEnergy: size mismatch");
    return -(gen.space().measure().array() * u.array() * (gen.matrix() * v).array()).sum();
}

Vector carreDuChamp(const Generator& gen, const Vector& f, const Vector& g) {
    require(f.size() == gen.size() && g.size() == gen.size(), "carreDuChamp: size mismatch");
    const SparseRowMatrix& A = gen.matrix();
    Vector out = Vector::Zero(gen.size());
    for (Index i = 0; i < gen.size(); ++i) {
        double s = 0.0;
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
            const Index j = static_cast<Index>(it.col());
            if (j != i) s += it.value() * (f[j] - f[i]) * (g[j] - g[i]);
        }
        out[i] = 0.5 * s;
    }
    return out;
}

Vector intrinsicMetric(const Generator& gen, Index x) {
    const MetricMeasureSpace& space = gen.space();
    space.checkIndex(x);
    const SparseRowMatrix& A = gen.matrix();
    const Index n = gen.size();
    std::vector<int> degree(n, 0);
    for (Index i = 0; i < n; ++i)
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it)
            if (it.col() != i && it.value() > 0.0) ++degree[i];

    // A(j,i) = mu(i) A(i,j) / mu(j) avoids a transposed lookup.
    const Vector& mu = space.measure();
    Vector dist = Vector::Constant(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[x] = 0.0;
    queue.emplace(0.0, x);
    while (!queue.empty()) {
        const auto [d, i] = queue.top();
        queue.pop();
        if (d > dist[i]) continue;
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
            const Index j = static_cast<Index>(it.col());
            if (j == i || it.value() <= 0.0) continue;
            const double aij = it.value();
            const double aji = mu[i] * aij / mu[j];
            const double len = std::min(std::sqrt(2.0 / (degree[i] * aij)), std::sqrt(2.0 / (degree[j] * aji)));
            if (d + len < dist[j]) {
                dist[j] = d + len;
                queue.emplace(dist[j], j);
            }
        }
    }
    if (!dist.allFinite()) fail(ErrorKind::Precondition, "intrinsicMetric: generator graph is disconnected");
    return dist;
}

void exportGenerator(const Generator& gen, const std::string& stem) {
    std::ofstream csv(stem + ".csv");
    if (!csv) fail(ErrorKind::Config, "exportGenerator: cannot open " + stem + ".csv");
    csv << "i,j,value\n" << std::setprecision(17);
    const SparseRowMatrix& A = gen.matrix();
    for (Index i = 0; i < gen.size(); ++i)
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) csv << i << ',' << it.col() << ',' << it.value() << '\n';

    nlohmann::json side = {{"h", gen.scale()},
                           {"rule", gen.rule()},
                           {"calibration", gen.calibration()},
                           {"calibrationConstant", gen.calibrationConstant()},
                           {"muHash", vectorHash(gen.space().measure())}};
    std::ofstream json(stem + ".json");
    if (!json) fail(ErrorKind::Config, "exportGenerator: cannot open " + stem + ".json");
    json << side.dump(2) << '\n';
}

}  // namespace heatperim
