#include "heatperim/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace heatperim {

namespace {

/// Dinic's blocking-flow max-flow on a small directed graph.
class MaxFlow {
public:
    explicit MaxFlow(int nodes) : adj_(nodes), level_(nodes), next_(nodes) {}

    void addArc(int from, int to, double capacity, double reverseCapacity = 0.0) {
        adj_[from].push_back(static_cast<int>(arcs_.size()));
        arcs_.push_back({to, capacity});
        adj_[to].push_back(static_cast<int>(arcs_.size()));
        arcs_.push_back({from, reverseCapacity});
    }

    double run(int source, int sink) {
        double flow = 0.0;
        while (buildLevels(source, sink)) {
            std::fill(next_.begin(), next_.end(), 0);
            while (true) {
                const double pushed = augment(source, sink, std::numeric_limits<double>::infinity());
                if (pushed <= 0.0) break;
                flow += pushed;
            }
        }
        return flow;
    }

private:
    struct Arc {
        int to;
        double residual;
    };

    bool buildLevels(int source, int sink) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<int> queue;
        level_[source] = 0;
        queue.push(source);
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop();
            for (int a : adj_[v])
                if (arcs_[a].residual > kEps && level_[arcs_[a].to] < 0) {
                    level_[arcs_[a].to] = level_[v] + 1;
                    queue.push(arcs_[a].to);
                }
        }
        return level_[sink] >= 0;
    }

    double augment(int v, int sink, double limit) {
        if (v == sink) return limit;
        for (int& i = next_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
            Arc& arc = arcs_[adj_[v][i]];
            if (arc.residual <= kEps || level_[arc.to] != level_[v] + 1) continue;
            const double pushed = augment(arc.to, sink, std::min(limit, arc.residual));
            if (pushed > 0.0) {
                arc.residual -= pushed;
                arcs_[adj_[v][i] ^ 1].residual += pushed;
                return pushed;
            }
        }
        return 0.0;
    }

    static constexpr double kEps = 1e-300;
    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> level_, next_;
};

}  // namespace

DiagonalStrip::DiagonalStrip(const MetricMeasureSpace& space, double eps)
    : space_(space), eps_(eps), ballMeasures_(space.ballMeasures(eps)) {
    require(eps > 0.0, "DiagonalStrip: eps must be positive");
}

StripEnergy nearDiagonalEnergy(const MetricMeasureSpace& space, const Vector& u, double eps, unsigned workers) {
    require(u.size() == space.size(), "nearDiagonalEnergy: vector length does not match the space");
    require(eps > 0.0, "nearDiagonalEnergy: eps must be positive");
    const DiagonalStrip strip(space, eps);
    std::vector<double> partial(space.size(), 0.0);
    std::vector<std::size_t> counts(space.size(), 0);
    parallelFor(static_cast<std::size_t>(space.size()), workers, [&](std::size_t i) {
        const Index x = static_cast<Index>(i);
        double s = 0.0;
        strip.forEachFrom(x, [&](Index y, double) {
            ++counts[i];
            if (u[x] != u[y]) s += strip.weight(x, y) * std::abs(u[x] - u[y]);
        });
        partial[i] = s;
    });
    StripEnergy out;
    for (Index x = 0; x < space.size(); ++x) {
        out.value += partial[x];
        out.pairs += counts[x];
    }
    out.value /= eps;
    out.inWindow = out.pairs > 0 && eps >= 2.0 * space.resolution();
    return out;
}

StripEnergy mazyaEnergy(const MetricMeasureSpace& space, const Vector& u, double a, unsigned workers) {
    require(a > 1.0, "mazyaEnergy: a must exceed 1");
    return nearDiagonalEnergy(space, u, a - 1.0, workers);
}

CoareaQuantity mazyaCoareaQuantity(const MetricMeasureSpace& space, const Vector& u, double eps, unsigned workers) {
    require(u.size() == space.size(), "mazyaCoareaQuantity: vector length does not match the space");
    require(u.minCoeff() >= 0.0, "mazyaCoareaQuantity: u must be nonnegative");
    const DiagonalStrip strip(space, eps);

    std::vector<double> levels(u.data(), u.data() + u.size());
    levels.push_back(0.0);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    auto rank = [&](double v) { return std::lower_bound(levels.begin(), levels.end(), v) - levels.begin(); };

    // Pair (x, y) with u(x) > u(y) is cut by M_t for t in [u(y), u(x)).
    std::vector<double> delta(levels.size() + 1, 0.0);
    for (Index x = 0; x < space.size(); ++x)
        strip.forEachFrom(x, [&](Index y, double) {
            if (u[x] <= u[y]) return;
            const double w = strip.weight(x, y);
            delta[rank(u[y])] += w;
            delta[rank(u[x])] -= w;
        });
    CoareaQuantity out;
    double running = 0.0;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        running += delta[k];
        out.value += running * (levels[k + 1] - levels[k]);
    }
    out.value /= eps;
    out.energy = nearDiagonalEnergy(space, u, eps, workers).value;
    out.ratio = out.energy > 0.0 ? out.value / out.energy : 0.0;
    return out;
}

double conductorCapacity(const MetricMeasureSpace& space, const Vector& u, double a, double t) {
    require(u.size() == space.size(), "conductorCapacity: vector length does not match the space");
    require(a > 1.0, "conductorCapacity: a must exceed 1");
    const Index n = space.size();
    std::vector<char> inner(n), outer(n);
    Index innerCount = 0, outerCount = 0;
    for (Index x = 0; x < n; ++x) {
        inner[x] = u[x] > a * t;
        outer[x] = u[x] > t;
        if (inner[x] && !outer[x]) fail(ErrorKind::Precondition, "conductorCapacity: M_at is not contained in M_t");
        innerCount += inner[x];
        outerCount += outer[x];
    }
    if (innerCount == 0) fail(ErrorKind::Precondition, "conductorCapacity: M_at is empty");
    if (outerCount == n) fail(ErrorKind::Precondition, "conductorCapacity: M_t is the whole space");

    const double eps = a - 1.0;
    const DiagonalStrip strip(space, eps);
    const int source = n, sink = n + 1;
    MaxFlow flow(n + 2);
    const double infinite = std::numeric_limits<double>::infinity();
    for (Index x = 0; x < n; ++x) {
        if (inner[x]) flow.addArc(source, x, infinite);
        if (!outer[x]) flow.addArc(x, sink, infinite);
        strip.forEachFrom(x, [&](Index y, double) {
            if (y < x) return;
            const double c = 2.0 * strip.weight(x, y) / eps;
            flow.addArc(x, y, c, c);
        });
    }
    return flow.run(source, sink);
}

double ledouxLocal(const HeatOperator& op, const IndexSet& set, double t, double tubeScale) {
    require(t > 0.0, "ledouxLocal: t must be positive");
    require(tubeScale > 0.0, "ledouxLocal: tubeScale must be positive");
    const MetricMeasureSpace& space = op.space();
    if (set.empty()) return 0.0;
    const auto inSet = membershipMask(set, space.size());
    const Vector heat = op.apply(indicator(set, space.size()), t);
    double total = 0.0;
    for (Index x : tubularNeighborhood(space, set, tubeScale * std::sqrt(t)))
        if (!inSet[x]) total += space.measure(x) * heat[x];
    return total / std::sqrt(t);
}

double ledouxGlobal(const HeatOperator& op, const IndexSet& set, double t) {
    require(t > 0.0, "ledouxGlobal: t must be positive");
    const MetricMeasureSpace& space = op.space();
    const auto inSet = membershipMask(set, space.size());
    const Vector heat = op.apply(indicator(set, space.size()), t);
    double total = 0.0;
    for (Index x = 0; x < space.size(); ++x)
        if (!inSet[x]) total += space.measure(x) * heat[x];
    return std::sqrt(std::numbers::pi / t) * total;
}

IdentityCheck l1HeatIdentity(const HeatOperator& op, const IndexSet& set, double t) {
    require(t > 0.0, "l1HeatIdentity: t must be positive");
    const MetricMeasureSpace& space = op.space();
    const Vector chi = indicator(set, space.size());
    const Vector heat = op.apply(chi, t);
    const Vector& mu = space.measure();
    IdentityCheck out;
    for (Index x = 0; x < space.size(); ++x) {
        out.lhs += mu[x] * std::abs(heat[x] - chi[x]);
        if (chi[x] == 0.0) out.rhs += 2.0 * mu[x] * heat[x];
    }
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

double deGiorgi(const HeatOperator& op, const Vector& u, double t) {
    require(t > 0.0, "deGiorgi: t must be positive");
    return gammaTV(op.generator(), op.apply(u, t));
}

}  // namespace heatperim
