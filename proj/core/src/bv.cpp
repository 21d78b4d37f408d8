#include "heatperim/bv.hpp"

#include <algorithm>
#include <cmath>

namespace heatperim {

double edgeTV(const Generator& gen, const Vector& u, const std::optional<IndexSet>& region) {
    require(u.size() == gen.size(), "edgeTV: vector length does not match the space");
    const MetricMeasureSpace& space = gen.space();
    const SparseRowMatrix& A = gen.matrix();
    const Vector& mu = space.measure();
    double total = 0.0;
    if (!region) {
        for (Index i = 0; i < gen.size(); ++i)
            for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
                const Index j = static_cast<Index>(it.col());
                if (j != i && u[i] != u[j]) total += mu[i] * it.value() * space.distance(i, j) * std::abs(u[i] - u[j]);
            }
        return 0.5 * total;
    }
    // Pairs leaving the region are seen from one side only; mu-symmetry supplies the reverse term.
    const auto inRegion = membershipMask(*region, gen.size());
    for (Index i : normalized(*region))
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
            const Index j = static_cast<Index>(it.col());
            if (j == i || u[i] == u[j]) continue;
            const double term = mu[i] * it.value() * space.distance(i, j) * std::abs(u[i] - u[j]);
            total += inRegion[j] ? term : 2.0 * term;
        }
    return 0.5 * total;
}

double gammaTV(const Generator& gen, const Vector& u, const std::optional<IndexSet>& region) {
    const Vector gamma = carreDuChamp(gen, u, u);
    const Vector& mu = gen.space().measure();
    double total = 0.0;
    if (!region) {
        for (Index i = 0; i < gen.size(); ++i) total += mu[i] * std::sqrt(std::max(gamma[i], 0.0));
    } else {
        for (Index i : normalized(*region)) {
            gen.space().checkIndex(i);
            total += mu[i] * std::sqrt(std::max(gamma[i], 0.0));
        }
    }
    return total;
}

double perimeter(const Generator& gen, const IndexSet& set, const std::optional<IndexSet>& region) {
    return edgeTV(gen, indicator(set, gen.size()), region);
}

BVReport bvReport(const Generator& gen, const Vector& u) { return {edgeTV(gen, u), gammaTV(gen, u)}; }

IdentityCheck coareaCheck(const Generator& gen, const Vector& u, std::optional<std::vector<double>> thresholds) {
    require(u.size() == gen.size(), "coareaCheck: vector length does not match the space");
    std::vector<double> levels;
    if (thresholds) {
        levels = std::move(*thresholds);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        require(!levels.empty() && levels.front() <= u.minCoeff() && levels.back() >= u.maxCoeff(),
                "coareaCheck: thresholds must cover the range of u");
    } else {
        levels.assign(u.data(), u.data() + u.size());
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    }

    // perimeterAt[k] = P({u > levels[k]}): an edge is cut by every level in [min, max).
    const std::size_t K = levels.size();
    std::vector<double> delta(K + 1, 0.0);
    const MetricMeasureSpace& space = gen.space();
    const Vector& mu = space.measure();
    const SparseRowMatrix& A = gen.matrix();
    for (Index i = 0; i < gen.size(); ++i)
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
            const Index j = static_cast<Index>(it.col());
            if (j == i || u[i] == u[j]) continue;
            const double w = 0.5 * mu[i] * it.value() * space.distance(i, j);
            const auto first = std::lower_bound(levels.begin(), levels.end(), std::min(u[i], u[j])) - levels.begin();
            const auto last = std::lower_bound(levels.begin(), levels.end(), std::max(u[i], u[j])) - levels.begin();
            delta[first] += w;
            delta[last] -= w;
        }

    IdentityCheck out;
    double running = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) {
        running += delta[k];
        out.lhs += running * (levels[k + 1] - levels[k]);
    }
    out.rhs = edgeTV(gen, u);
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

IsoperimetricReport isoperimetricCheck(const Generator& gen, const IndexSet& set, std::span<const RadiusProbe> balls,
                                       double lambda) {
    require(lambda >= 1.0, "isoperimetricCheck: lambda must be >= 1");
    const MetricMeasureSpace& space = gen.space();
    const auto inSet = membershipMask(set, space.size());
    const Vector chi = indicator(set, space.size());
    const Vector& mu = space.measure();
    IsoperimetricReport report;
    for (const auto& b : balls) {
        double in = 0.0, out = 0.0;
        space.forEachWithin(b.x, b.r, false, [&](Index y, double) { (inSet[y] ? in : out) += mu[y]; });
        const double localPerimeter = edgeTV(gen, chi, space.ball(b.x, 2.0 * lambda * b.r));
        if (!(localPerimeter > 0.0)) continue;
        ++report.retained;
        report.worstRatio = std::max(report.worstRatio, (in * out / (in + out)) / (b.r * localPerimeter));
    }
    if (report.retained == 0)
        fail(ErrorKind::Precondition, "isoperimetricCheck: every probe has vanishing localized perimeter");
    return report;
}

}  // namespace heatperim
