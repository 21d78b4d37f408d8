#pragma once

#include "heatperim/mmspace.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace heatperim {

/// A built space together with the set its builder marks (arc, disk, union of balls), if any.
struct BuiltSpace {
    std::shared_ptr<const MetricMeasureSpace> space;
    std::optional<IndexSet> marked;
};

/// Builders and their parameters:
///   circle        n, arc (optional: marks {x < arc})
///   interval      n, arc (optional)
///   torus2d       n (side; n^2 points), disk (optional radius around (1/2, 1/2))
///   weightedLine  n, density: "uniform" | "geometric:r" (mu_i = r^i) | "linear:a" (1 + a x) | "exp:a" (e^(a x))
///   pointCloud    n, dim, seed (uniform points on the flat unit torus)
///   shrinkingBallsUnion  n (torus side), k (number of balls)
/// Lattice points sit at i/n (periodic) or (i + 1/2)/n (interval); weights are 1/n per point
/// (1/n^2 on the torus) unless a density says otherwise.
BuiltSpace buildSpace(const std::string& builder, const nlohmann::json& params);

const std::vector<std::string>& builderNames();

/// Union over j = 1..k of the balls B(q_j, 2^-(j+1)) on the n x n torus, with q_j the Halton
/// points in bases 2 and 3. A ball smaller than the lattice spacing keeps only the lattice point
/// nearest to its center, so the discrete set never loses a ball outright.
BuiltSpace shrinkingBallsUnion(int n, int k);

/// Centers and radii used by shrinkingBallsUnion.
struct BallSpec {
    double cx, cy, r;
};
std::vector<BallSpec> shrinkingBalls(int k);

}  // namespace heatperim
