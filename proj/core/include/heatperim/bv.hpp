#pragma once

#include "heatperim/generator.hpp"

#include <optional>
#include <span>
#include <vector>

namespace heatperim {

/// 1/2 sum over ordered pairs (i, j), i != j, with i or j in `region`, of mu(i) A(i,j) d(i,j) |u(i) - u(j)|.
/// Without a region the sum runs over all pairs. On lattices this is the l1 (anisotropic) total
/// variation with exact co-area.
double edgeTV(const Generator& gen, const Vector& u, const std::optional<IndexSet>& region = std::nullopt);

/// sum over i in `region` of mu(i) sqrt(Gamma(u, u)(i)).
double gammaTV(const Generator& gen, const Vector& u, const std::optional<IndexSet>& region = std::nullopt);

/// edgeTV of the indicator of E.
double perimeter(const Generator& gen, const IndexSet& set, const std::optional<IndexSet>& region = std::nullopt);

struct BVReport {
    double tvEdge = 0.0;
    double tvGamma = 0.0;
};

BVReport bvReport(const Generator& gen, const Vector& u);

struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

/// lhs = sum_k P({u > t_k}) (t_(k+1) - t_k) over sorted thresholds, rhs = edgeTV(u). Thresholds
/// default to the distinct values of u, which makes the identity exact.
IdentityCheck coareaCheck(const Generator& gen, const Vector& u, std::optional<std::vector<double>> thresholds = std::nullopt);

struct IsoperimetricReport {
    double worstRatio = 0.0;
    std::size_t retained = 0;
};

/// max over probes of [mu(B & E) mu(B \ E) / mu(B)] / [r P(E, B_(2 lambda r)(x))], skipping
/// probes whose localized perimeter vanishes. Throws when every probe is skipped.
IsoperimetricReport isoperimetricCheck(const Generator& gen, const IndexSet& set, std::span<const RadiusProbe> balls,
                                       double lambda = 1.0);

}  // namespace heatperim
