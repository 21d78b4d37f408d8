#pragma once

#include "heatperim/bv.hpp"
#include "heatperim/heat.hpp"
#include "heatperim/ladder.hpp"
#include "heatperim/mmspace.hpp"

namespace heatperim {

/// The eps-neighborhood of the diagonal without the diagonal itself: ordered pairs (x, y) with
/// 0 < d(x, y) < eps. Symmetric by construction.
class DiagonalStrip {
public:
    DiagonalStrip(const MetricMeasureSpace& space, double eps);

    double eps() const { return eps_; }
    const MetricMeasureSpace& space() const { return space_; }

    /// Calls fn(x, y, d) for every ordered pair in the strip with first point x.
    template <class Fn>
    void forEachFrom(Index x, Fn&& fn) const {
        space_.forEachWithin(x, eps_, false, [&](Index y, double d) {
            if (y != x) fn(y, d);
        });
    }

    /// mu(B_eps(x)) for every x.
    const Vector& ballMeasures() const { return ballMeasures_; }
    /// mu(x) mu(y) / sqrt(mu B_eps(x) mu B_eps(y)).
    double weight(Index x, Index y) const {
        const Vector& mu = space_.measure();
        return mu[x] * mu[y] / std::sqrt(ballMeasures_[x] * ballMeasures_[y]);
    }

private:
    const MetricMeasureSpace& space_;
    double eps_;
    Vector ballMeasures_;
};

struct StripEnergy {
    double value = 0.0;
    std::size_t pairs = 0;
    /// eps >= 2x resolution and the strip is nonempty.
    bool inWindow = false;
};

/// (1/eps) sum over the strip of mu(x) mu(y) |u(x) - u(y)| / sqrt(mu B_eps(x) mu B_eps(y)).
StripEnergy nearDiagonalEnergy(const MetricMeasureSpace& space, const Vector& u, double eps, unsigned workers = 1);

/// nearDiagonalEnergy at eps = a - 1.
StripEnergy mazyaEnergy(const MetricMeasureSpace& space, const Vector& u, double a, unsigned workers = 1);

struct CoareaQuantity {
    double value = 0.0;
    double energy = 0.0;  // nearDiagonalEnergy(u, eps)
    double ratio = 0.0;   // value / energy, 0 when the energy vanishes
};

/// (1/eps) int_0^inf sum_{x in M_t} sum_{y in B_eps(x) \ M_t} w(x, y) dt with M_t = {u > t},
/// integrated exactly level by level. Requires u >= 0.
CoareaQuantity mazyaCoareaQuantity(const MetricMeasureSpace& space, const Vector& u, double eps, unsigned workers = 1);

/// L1 capacity of the condenser (closure of M_(at), M_t) for the strip energy with eps = a - 1:
/// a minimum cut where strip pair {x, y} carries capacity 2 w(x, y) / (a - 1).
double conductorCapacity(const MetricMeasureSpace& space, const Vector& u, double a, double t);

/// (1/sqrt t) sum over x in E^(s) \ E of mu(x) (T_t chi_E)(x), with E^(s) the open tube of radius
/// s = tubeScale * sqrt t.
double ledouxLocal(const HeatOperator& op, const IndexSet& set, double t, double tubeScale = 1.0);

/// sqrt(pi / t) sum over x outside E of mu(x) (T_t chi_E)(x).
double ledouxGlobal(const HeatOperator& op, const IndexSet& set, double t);

/// lhs = ||T_t chi_E - chi_E||_L1(mu), rhs = 2 sum over x outside E of mu(x) (T_t chi_E)(x).
IdentityCheck l1HeatIdentity(const HeatOperator& op, const IndexSet& set, double t);

/// gammaTV(T_t u).
double deGiorgi(const HeatOperator& op, const Vector& u, double t);

}  // namespace heatperim
