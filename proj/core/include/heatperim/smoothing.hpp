#pragma once

#include "heatperim/mmspace.hpp"

#include <span>
#include <vector>

namespace heatperim {

/// lip_rho(u)(x) = max over y != x with d(x, y) <= rho of |u(x) - u(y)| / d(x, y); 0 when the
/// closed rho-ball holds x alone.
Vector localLip(const MetricMeasureSpace& space, const Vector& u, double rho);

struct LipLadder {
    std::vector<double> rhos;
    std::vector<Vector> perRho;
    Vector pointwiseMin;
};

/// localLip along a radius ladder (default {h, 2h, 4h} with h the resolution) with the pointwise minimum.
LipLadder localLipLadder(const MetricMeasureSpace& space, const Vector& u, std::vector<double> rhos = {});

struct DifferenceDensity {
    double eps = 0.0;
    Vector density;  // u~_(B_eps)(x)
    Vector measure;  // mu(x) u~_(B_eps)(x)
    double mass = 0.0;
};

/// u~_(B_eps)(x) = (1 / mu B_eps(x)) sum over y in B_eps(x) of mu(y) |u(x) - u(y)| / eps.
DifferenceDensity averagedDifferenceDensity(const MetricMeasureSpace& space, const Vector& u, double eps);

struct SmoothedFunction {
    double eps = 0.0;
    Vector values;
    IndexSet sourceNet;
    Vector ballAverages;  // u averaged over the closed eps-ball of each center
};

/// u_eps(x) = sum_i (average of u over the closed ball B_eps(x_i)) phi_i(x).
SmoothedFunction discreteConvolution(const MetricMeasureSpace& space, const Vector& u, const EpsilonNet& net,
                                     const PartitionOfUnity& pou);

struct LipEnergyBound {
    double lhs = 0.0;    // sum mu(x) lip(u_eps)(x)
    double rhs = 0.0;    // mass of the difference measure at dilate * eps
    double ratio = 0.0;  // lhs / rhs when defined
    bool ratioDefined = false;
    bool inWindow = true;  // dilate * eps does not exceed the diameter
    double dilate = 6.0;
};

/// Compares the Lipschitz energy of u_eps (lip at radius rho, default the resolution) with the
/// difference measure at the dilated scale.
LipEnergyBound lipEnergyBound(const MetricMeasureSpace& space, const Vector& u, const EpsilonNet& net,
                              const PartitionOfUnity& pou, double dilate = 6.0, double rho = 0.0);

}  // namespace heatperim
