#include "heatperim/smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace heatperim {

Vector localLip(const MetricMeasureSpace& space, const Vector& u, double rho) {
    require(u.size() == space.size(), "localLip: vector length does not match the space");
    require(rho > 0.0, "localLip: rho must be positive");
    Vector out = Vector::Zero(space.size());
    for (Index x = 0; x < space.size(); ++x) {
        double best = 0.0;
        space.forEachWithin(x, rho, true, [&](Index y, double d) {
            if (y != x) best = std::max(best, std::abs(u[x] - u[y]) / d);
        });
        out[x] = best;
    }
    return out;
}

LipLadder localLipLadder(const MetricMeasureSpace& space, const Vector& u, std::vector<double> rhos) {
    if (rhos.empty()) {
        const double h = space.resolution();
        rhos = {h, 2.0 * h, 4.0 * h};
    }
    LipLadder out;
    out.rhos = std::move(rhos);
    for (double rho : out.rhos) {
        out.perRho.push_back(localLip(space, u, rho));
        out.pointwiseMin = out.pointwiseMin.size() ? out.pointwiseMin.cwiseMin(out.perRho.back()) : out.perRho.back();
    }
    return out;
}

DifferenceDensity averagedDifferenceDensity(const MetricMeasureSpace& space, const Vector& u, double eps) {
    require(u.size() == space.size(), "averagedDifferenceDensity: vector length does not match the space");
    require(eps > 0.0, "averagedDifferenceDensity: eps must be positive");
    const Vector& mu = space.measure();
    DifferenceDensity out;
    out.eps = eps;
    out.density = Vector::Zero(space.size());
    for (Index x = 0; x < space.size(); ++x) {
        double mass = 0.0, spread = 0.0;
        space.forEachWithin(x, eps, false, [&](Index y, double) {
            mass += mu[y];
            spread += mu[y] * std::abs(u[x] - u[y]);
        });
        out.density[x] = spread / (mass * eps);
    }
    out.measure = mu.cwiseProduct(out.density);
    out.mass = out.measure.sum();
    return out;
}

SmoothedFunction discreteConvolution(const MetricMeasureSpace& space, const Vector& u, const EpsilonNet& net,
                                     const PartitionOfUnity& pou) {
    require(u.size() == space.size(), "discreteConvolution: vector length does not match the space");
    require(pou.phi.rows() == static_cast<Eigen::Index>(net.centers.size()) && pou.phi.cols() == space.size(),
            "discreteConvolution: partition of unity does not match the net");
    const Vector& mu = space.measure();
    SmoothedFunction out;
    out.eps = net.eps;
    out.sourceNet = net.centers;
    out.ballAverages.resize(static_cast<Eigen::Index>(net.centers.size()));
    for (std::size_t i = 0; i < net.centers.size(); ++i) {
        double mass = 0.0, moment = 0.0;
        space.forEachWithin(net.centers[i], net.eps, true, [&](Index y, double) {
            mass += mu[y];
            moment += mu[y] * u[y];
        });
        out.ballAverages[static_cast<Eigen::Index>(i)] = moment / mass;
    }
    out.values = pou.phi.transpose() * out.ballAverages;
    return out;
}

LipEnergyBound lipEnergyBound(const MetricMeasureSpace& space, const Vector& u, const EpsilonNet& net,
                              const PartitionOfUnity& pou, double dilate, double rho) {
    require(dilate > 0.0, "lipEnergyBound: dilate must be positive");
    const SmoothedFunction smooth = discreteConvolution(space, u, net, pou);
    LipEnergyBound out;
    out.dilate = dilate;
    out.inWindow = dilate * net.eps <= space.diameter();
    out.lhs = space.measure().dot(localLip(space, smooth.values, rho > 0.0 ? rho : space.resolution()));
    out.rhs = averagedDifferenceDensity(space, u, dilate * net.eps).mass;
    out.ratioDefined = out.rhs > 0.0;
    out.ratio = out.ratioDefined ? out.lhs / out.rhs : 0.0;
    return out;
}

}  // namespace heatperim
