#pragma once

#include "heatperim/builders.hpp"
#include "heatperim/generator.hpp"
#include "heatperim/heat.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace support {

using heatperim::BuiltSpace;
using heatperim::Generator;
using heatperim::Index;
using heatperim::IndexSet;
using heatperim::Vector;

inline BuiltSpace circle(int n, double arc = 0.5) { return heatperim::buildSpace("circle", {{"n", n}, {"arc", arc}}); }

// disk <= 0 builds the bare torus.
inline BuiltSpace torus(int n, double disk = 0.25) {
    nlohmann::json params{{"n", n}};
    if (disk > 0) params["disk"] = disk;
    return heatperim::buildSpace("torus2d", params);
}

inline Generator nearest(const BuiltSpace& b) {
    return heatperim::buildGenerator(b.space, heatperim::GraphRule::radius(b.space->resolution()));
}

inline Vector coordinateMap(const BuiltSpace& b, double (*fn)(double)) {
    const auto& x = b.space->coordinates();
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = fn(x(i, 0));
    return out;
}

inline Vector sinWave(const BuiltSpace& b) {
    return coordinateMap(b, [](double x) { return std::sin(2.0 * std::numbers::pi * x); });
}

inline Vector randomVector(Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

inline IndexSet randomSet(Index n, std::uint64_t seed, double p = 0.5) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick(p);
    IndexSet out;
    for (Index i = 0; i < n; ++i)
        if (pick(rng)) out.push_back(i);
    return out;
}

inline double muInner(const heatperim::MetricMeasureSpace& s, const Vector& a, const Vector& b) {
    return (s.measure().array() * a.array() * b.array()).sum();
}

// Dense space from explicit distances and unit weights.
inline std::shared_ptr<const heatperim::MetricMeasureSpace> denseSpace(const Eigen::MatrixXd& d, const Vector& mu) {
    return std::make_shared<const heatperim::MetricMeasureSpace>(heatperim::MetricMeasureSpace::dense(d, mu, "dense"));
}

}  // namespace support
