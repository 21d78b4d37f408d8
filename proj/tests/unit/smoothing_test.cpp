#include <doctest.h>

#include "heatperim/bv.hpp"
#include "heatperim/functionals.hpp"
#include "heatperim/smoothing.hpp"
#include "support.hpp"

using namespace heatperim;
using support::circle;

namespace {

double l1Distance(const MetricMeasureSpace& s, const Vector& a, const Vector& b) {
    return (s.measure().array() * (a - b).array().abs()).sum();
}

SmoothedFunction smooth(const MetricMeasureSpace& s, const Vector& u, double eps) {
    const auto net = epsilonNet(s, eps);
    return discreteConvolution(s, u, net, partitionOfUnity(s, net));
}

}  // namespace

TEST_CASE("local Lipschitz constant") {
    auto b = circle(512);
    const double h = b.space->resolution();
    CHECK(localLip(*b.space, Vector::Constant(512, 7.0), h).cwiseAbs().maxCoeff() == 0.0);

    const Vector x = b.space->coordinates().col(0);
    const Vector lip = localLip(*b.space, x, 2 * h);
    for (Index i = 3; i < 509; ++i) CHECK(lip[i] == doctest::Approx(1.0).epsilon(1e-12));

    const Vector chi = indicator(*b.marked, 512);
    const Vector jump = localLip(*b.space, chi, h);
    for (Index i = 0; i < 512; ++i) {
        const bool adjacent = i == 0 || i == 255 || i == 256 || i == 511;
        CHECK(jump[i] == doctest::Approx(adjacent ? 1.0 / h : 0.0).epsilon(1e-12));
    }

    auto lad = localLipLadder(*b.space, x);
    CHECK(lad.rhos.size() == 3);
    CHECK(lad.pointwiseMin[100] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("averaged difference density") {
    auto b = circle(4096);
    const double h = b.space->resolution();
    CHECK(averagedDifferenceDensity(*b.space, Vector::Ones(4096), 0.01).density.cwiseAbs().maxCoeff() == 0.0);
    for (double eps : geometricLadder(0.05, 8 * h, 4, h))
        CHECK(averagedDifferenceDensity(*b.space, indicator(*b.marked, 4096), eps).mass ==
              doctest::Approx(1.0).epsilon(0.05));

    auto line = buildSpace("weightedLine", {{"n", 600}, {"density", "exp:2"}});
    const double eps = 12.5 * line.space->resolution();
    const Vector ball = line.space->ballMeasures(eps);
    double spread = 1.0;
    for (Index x = 0; x < 600; ++x)
        line.space->forEachWithin(x, eps, false, [&](Index y, double) { spread = std::max(spread, std::sqrt(ball[y] / ball[x])); });
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Vector u = support::randomVector(600, seed);
        const double mass = averagedDifferenceDensity(*line.space, u, eps).mass;
        CHECK(mass <= spread * nearDiagonalEnergy(*line.space, u, eps).value * (1 + 1e-12));
    }
}

TEST_CASE("discrete convolution") {
    auto b = circle(4096);
    auto c = smooth(*b.space, Vector::Constant(4096, -2.5), 0.02);
    CHECK((c.values.array() + 2.5).abs().maxCoeff() <= 1e-12);

    const Vector chi = indicator(*b.marked, 4096);
    const auto s = smooth(*b.space, chi, 0.02);
    CHECK(l1Distance(*b.space, s.values, chi) <= 4 * 0.02);
    CHECK(s.values.minCoeff() >= -1e-12);
    CHECK(s.values.maxCoeff() <= 1.0 + 1e-12);

    const Vector w = support::sinWave(b);
    double prev = 1e300;
    for (double eps : geometricLadder(0.1, 0.004, 6, b.space->resolution())) {
        const auto sw = smooth(*b.space, w, eps);
        const double err = l1Distance(*b.space, sw.values, w);
        CHECK(err < prev);
        prev = err;
        CHECK(sw.values.maxCoeff() <= w.maxCoeff() + 1e-12);
        CHECK(sw.values.minCoeff() >= w.minCoeff() - 1e-12);
    }
}

TEST_CASE("Lipschitz energy of the smoothed function") {
    auto b = circle(1024);
    const auto net = epsilonNet(*b.space, 0.02);
    const auto pou = partitionOfUnity(*b.space, net);
    const auto flat = lipEnergyBound(*b.space, Vector::Ones(1024), net, pou);
    CHECK_FALSE(flat.ratioDefined);

    double ratios[2];
    int k = 0;
    for (int n : {1024, 4096}) {
        auto c = circle(n);
        const double eps = 0.06;
        const auto cnet = epsilonNet(*c.space, eps / 6);
        const auto bound = lipEnergyBound(*c.space, indicator(*c.marked, n), cnet, partitionOfUnity(*c.space, cnet));
        REQUIRE(bound.ratioDefined);
        CHECK(bound.inWindow);
        CHECK(bound.ratio <= 10.0);
        ratios[k++] = bound.ratio;
    }
    CHECK(ratios[1] / ratios[0] >= 0.5);
    CHECK(ratios[1] / ratios[0] <= 2.0);

    auto fine = circle(4096);
    const auto fnet = epsilonNet(*fine.space, 0.005);
    const auto sin = lipEnergyBound(*fine.space, support::sinWave(fine), fnet, partitionOfUnity(*fine.space, fnet));
    CHECK(sin.lhs == doctest::Approx(4.0).epsilon(0.1));
}
