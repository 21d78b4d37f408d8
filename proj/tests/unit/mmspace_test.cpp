#include <doctest.h>

#include "heatperim/mmspace.hpp"
#include "heatperim/smoothing.hpp"
#include "support.hpp"

#include <algorithm>
#include <set>

using namespace heatperim;
using support::circle;
using support::torus;

TEST_CASE("ball on the 8-point circle") {
    auto b = circle(8);
    CHECK(b.space->ball(0, 0.2) == IndexSet{0, 1, 7});
    CHECK(b.space->ball(3, b.space->diameter() + 1.0).size() == 8);
    CHECK(b.space->ball(5, 0.5 * b.space->resolution()) == IndexSet{5});
    CHECK_THROWS_AS(b.space->ball(8, 0.1), Error);
}

TEST_CASE("ballMeasure") {
    auto b = circle(8);
    CHECK(b.space->ballMeasure(0, 0.2) == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
    CHECK(b.space->ballMeasure(2, 10.0) == doctest::Approx(b.space->totalMeasure()));

    auto line = buildSpace("weightedLine", {{"n", 16}, {"density", "geometric:0.5"}});
    const double h = line.space->resolution();
    CHECK(line.space->ballMeasure(0, 1.5 * h) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("ball monotonicity and closed balls") {
    auto b = buildSpace("pointCloud", {{"n", 300}, {"dim", 2}, {"seed", 4}});
    for (Index x : {0, 17, 299}) {
        IndexSet prev;
        for (double r : {0.01, 0.05, 0.1, 0.3, 1.0}) {
            IndexSet cur = b.space->ball(x, r);
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            IndexSet closed = b.space->closedBall(x, r);
            CHECK(std::includes(closed.begin(), closed.end(), cur.begin(), cur.end()));
            prev = std::move(cur);
        }
    }
}

TEST_CASE("dense construction validates the metric axioms") {
    Eigen::MatrixXd d(3, 3);
    d << 0, 1, 5, 1, 0, 1, 5, 1, 0;
    CHECK_THROWS_AS(MetricMeasureSpace::dense(d, Vector::Ones(3), "bad"), Error);
    d(0, 2) = d(2, 0) = 2.0;
    CHECK_NOTHROW(MetricMeasureSpace::dense(d, Vector::Ones(3), "ok"));
    CHECK_THROWS_AS(MetricMeasureSpace::dense(d, Vector::Zero(3), "zero mass"), Error);
    Eigen::MatrixXd asym = d;
    asym(0, 1) = 1.5;
    CHECK_THROWS_AS(MetricMeasureSpace::dense(asym, Vector::Ones(3), "asym"), Error);
}

TEST_CASE("embedded metric matches brute force on a point cloud") {
    auto b = buildSpace("pointCloud", {{"n", 120}, {"dim", 2}, {"seed", 9}});
    const auto& s = *b.space;
    for (Index i = 0; i < s.size(); i += 7)
        for (Index j = 0; j < s.size(); j += 5)
            for (Index k = 0; k < s.size(); k += 11) CHECK(s.distance(i, j) <= s.distance(i, k) + s.distance(k, j) + 1e-15);
}

TEST_CASE("doubling constant") {
    auto b = circle(1024);
    const double h = b.space->resolution();
    auto rep = doublingEstimate(*b.space, ProbeSpec{128, 4 * h, 0.25, 3, h});
    CHECK(rep.cD == doctest::Approx(2.0).epsilon(0.05));
    CHECK(rep.qMu == doctest::Approx(std::log2(rep.cD)));
    CHECK(rep.radiiSampled.size() == 128);

    auto coarse = circle(512), fine = circle(2048);
    const double c1 = doublingEstimate(*coarse.space, ProbeSpec{96, 0.01, 0.2, 5, 1.0 / 512}).cD;
    const double c2 = doublingEstimate(*fine.space, ProbeSpec{96, 0.01, 0.2, 5, 1.0 / 2048}).cD;
    CHECK(std::abs(c1 - c2) < 0.1);

    auto single = support::denseSpace(Eigen::MatrixXd::Zero(1, 1), Vector::Ones(1));
    CHECK(doublingEstimate(*single, ProbeSpec{8, 0.1, 1.0, 1, 0.0}).cD == 1.0);

    auto t = torus(64);
    const double th = t.space->resolution();
    const double cT = doublingEstimate(*t.space, ProbeSpec{64, 4 * th, 0.12, 2, th}).cD;
    CHECK(cT == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("Poincare constant") {
    auto b = circle(1024);
    const double h = b.space->resolution();
    GradientOracle lip = [&](const Vector& u) { return localLip(*b.space, u, h); };
    auto probes = sampleProbes(*b.space, ProbeSpec{64, 8 * h, 0.25, 11, h});

    std::vector<Vector> constant{Vector::Constant(1024, 3.0)};
    CHECK_THROWS_AS(poincareEstimate(*b.space, lip, 1.0, constant, probes), Error);

    std::vector<Vector> wave{support::sinWave(b)};
    auto rep = poincareEstimate(*b.space, lip, 1.0, wave, probes, 11);
    CHECK(std::isfinite(rep.cP));
    CHECK(rep.cP <= 1.2);
    CHECK(rep.admissibleProbes > 0);

    auto interval = buildSpace("interval", {{"n", 512}});
    GradientOracle ilip = [&](const Vector& u) { return localLip(*interval.space, u, interval.space->resolution()); };
    std::vector<Vector> linear{interval.space->coordinates().col(0)};
    auto iprobes = sampleProbes(*interval.space, ProbeSpec{64, 0.02, 0.4, 1, interval.space->resolution()});
    CHECK(poincareEstimate(*interval.space, ilip, 1.0, linear, iprobes).cP <= 1.0 + 1e-12);

    auto tests = poincareTestFunctions(*b.space, 6, 2);
    CHECK(tests.size() == 6);
    CHECK(std::isfinite(poincareEstimate(*b.space, lip, 2.0, tests, probes).cP));
}

TEST_CASE("epsilon net covers and separates") {
    auto b = circle(1024);
    auto net = epsilonNet(*b.space, 0.1);
    CHECK(net.centers.size() >= 10);
    CHECK(net.centers.size() <= 21);
    for (Index x = 0; x < b.space->size(); ++x) {
        double best = 1e9;
        for (Index c : net.centers) best = std::min(best, b.space->distance(x, c));
        CHECK(best <= 0.1);
    }
    for (std::size_t i = 0; i < net.centers.size(); ++i)
        for (std::size_t j = i + 1; j < net.centers.size(); ++j)
            CHECK(b.space->distance(net.centers[i], net.centers[j]) >= 0.05);
    CHECK(net.overlap >= 1);

    CHECK(epsilonNet(*b.space, 2.0).centers.size() == 1);

    Eigen::MatrixXd d(4, 4);
    d << 0, 0.01, 1, 1, 0.01, 0, 1, 1, 1, 1, 0, 0.01, 1, 1, 0.01, 0;
    auto clusters = support::denseSpace(d, Vector::Ones(4));
    auto split = epsilonNet(*clusters, 0.5);
    REQUIRE(split.centers.size() == 2);
    CHECK(split.centers[0] < 2);
    CHECK(split.centers[1] >= 2);
}

TEST_CASE("partition of unity") {
    auto b = circle(1024);
    const double eps = 0.1;
    auto net = epsilonNet(*b.space, eps);
    auto pou = partitionOfUnity(*b.space, net);
    const Eigen::MatrixXd phi = pou.phi;
    for (Index x = 0; x < b.space->size(); ++x) CHECK(phi.col(x).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
        for (Index x = 0; x < b.space->size(); ++x)
            if (phi(i, x) > 0.0) CHECK(b.space->distance(net.centers[i], x) <= 2 * eps);
    CHECK(pou.lipConstant <= 4.0);

    auto whole = epsilonNet(*b.space, 5.0);
    auto one = partitionOfUnity(*b.space, whole);
    CHECK(Eigen::MatrixXd(one.phi).minCoeff() == doctest::Approx(1.0));

    Eigen::MatrixXd d(3, 3);
    d << 0, 5, 5.5, 5, 0, 0.5, 5.5, 0.5, 0;
    auto lone = support::denseSpace(d, Vector::Ones(3));
    auto lnet = epsilonNet(*lone, 1.0);
    auto lpou = partitionOfUnity(*lone, lnet);
    CHECK(Eigen::MatrixXd(lpou.phi)(0, 0) == 1.0);
}

TEST_CASE("tubular neighborhood") {
    auto b = circle(8);
    CHECK(tubularNeighborhood(*b.space, {}, 0.3).empty());
    CHECK(tubularNeighborhood(*b.space, {0}, 0.2) == IndexSet{0, 1, 7});
    CHECK(tubularNeighborhood(*b.space, {3}, 10.0).size() == 8);

    auto cloud = buildSpace("pointCloud", {{"n", 400}, {"dim", 2}, {"seed", 21}});
    const IndexSet e = support::randomSet(400, 5, 0.05);
    for (double r : {0.03, 0.08}) {
        std::set<Index> brute;
        for (Index x : e)
            for (Index y : cloud.space->ball(x, r)) brute.insert(y);
        CHECK(tubularNeighborhood(*cloud.space, e, r) == IndexSet(brute.begin(), brute.end()));
    }
}

TEST_CASE("Minkowski content") {
    auto b = circle(2048);
    const double h = b.space->resolution();
    const auto ladder = geometricLadder(0.05, 8 * h, 8, h);

    auto empty = minkowskiContent(*b.space, {}, ladder);
    for (const auto& s : empty.samples) CHECK(s.value == 0.0);

    const IndexSet boundary = boundaryVertices(*b.space, *b.marked, h);
    CHECK(boundary.size() == 4);
    auto lad = minkowskiContent(*b.space, boundary, ladder);
    for (const auto& s : lad.samples)
        if (s.inWindow) CHECK(s.value == doctest::Approx(4.0).epsilon(0.1));
    REQUIRE(lad.limitEst);
    CHECK(*lad.limitEst == doctest::Approx(4.0).epsilon(0.1));

    auto t = torus(128, 0.0);
    IndexSet square;
    const auto& xy = t.space->coordinates();
    for (Index i = 0; i < t.space->size(); ++i)
        if (xy(i, 0) >= 0.25 && xy(i, 0) < 0.75 && xy(i, 1) >= 0.25 && xy(i, 1) < 0.75) square.push_back(i);
    const double th = t.space->resolution();
    auto sq = minkowskiContent(*t.space, boundaryVertices(*t.space, square, th), geometricLadder(0.1, 4 * th, 5, th));
    REQUIRE(sq.limitEst);
    CHECK(*sq.limitEst >= 2.0);
    CHECK(*sq.limitEst <= 8.0);
}

TEST_CASE("sigma gamma boundary") {
    auto b = circle(256, 0.5);
    const double h = b.space->resolution();
    std::vector<double> rs{4.5 * h, 2.5 * h};
    IndexSet all(256);
    for (Index i = 0; i < 256; ++i) all[i] = i;
    CHECK(sigmaGammaBoundary(*b.space, all, 0.25, rs).empty());

    const auto in = membershipMask(*b.marked, 256);
    IndexSet brute;
    for (Index x = 0; x < 256; ++x) {
        double best = 0.0;
        for (double r : rs) {
            double inside = 0.0, total = 0.0;
            for (Index y : b.space->ball(x, r)) {
                total += b.space->measure(y);
                if (in[y]) inside += b.space->measure(y);
            }
            best = std::max(best, std::min(inside, total - inside) / total);
        }
        if (best >= 0.25) brute.push_back(x);
    }
    const IndexSet got = sigmaGammaBoundary(*b.space, *b.marked, 0.25, rs);
    CHECK(got == brute);
    CHECK(got.size() > 4);
    for (Index x : got) CHECK(std::min({b.space->distance(x, 0), b.space->distance(x, 127), b.space->distance(x, 128),
                                        b.space->distance(x, 255)}) <= 2.5 * h);

    IndexSet even;
    for (Index i = 0; i < 256; i += 2) even.push_back(i);
    CHECK(sigmaGammaBoundary(*b.space, even, 0.25, rs).size() == 256);
}
