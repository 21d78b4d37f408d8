#pragma once

// Brute-force references shared by the oracle tests and the acceptance binary. They read
// distances, weights and generator entries from the library and nothing else.
#include "heatperim/generator.hpp"
#include "heatperim/mmspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace brute {

using heatperim::Generator;
using heatperim::Index;
using heatperim::MetricMeasureSpace;
using heatperim::Vector;

template <class Fn>
inline double simpson(Fn&& f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return sum * h / 3.0;
}

inline Eigen::MatrixXd denseGenerator(const Generator& gen) { return Eigen::MatrixXd(gen.matrix()); }

inline double openBallMeasure(const MetricMeasureSpace& s, Index x, double r) {
    double m = 0.0;
    for (Index y = 0; y < s.size(); ++y)
        if (s.distance(x, y) < r) m += s.measure(y);
    return m;
}

// Unordered strip pairs {x, y}, 0 < d < eps, with weight mu(x) mu(y) / sqrt(mu B(x) mu B(y)).
struct StripPair {
    Index x, y;
    double w;
};

inline std::vector<StripPair> stripPairs(const MetricMeasureSpace& s, double eps) {
    std::vector<double> ball(s.size());
    for (Index x = 0; x < s.size(); ++x) ball[x] = openBallMeasure(s, x, eps);
    std::vector<StripPair> out;
    for (Index x = 0; x < s.size(); ++x)
        for (Index y = x + 1; y < s.size(); ++y) {
            const double d = s.distance(x, y);
            if (d > 0.0 && d < eps) out.push_back({x, y, s.measure(x) * s.measure(y) / std::sqrt(ball[x] * ball[y])});
        }
    return out;
}

inline double bruteMinCut(const MetricMeasureSpace& s, const Vector& u, double a, double t) {
    const double eps = a - 1.0;
    const auto pairs = stripPairs(s, eps);
    std::vector<Index> free;
    std::vector<char> base(s.size(), 0);
    for (Index x = 0; x < s.size(); ++x) {
        if (u[x] > a * t) base[x] = 1;
        else if (u[x] > t) free.push_back(x);
    }
    if (free.size() > 16) throw std::invalid_argument("bruteMinCut: too many free vertices");
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << free.size()); ++mask) {
        std::vector<char> in = base;
        for (std::size_t k = 0; k < free.size(); ++k)
            if (mask >> k & 1u) in[free[k]] = 1;
        double cut = 0.0;
        for (const auto& p : pairs)
            if (in[p.x] != in[p.y]) cut += 2.0 * p.w / eps;
        best = std::min(best, cut);
    }
    return best;
}

inline double bruteMazya(const MetricMeasureSpace& s, const Vector& u, double eps) {
    const auto pairs = stripPairs(s, eps);
    std::vector<double> levels(u.data(), u.data() + u.size());
    levels.push_back(0.0);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        // M_t = {u > t} is constant for t in [levels[k], levels[k + 1]).
        double cut = 0.0;
        for (const auto& p : pairs)
            if ((u[p.x] > levels[k]) != (u[p.y] > levels[k])) cut += p.w;
        total += cut * (levels[k + 1] - levels[k]);
    }
    return total / eps;
}

inline double brutePerimeter(const Eigen::MatrixXd& A, const MetricMeasureSpace& s, const std::vector<char>& in) {
    double p = 0.0;
    for (Index i = 0; i < s.size(); ++i)
        for (Index j = 0; j < s.size(); ++j)
            if (i != j && in[i] && !in[j]) p += s.measure(i) * A(i, j) * s.distance(i, j);
    return p;
}

// Gamma(f)(x) = f^T M_x f.
inline Eigen::MatrixXd gammaForm(const Eigen::MatrixXd& A, Index x) {
    const Index n = A.rows();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Index y = 0; y < n; ++y) {
        if (y == x) continue;
        Vector e = Vector::Zero(n);
        e[y] = 1.0;
        e[x] = -1.0;
        M += 0.5 * A(x, y) * e * e.transpose();
    }
    return M;
}

// sup{K : Gamma_2(.)(x) - K Gamma(.)(x) is positive semidefinite}, by bisection.
inline double bisectedCurvature(const Eigen::MatrixXd& A, Index x) {
    const Index n = A.rows();
    std::vector<Eigen::MatrixXd> M(n);
    for (Index y = 0; y < n; ++y) M[y] = gammaForm(A, y);
    Eigen::MatrixXd G2 = Eigen::MatrixXd::Zero(n, n);
    for (Index y = 0; y < n; ++y) G2 += 0.5 * A(x, y) * M[y];
    G2 -= 0.5 * (M[x] * A + A.transpose() * M[x]);
    const Eigen::MatrixXd& G = M[x];
    const double scale = A.cwiseAbs().maxCoeff();
    auto psd = [&](double K) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G2 - K * G, Eigen::EigenvaluesOnly);
        return eig.eigenvalues().minCoeff() >= -1e-12 * scale * scale;
    };
    double lo = -100 * scale, hi = 100 * scale;
    if (!psd(lo) || psd(hi)) throw std::runtime_error("bisectedCurvature: bracket failed");
    for (int it = 0; it < 200 && hi - lo > 1e-12 * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        (psd(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace brute
