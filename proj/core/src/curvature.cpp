#include "heatperim/curvature.hpp"

#include "heatperim/bv.hpp"
#include "heatperim/functionals.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <unordered_map>

namespace heatperim {

namespace {

constexpr double kCheckTol = 1e-8;

double muInner(const Vector& mu, const Vector& a, const Vector& b) {
    return (mu.array() * a.array() * b.array()).sum();
}

}  // namespace

Vector gamma2(const Generator& gen, const Vector& f) {
    const Vector g = carreDuChamp(gen, f, f);
    return 0.5 * gen.apply(g) - carreDuChamp(gen, f, gen.apply(f));
}

LocalCurvature localCurvature(const Generator& gen, Index x, int hops) {
    require(hops >= 2, "bestK: neighborhood radius must be at least 2 hops");
    gen.space().checkIndex(x);
    const SparseRowMatrix& A = gen.matrix();

    std::vector<Index> local{x};
    std::unordered_map<Index, int> position{{x, 0}};
    std::size_t frontier = 0;
    for (int h = 0; h < hops; ++h) {
        const std::size_t end = local.size();
        for (; frontier < end; ++frontier)
            for (SparseRowMatrix::InnerIterator it(A, local[frontier]); it; ++it) {
                const Index j = static_cast<Index>(it.col());
                if (it.value() > 0.0 && position.emplace(j, static_cast<int>(local.size())).second) local.push_back(j);
            }
    }
    const int N = static_cast<int>(local.size());

    // Quadratic forms of Gamma(f)(j) and linear forms of (Af)(j) for x and its neighbors.
    auto gammaForm = [&](Index j) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
        const int pj = position.at(j);
        for (SparseRowMatrix::InnerIterator it(A, j); it; ++it) {
            const Index k = static_cast<Index>(it.col());
            if (k == j) continue;
            const int pk = position.at(k);
            const double w = 0.5 * it.value();
            G(pk, pk) += w;
            G(pj, pj) += w;
            G(pk, pj) -= w;
            G(pj, pk) -= w;
        }
        return G;
    };
    auto generatorRow = [&](Index j) {
        Vector a = Vector::Zero(N);
        for (SparseRowMatrix::InnerIterator it(A, j); it; ++it) a[position.at(static_cast<Index>(it.col()))] += it.value();
        return a;
    };

    const Eigen::MatrixXd Gx = gammaForm(x);
    const Vector ax = generatorRow(x);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(N, N);
    for (SparseRowMatrix::InnerIterator it(A, x); it; ++it) {
        const Index j = static_cast<Index>(it.col());
        if (j == x) continue;
        const double axj = it.value();
        Q += 0.5 * axj * (gammaForm(j) - Gx);
        Vector e = Vector::Zero(N);
        e[position.at(j)] += 1.0;
        e[0] -= 1.0;
        cross += 0.5 * axj * e * (generatorRow(j) - ax).transpose();
    }
    Q -= 0.5 * (cross + cross.transpose());
    Q = 0.5 * (Q + Q.transpose()).eval();

    auto failSolve = [&] { fail(ErrorKind::Numerical, "bestK: eigensolver failed at vertex " + std::to_string(x)); };
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gEig(Gx);
    if (gEig.info() != Eigen::Success) failSolve();
    const double gTol = 1e-12 * std::max(gEig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    std::vector<int> range, null;
    for (int k = 0; k < N; ++k) (gEig.eigenvalues()[k] > gTol ? range : null).push_back(k);
    if (range.empty()) fail(ErrorKind::Precondition, "bestK: vertex " + std::to_string(x) + " is isolated");

    Eigen::MatrixXd U(N, range.size()), W(N, null.size());
    Vector invSqrtD(range.size());
    for (std::size_t k = 0; k < range.size(); ++k) {
        U.col(k) = gEig.eigenvectors().col(range[k]);
        invSqrtD[k] = 1.0 / std::sqrt(gEig.eigenvalues()[range[k]]);
    }
    for (std::size_t k = 0; k < null.size(); ++k) W.col(k) = gEig.eigenvectors().col(null[k]);

    Eigen::MatrixXd S = U.transpose() * Q * U;
    Eigen::MatrixXd elimination = Eigen::MatrixXd::Zero(null.size(), range.size());
    if (!null.empty()) {
        const Eigen::MatrixXd Qzz = W.transpose() * Q * W;
        const Eigen::MatrixXd Qzy = W.transpose() * Q * U;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> zEig(Qzz);
        if (zEig.info() != Eigen::Success) failSolve();
        const double zTol = 1e-12 * std::max(zEig.eigenvalues().cwiseAbs().maxCoeff(), Q.cwiseAbs().maxCoeff());
        Vector inv = Vector::Zero(null.size());
        for (Eigen::Index k = 0; k < inv.size(); ++k)
            if (std::abs(zEig.eigenvalues()[k]) > zTol) inv[k] = 1.0 / zEig.eigenvalues()[k];
        const Eigen::MatrixXd pinv = zEig.eigenvectors() * inv.asDiagonal() * zEig.eigenvectors().transpose();
        elimination = -pinv * Qzy;
        S += Qzy.transpose() * elimination;
    }
    const Eigen::MatrixXd M = invSqrtD.asDiagonal() * S * invSqrtD.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mEig(0.5 * (M + M.transpose()));
    if (mEig.info() != Eigen::Success) failSolve();

    const Vector y = invSqrtD.cwiseProduct(mEig.eigenvectors().col(0));
    Vector localWitness = U * y;
    if (!null.empty()) localWitness += W * (elimination * y);
    LocalCurvature out;
    out.vertex = x;
    out.k = mEig.eigenvalues()[0];
    out.witness = Vector::Zero(gen.size());
    for (int p = 0; p < N; ++p) out.witness[local[p]] = localWitness[p];
    return out;
}

CurvatureReport bestK(const Generator& gen, int neighborhoodRadius, unsigned workers) {
    CurvatureReport report;
    report.neighborhoodRadius = neighborhoodRadius;
    report.method = "local Gamma_2/Gamma pencil, Schur-deflated null space, symmetric eigensolver";
    report.perVertexK.resize(gen.size());
    parallelFor(static_cast<std::size_t>(gen.size()), workers, [&](std::size_t i) {
        report.perVertexK[static_cast<Eigen::Index>(i)] = localCurvature(gen, static_cast<Index>(i), neighborhoodRadius).k;
    });
    Eigen::Index argmin = 0;
    report.globalK = report.perVertexK.minCoeff(&argmin);
    report.argmin = static_cast<Index>(argmin);
    return report;
}

void exportCurvatureReport(const CurvatureReport& report, const std::string& stem) {
    std::ofstream csv(stem + ".csv");
    if (!csv) fail(ErrorKind::Config, "exportCurvatureReport: cannot open " + stem + ".csv");
    csv << "vertex,k_local\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < report.perVertexK.size(); ++i) csv << i << ',' << report.perVertexK[i] << '\n';
    nlohmann::json side = {{"globalK", report.globalK},
                           {"method", report.method},
                           {"radius", report.neighborhoodRadius},
                           {"tolerances", {{"eigenRelative", 1e-12}, {"inequality", kCheckTol}}}};
    std::ofstream json(stem + ".json");
    if (!json) fail(ErrorKind::Config, "exportCurvatureReport: cannot open " + stem + ".json");
    json << side.dump(2) << '\n';
}

InequalityCheck verifyBE1(const Generator& gen, double K, const Vector& f, const Vector& phi) {
    require(phi.size() == gen.size() && f.size() == gen.size(), "verifyBE1: size mismatch");
    require(phi.minCoeff() >= 0.0, "verifyBE1: phi must be nonnegative");
    const Vector& mu = gen.space().measure();
    const Vector g = carreDuChamp(gen, f, f);
    const double a = 0.5 * muInner(mu, g, gen.apply(phi));
    const double b = muInner(mu, phi, carreDuChamp(gen, f, gen.apply(f)));
    const double c = K * muInner(mu, phi, g);
    InequalityCheck out;
    out.value = a - b - c;
    out.scale = std::abs(a) + std::abs(b) + std::abs(c);
    out.pass = out.value >= -kCheckTol * out.scale;
    return out;
}

InequalityCheck verifyBE2(const HeatOperator& op, double K, const Vector& f, double t) {
    require(t > 0.0, "verifyBE2: t must be positive");
    const Generator& gen = op.generator();
    const Vector lhs = carreDuChamp(gen, op.apply(f, t), op.apply(f, t));
    const Vector rhs = std::exp(-2.0 * K * t) * op.apply(carreDuChamp(gen, f, f), t);
    InequalityCheck out;
    out.value = (lhs - rhs).maxCoeff();
    out.scale = std::max(rhs.cwiseAbs().maxCoeff(), lhs.cwiseAbs().maxCoeff());
    out.pass = out.value <= kCheckTol * out.scale;
    return out;
}

InequalityCheck verifyBE3(const HeatOperator& op, double K, const Vector& f, double t) {
    require(t > 0.0, "verifyBE3: t must be positive");
    const Generator& gen = op.generator();
    const Vector tf = op.apply(f, t);
    const Vector variance = op.apply(f.cwiseProduct(f), t) - tf.cwiseProduct(tf);
    const double prefactor = K == 0.0 ? 2.0 * t : std::expm1(2.0 * K * t) / K;
    const Vector lhs = prefactor * carreDuChamp(gen, tf, tf);
    InequalityCheck out;
    out.value = (lhs - variance).maxCoeff();
    out.scale = std::max(lhs.cwiseAbs().maxCoeff(), variance.cwiseAbs().maxCoeff());
    out.pass = out.value <= kCheckTol * out.scale;
    return out;
}

InequalityCheck verifySelfImprovement(const HeatOperator& op, double K, const Vector& f, double t, double delta,
                                      double relTol) {
    require(t > 0.0, "verifySelfImprovement: t must be positive");
    require(delta >= 0.0, "verifySelfImprovement: delta must be nonnegative");
    const Generator& gen = op.generator();
    auto regularized = [&](const Vector& gamma) {
        return ((gamma.array().max(0.0) + delta * delta).sqrt() - delta).matrix().eval();
    };
    const Vector tf = op.apply(f, t);
    const Vector gammaF = carreDuChamp(gen, f, f);
    const Vector lhs = regularized(carreDuChamp(gen, tf, tf));
    const Vector rhs = std::exp(-K * t) * op.apply(regularized(gammaF), t);
    InequalityCheck out;
    out.value = (lhs - rhs).maxCoeff();
    out.scale = gammaF.cwiseMax(0.0).cwiseSqrt().maxCoeff();
    out.pass = out.value <= relTol * out.scale;
    return out;
}

GradientSquareReport gradientSquareCheck(const Generator& gen, double K, const Vector& f, const Vector& phi) {
    require(phi.minCoeff() >= 0.0, "gradientSquareCheck: phi must be nonnegative");
    const Vector& mu = gen.space().measure();
    const Vector g = carreDuChamp(gen, f, f);
    GradientSquareReport out;
    out.lhs = muInner(mu, phi, carreDuChamp(gen, g, g));
    out.rhs = 4.0 * muInner(mu, phi, gamma2(gen, f) - K * g);
    return out;
}

PazyKernel PazyKernel::bump() {
    using Rule = boost::math::quadrature::gauss<double, 32>;
    PazyKernel kernel;
    const auto& abscissa = Rule::abscissa();
    const auto& weight = Rule::weights();
    auto add = [&](double z, double w) {
        const double s = 0.5 * (z + 1.0);
        kernel.nodes.push_back(s);
        kernel.weights.push_back(0.5 * w * std::exp(-1.0 / (s * (1.0 - s))));
    };
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        add(abscissa[i], weight[i]);
        if (abscissa[i] != 0.0) add(-abscissa[i], weight[i]);
    }
    std::vector<std::size_t> order(kernel.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return kernel.nodes[a] < kernel.nodes[b]; });
    PazyKernel sorted;
    double total = 0.0;
    for (std::size_t i : order) total += kernel.weights[i];
    for (std::size_t i : order) {
        sorted.nodes.push_back(kernel.nodes[i]);
        sorted.weights.push_back(kernel.weights[i] / total);
    }
    return sorted;
}

void PazyKernel::validate() const {
    require(!nodes.empty() && nodes.size() == weights.size(), "PazyKernel: nodes and weights must match");
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        require(nodes[i] > 0.0 && std::isfinite(nodes[i]), "PazyKernel: nodes must be positive");
        require(weights[i] >= 0.0, "PazyKernel: weights must be nonnegative");
        total += weights[i];
    }
    require(std::abs(total - 1.0) <= 1e-10, "PazyKernel: weights must sum to 1");
}

Vector pazyConvolution(const HeatOperator& op, const Vector& f, double eps, const PazyKernel& kernel, double maxTime) {
    require(eps > 0.0 && std::isfinite(eps), "pazyConvolution: eps must be positive and finite");
    kernel.validate();
    const double reach = eps * *std::max_element(kernel.nodes.begin(), kernel.nodes.end());
    if (reach > maxTime)
        fail(ErrorKind::Precondition, "pazyConvolution: quadrature reaches t = " + std::to_string(reach) +
                                          " beyond the semigroup window " + std::to_string(maxTime));
    Vector out = Vector::Zero(f.size());
    for (std::size_t q = 0; q < kernel.nodes.size(); ++q) out += kernel.weights[q] * op.apply(f, eps * kernel.nodes[q]);
    return out;
}

DeGiorgiBECheck deGiorgiWithBE(const HeatOperator& op, const Vector& u, double K, std::span<const double> tLadder,
                               ParamWindow window, unsigned workers) {
    DeGiorgiBECheck out;
    out.gammaTV = gammaTV(op.generator(), u);
    std::vector<LadderSample> samples(tLadder.size());
    parallelFor(tLadder.size(), workers, [&](std::size_t i) {
        samples[i].param = tLadder[i];
        samples[i].value = deGiorgi(op, u, tLadder[i]);
    });
    for (const auto& s : samples) {
        const double bound = std::exp(-K * s.param) * out.gammaTV;
        out.bounds.push_back(bound);
        if (s.value > bound * (1.0 + 1e-6)) out.boundHolds = false;
    }
    out.ladder = summarizeLadder("deGiorgi", std::move(samples), window);
    return out;
}

}  // namespace heatperim
