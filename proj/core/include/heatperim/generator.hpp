#pragma once

#include "heatperim/common.hpp"
#include "heatperim/mmspace.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <optional>
#include <string>

namespace heatperim {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class KernelShape {
    Indicator,  // theta = 1 on [0, 1]
    Gaussian,   // theta(s) = exp(-s^2), truncated at s = 3
};

/// Proximity rule: either a connection radius h, or the symmetric k-nearest-neighbor graph
/// (h is then the largest kNN distance).
struct GraphRule {
    enum class Kind { Radius, Knn } kind = Kind::Radius;
    double h = 0.0;
    int k = 0;
    KernelShape shape = KernelShape::Indicator;

    static GraphRule radius(double h, KernelShape shape = KernelShape::Indicator) { return {Kind::Radius, h, 0, shape}; }
    static GraphRule knn(int k, KernelShape shape = KernelShape::Indicator) { return {Kind::Knn, 0.0, k, shape}; }
    std::string describe() const;
};

/// mu-symmetric Markov generator on a finite space: off-diagonal entries nonnegative, rows summing
/// to zero, mu(i) A(i,j) = mu(j) A(j,i).
class Generator {
public:
    /// Wraps an explicit generator matrix after checking the invariants.
    static Generator fromMatrix(std::shared_ptr<const MetricMeasureSpace> space, SparseRowMatrix A, double h = 0.0,
                                std::string rule = "explicit");

    const MetricMeasureSpace& space() const { return *space_; }
    const std::shared_ptr<const MetricMeasureSpace>& spacePtr() const { return space_; }
    const SparseRowMatrix& matrix() const { return A_; }
    double scale() const { return h_; }
    const std::string& rule() const { return rule_; }
    /// How the normalization constant was obtained ("lattice", "continuum", "empirical", "explicit").
    const std::string& calibration() const { return calibration_; }
    double calibrationConstant() const { return cNorm_; }
    Index size() const { return static_cast<Index>(A_.rows()); }

    /// The same graph with every rate multiplied by c > 0.
    Generator scaled(double c) const;

    Vector apply(const Vector& f) const { return A_ * f; }

private:
    friend Generator buildGenerator(std::shared_ptr<const MetricMeasureSpace>, const GraphRule&);
    Generator() = default;

    std::shared_ptr<const MetricMeasureSpace> space_;
    SparseRowMatrix A_;
    double h_ = 0.0;
    std::string rule_;
    std::string calibration_ = "explicit";
    double cNorm_ = 1.0;
};

/// A(i,j) = 2 theta(d/h) mu(j) / M2 for i != j, where M2 is the per-coordinate second moment of
/// the kernel. On lattices M2 is measured on the lattice itself, which turns the nearest-neighbor
/// circle into the exact second-difference stencil; on point clouds with a known dimension m the
/// continuum value omega_m h^(m+2) / (m+2) is used.
Generator buildGenerator(std::shared_ptr<const MetricMeasureSpace> space, const GraphRule& rule);

/// E(u, v) = -sum_i mu(i) u(i) (A v)(i).
double dirichletEnergy(const Generator& gen, const Vector& u, const Vector& v);

/// Gamma(f, g)(i) = 1/2 sum_j A(i,j) (f_j - f_i)(g_j - g_i).
Vector carreDuChamp(const Generator& gen, const Vector& f, const Vector& g);

/// Shortest-path surrogate for the intrinsic metric from x. Edge lengths
/// l(i,j) = min(sqrt(2 / (deg_i A(i,j))), sqrt(2 / (deg_j A(j,i)))) make every path distance
/// function satisfy Gamma <= 1, so the result bounds the intrinsic metric from below.
Vector intrinsicMetric(const Generator& gen, Index x);
inline constexpr const char* kIntrinsicMetricKind = "surrogate";

/// Writes `<stem>.csv` (i,j,value triplets) and `<stem>.json` {h, rule, calibration, muHash}.
void exportGenerator(const Generator& gen, const std::string& stem);

}  // namespace heatperim
