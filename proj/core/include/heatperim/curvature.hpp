#pragma once

#include "heatperim/heat.hpp"
#include "heatperim/ladder.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace heatperim {

/// Gamma_2(f) = 1/2 A Gamma(f, f) - Gamma(f, A f).
Vector gamma2(const Generator& gen, const Vector& f);

struct LocalCurvature {
    Index vertex = 0;
    double k = 0.0;
    /// Minimizer of Gamma_2(f)(x) / Gamma(f, f)(x), supported on the neighborhood of x.
    Vector witness;
};

/// Best constant at x: min of Gamma_2(f)(x) / Gamma(f, f)(x) over f supported on the
/// `hops`-neighborhood of x with Gamma(f, f)(x) > 0. The null directions of Gamma at x are
/// eliminated by a Schur complement before the symmetric eigen solve.
LocalCurvature localCurvature(const Generator& gen, Index x, int hops = 2);

struct CurvatureReport {
    Vector perVertexK;
    double globalK = 0.0;
    Index argmin = 0;
    std::string method;
    int neighborhoodRadius = 2;
};

CurvatureReport bestK(const Generator& gen, int neighborhoodRadius = 2, unsigned workers = 1);

/// Writes `<stem>.csv` (vertex,k_local) and `<stem>.json` {globalK, method, radius, tolerances}.
void exportCurvatureReport(const CurvatureReport& report, const std::string& stem);

struct InequalityCheck {
    double value = 0.0;  // residual (BE1) or max violation (BE2, BE3, self-improvement)
    double scale = 0.0;  // magnitude the tolerance is relative to
    bool pass = false;
};

/// residual = 1/2 <Gamma(f), A phi>_mu - <phi, Gamma(f, A f)>_mu - K <phi, Gamma(f)>_mu;
/// passes when residual >= -1e-8 scale.
InequalityCheck verifyBE1(const Generator& gen, double K, const Vector& f, const Vector& phi);

/// max over x of Gamma(T_t f)(x) - exp(-2Kt) T_t Gamma(f)(x); passes when <= 1e-8 scale.
InequalityCheck verifyBE2(const HeatOperator& op, double K, const Vector& f, double t);

/// max over x of c(K, t) Gamma(T_t f)(x) - [T_t(f^2) - (T_t f)^2](x), c = (exp(2Kt) - 1) / K and
/// c = 2t at K = 0; passes when <= 1e-8 scale.
InequalityCheck verifyBE3(const HeatOperator& op, double K, const Vector& f, double t);

/// max over x of sqrt(Gamma(T_t f) + delta^2) - delta - exp(-Kt) T_t(sqrt(Gamma(f) + delta^2) - delta).
/// scale is max sqrt(Gamma(f)); passes when the violation is <= relTol * scale.
InequalityCheck verifySelfImprovement(const HeatOperator& op, double K, const Vector& f, double t, double delta,
                                      double relTol = 1e-3);

struct GradientSquareReport {
    double lhs = 0.0;  // <phi, Gamma(Gamma(f), Gamma(f))>_mu
    double rhs = 0.0;  // 4 <phi, Gamma_2(f) - K Gamma(f)>_mu
};

/// Report-only comparison for the gradient of |Df|^2 against the curvature excess.
GradientSquareReport gradientSquareCheck(const Generator& gen, double K, const Vector& f, const Vector& phi);

/// Smooth bump rho(s) proportional to exp(-1 / (s (1 - s))) on (0, 1), discretized by Gauss-Legendre
/// quadrature; weights already include rho and sum to 1.
struct PazyKernel {
    std::vector<double> nodes;
    std::vector<double> weights;

    static PazyKernel bump();
    void validate() const;
};

/// beta_eps f = (1/eps) int rho(s/eps) T_s f ds = sum_q w_q T_(eps s_q) f. Throws when eps is not
/// positive or eps times the largest node exceeds maxTime.
Vector pazyConvolution(const HeatOperator& op, const Vector& f, double eps, const PazyKernel& kernel,
                       double maxTime = std::numeric_limits<double>::infinity());

struct DeGiorgiBECheck {
    FunctionalLadder ladder;
    std::vector<double> bounds;  // exp(-Kt) gammaTV(u) per sample
    double gammaTV = 0.0;
    bool boundHolds = true;
};

/// deGiorgi(u, t) along the ladder next to the bound exp(-Kt) gammaTV(u).
DeGiorgiBECheck deGiorgiWithBE(const HeatOperator& op, const Vector& u, double K, std::span<const double> tLadder,
                               ParamWindow window, unsigned workers = 1);

}  // namespace heatperim
