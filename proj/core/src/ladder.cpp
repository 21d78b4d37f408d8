#include "heatperim/ladder.hpp"

#include <algorithm>
#include <cmath>

namespace heatperim {

ParamWindow lengthWindow(double resolution, double factor) { return {factor * resolution}; }

ParamWindow heatTimeWindow(double resolution, double factor) { return {factor * resolution * resolution}; }

const char* toString(Verdict v) { return v == Verdict::Plateau ? "plateau" : "no plateau"; }

namespace {

bool flatStep(double a, double b, double tol) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return true;
    return std::abs(b - a) < tol * scale;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

FunctionalLadder summarizeLadder(std::string name, std::vector<LadderSample> samples, ParamWindow window,
                                 const PlateauPolicy& policy) {
    for (std::size_t i = 1; i < samples.size(); ++i)
        require(samples[i].param < samples[i - 1].param, "ladder parameters must be strictly decreasing");

    FunctionalLadder out;
    out.name = std::move(name);
    out.window = window;
    std::vector<std::size_t> trusted;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].inWindow = window.contains(samples[i].param);
        if (samples[i].inWindow) {
            trusted.push_back(i);
            const double v = samples[i].value;
            out.minInWindow = out.minInWindow ? std::min(*out.minInWindow, v) : v;
        }
    }
    out.samples = std::move(samples);

    // Walk the trusted samples toward param -> 0 and remember the last run of flat steps.
    std::size_t runStart = 0;
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t k = 1; k <= trusted.size(); ++k) {
        const bool extend = k < trusted.size() &&
                            flatStep(out.samples[trusted[k - 1]].value, out.samples[trusted[k]].value,
                                     policy.relativeSlope);
        if (!extend) {
            if (k - runStart >= policy.minRun) best = std::pair{runStart, k - 1};
            runStart = k;
        }
    }
    if (best) {
        std::vector<double> values;
        for (std::size_t k = best->first; k <= best->second; ++k) values.push_back(out.samples[trusted[k]].value);
        out.limitEst = median(std::move(values));
        out.verdict = Verdict::Plateau;
        out.plateauFirst = trusted[best->first];
        out.plateauLast = trusted[best->second];
    }
    return out;
}

FunctionalLadder ladderScan(std::string name, const std::function<double(double)>& functional,
                            std::span<const double> ladder, ParamWindow window, unsigned workers,
                            const PlateauPolicy& policy) {
    std::size_t trusted = 0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        require(i == 0 || ladder[i] < ladder[i - 1], "ladderScan: ladder must be strictly decreasing");
        if (window.contains(ladder[i])) ++trusted;
    }
    if (trusted < policy.minInWindow)
        fail(ErrorKind::Precondition, "ladderScan(" + name + "): " + std::to_string(trusted) +
                                          " in-window samples, need at least " +
                                          std::to_string(policy.minInWindow));

    std::vector<LadderSample> samples(ladder.size());
    parallelFor(ladder.size(), workers, [&](std::size_t i) {
        samples[i].param = ladder[i];
        samples[i].value = functional(ladder[i]);
    });
    return summarizeLadder(std::move(name), std::move(samples), window, policy);
}

std::vector<double> geometricLadder(double hi, double lo, int count, double snapUnit, double snapOffset) {
    require(hi > lo && lo > 0.0, "geometricLadder: need hi > lo > 0");
    require(count >= 2, "geometricLadder: need at least two points");
    std::vector<double> out;
    const double ratio = std::pow(lo / hi, 1.0 / (count - 1));
    for (int k = 0; k < count; ++k) {
        double p = hi * std::pow(ratio, k);
        if (snapUnit > 0.0) p = (std::round(p / snapUnit - snapOffset) + snapOffset) * snapUnit;
        if (p > 0.0 && (out.empty() || p < out.back())) out.push_back(p);
    }
    return out;
}

std::vector<double> sqrtTimeLadder(double sqrtHi, double sqrtLo, int count, double snapUnit, double snapOffset) {
    auto out = geometricLadder(sqrtHi, sqrtLo, count, snapUnit, snapOffset);
    for (double& s : out) s *= s;
    return out;
}

}  // namespace heatperim
