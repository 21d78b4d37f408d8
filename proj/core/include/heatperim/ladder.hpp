#pragma once

#include "heatperim/common.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heatperim {

/// Closed parameter interval [lo, hi] whose samples are trusted to reflect continuum behavior.
struct ParamWindow {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double p) const { return p >= lo && p <= hi; }
};

/// Length-type parameters (radii, strip widths): trusted when p >= factor * resolution.
ParamWindow lengthWindow(double resolution, double factor = 8.0);

/// Heat-time parameters: trusted when t >= factor * resolution^2.
ParamWindow heatTimeWindow(double resolution, double factor = 10.0);

enum class Verdict { Plateau, NoPlateau };

const char* toString(Verdict v);

struct LadderSample {
    double param = 0.0;
    double value = 0.0;
    bool inWindow = false;
};

/// Samples of one functional along a decreasing parameter ladder, with the limit estimate the
/// ladder supports. `limitEst` is the median of the plateau closest to param -> 0; when there
/// is none the verdict is NoPlateau and limitEst is empty. `minInWindow` is always reported.
struct FunctionalLadder {
    std::string name;
    std::vector<LadderSample> samples;  // param strictly descending
    ParamWindow window;
    std::optional<double> limitEst;
    std::optional<double> minInWindow;
    Verdict verdict = Verdict::NoPlateau;
    std::size_t plateauFirst = 0;  // sample indices of the chosen plateau, inclusive
    std::size_t plateauLast = 0;
};

struct PlateauPolicy {
    double relativeSlope = 0.02;
    std::size_t minRun = 3;
    std::size_t minInWindow = 4;
};

/// Builds the ladder summary from already evaluated samples (params strictly descending).
FunctionalLadder summarizeLadder(std::string name, std::vector<LadderSample> samples, ParamWindow window,
                                 const PlateauPolicy& policy = {});

/// Evaluates `functional` on every parameter (concurrently, up to `workers`), marks in-window
/// samples and estimates the limit. Throws when fewer than policy.minInWindow samples are trusted.
FunctionalLadder ladderScan(std::string name, const std::function<double(double)>& functional,
                            std::span<const double> ladder, ParamWindow window, unsigned workers = 1,
                            const PlateauPolicy& policy = {});

/// Geometric ladder from hi down to lo with `count` points. When snapUnit > 0 each parameter is
/// moved to (k + snapOffset) * snapUnit, keeping lattice radii off exact distance ties; duplicates
/// produced by snapping are dropped.
std::vector<double> geometricLadder(double hi, double lo, int count, double snapUnit = 0.0,
                                    double snapOffset = 0.5);

/// Heat-time ladder whose square roots follow geometricLadder(sqrtHi, sqrtLo, ...).
std::vector<double> sqrtTimeLadder(double sqrtHi, double sqrtLo, int count, double snapUnit = 0.0,
                                   double snapOffset = 0.5);

}  // namespace heatperim
