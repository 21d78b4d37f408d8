#pragma once

#include "heatperim/ladder.hpp"

#include <string>

namespace heatperim {

struct PlotStyle {
    int width = 640;
    int height = 400;
    std::string title;
    std::string xLabel = "parameter";
    std::string yLabel = "value";
};

/// SVG 1.1 convergence plot: log-scale parameter axis, shaded trusted window, in-window samples
/// filled, horizontal line at limitEst, and a banner when no plateau was found.
std::string emitPlot(const FunctionalLadder& ladder, const PlotStyle& style = {});

/// gnuplot-readable columns: param value in_window.
std::string emitDat(const FunctionalLadder& ladder);

}  // namespace heatperim
