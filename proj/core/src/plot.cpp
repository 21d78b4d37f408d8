#include "heatperim/plot.hpp"

#include "heatperim/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace heatperim {

namespace {

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

std::string general(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

}  // namespace

std::string emitPlot(const FunctionalLadder& ladder, const PlotStyle& style) {
    require(!ladder.samples.empty(), "emitPlot: empty ladder");
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double plotW = style.width - left - right, plotH = style.height - top - bottom;

    double xMin = std::log10(ladder.samples.back().param), xMax = std::log10(ladder.samples.front().param);
    if (xMax - xMin < 1e-12) {
        xMin -= 0.5;
        xMax += 0.5;
    }
    double yMin = ladder.samples.front().value, yMax = yMin;
    for (const auto& s : ladder.samples) {
        yMin = std::min(yMin, s.value);
        yMax = std::max(yMax, s.value);
    }
    if (ladder.limitEst) {
        yMin = std::min(yMin, *ladder.limitEst);
        yMax = std::max(yMax, *ladder.limitEst);
    }
    const double pad = yMax > yMin ? 0.08 * (yMax - yMin) : std::max(0.5, 0.1 * std::abs(yMax));
    yMin -= pad;
    yMax += pad;

    auto px = [&](double p) { return left + (std::log10(p) - xMin) / (xMax - xMin) * plotW; };
    auto py = [&](double v) { return top + (yMax - v) / (yMax - yMin) * plotH; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << style.width << "\" height=\""
        << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height << "\" fill=\"white\"/>\n";

    const double winLo = std::max(std::pow(10.0, xMin), ladder.window.lo);
    const double winHi = std::min(std::pow(10.0, xMax), ladder.window.hi);
    if (winLo < winHi) {
        svg << "<rect x=\"" << fixed(px(winLo)) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(px(winHi) - px(winLo))
            << "\" height=\"" << fixed(plotH) << "\" fill=\"#e8f0fb\"/>\n";
    }
    svg << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(plotW) << "\" height=\""
        << fixed(plotH) << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int decade = static_cast<int>(std::ceil(xMin)); decade <= static_cast<int>(std::floor(xMax)); ++decade) {
        const double x = left + (decade - xMin) / (xMax - xMin) * plotW;
        svg << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(top + plotH) << "\" x2=\"" << fixed(x) << "\" y2=\""
            << fixed(top + plotH + 5) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(top + plotH + 18)
            << "\" font-size=\"11\" text-anchor=\"middle\">1e" << decade << "</text>\n";
    }
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = yMin + (yMax - yMin) * tick / 4.0;
        svg << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(py(v) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << general(v) << "</text>\n";
    }

    if (ladder.samples.size() > 1) {
        svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < ladder.samples.size(); ++i)
            svg << (i ? " " : "") << fixed(px(ladder.samples[i].param)) << ',' << fixed(py(ladder.samples[i].value));
        svg << "\"/>\n";
    }
    for (const auto& s : ladder.samples)
        svg << "<circle cx=\"" << fixed(px(s.param)) << "\" cy=\"" << fixed(py(s.value)) << "\" r=\"3.5\" stroke=\"#1f5fa8\" fill=\""
            << (s.inWindow ? "#1f5fa8" : "white") << "\"/>\n";

    if (ladder.limitEst && ladder.samples.size() > 1) {
        const double y = py(*ladder.limitEst);
        svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(left + plotW) << "\" y2=\""
            << fixed(y) << "\" stroke=\"#c0392b\" stroke-dasharray=\"6,4\"/>\n"
            << "<text x=\"" << fixed(left + plotW - 4) << "\" y=\"" << fixed(y - 6)
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#c0392b\">limit " << escape(general(*ladder.limitEst))
            << "</text>\n";
    }
    if (ladder.verdict == Verdict::NoPlateau)
        svg << "<text x=\"" << fixed(left + plotW / 2) << "\" y=\"" << fixed(top + 20)
            << "\" font-size=\"16\" text-anchor=\"middle\" fill=\"#c0392b\">no plateau</text>\n";

    const std::string title = style.title.empty() ? ladder.name : style.title;
    svg << "<text x=\"" << fixed(style.width / 2.0) << "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">"
        << escape(title) << "</text>\n"
        << "<text x=\"" << fixed(left + plotW / 2) << "\" y=\"" << fixed(style.height - 10.0)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(style.xLabel) << "</text>\n"
        << "<text x=\"16\" y=\"" << fixed(top + plotH / 2) << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fixed(top + plotH / 2) << ")\">" << escape(style.yLabel) << "</text>\n"
        << "</svg>\n";
    return svg.str();
}

std::string emitDat(const FunctionalLadder& ladder) {
    std::ostringstream out;
    out << "# " << ladder.name << "\n# param value in_window\n";
    for (const auto& s : ladder.samples)
        out << formatDouble(s.param) << ' ' << formatDouble(s.value) << ' ' << (s.inWindow ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace heatperim
