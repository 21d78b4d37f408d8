#include "heatperim/builders.hpp"

#include <cmath>
#include <random>

namespace heatperim {

namespace {

int positiveInt(const nlohmann::json& params, const char* key, int fallback = -1) {
    if (!params.contains(key)) {
        if (fallback > 0) return fallback;
        fail(ErrorKind::Config, std::string("builder parameter '") + key + "' is required");
    }
    const auto& v = params.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0 || v.get<long long>() > (1LL << 26))
        fail(ErrorKind::Config, std::string("builder parameter '") + key + "' must be a positive integer");
    return v.get<int>();
}

std::optional<double> optionalPositive(const nlohmann::json& params, const char* key) {
    if (!params.contains(key)) return std::nullopt;
    const auto& v = params.at(key);
    if (!v.is_number() || !(v.get<double>() > 0.0))
        fail(ErrorKind::Config, std::string("builder parameter '") + key + "' must be a positive number");
    return v.get<double>();
}

void rejectUnknown(const nlohmann::json& params, std::initializer_list<const char*> allowed) {
    if (!params.is_object()) fail(ErrorKind::Config, "builder parameters must be a JSON object");
    for (const auto& [key, value] : params.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) fail(ErrorKind::Config, "unknown builder parameter '" + key + "'");
    }
}

SpaceProvenance provenance(const std::string& builder, const nlohmann::json& params) {
    return {builder, params.dump()};
}

double radicalInverse(int index, int base) {
    double result = 0.0, f = 1.0 / base;
    for (int i = index; i > 0; i /= base, f /= base) result += f * (i % base);
    return result;
}

BuiltSpace lineSpace(const std::string& builder, const nlohmann::json& params, bool periodic) {
    const int n = positiveInt(params, "n");
    if (n < 2) fail(ErrorKind::Config, builder + ": n must be at least 2");
    Eigen::MatrixXd coords(n, 1);
    for (int i = 0; i < n; ++i) coords(i, 0) = periodic ? static_cast<double>(i) / n : (i + 0.5) / n;
    Vector mu = Vector::Constant(n, 1.0 / n);
    BuiltSpace out;
    out.space = std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::embedded(
        coords, {periodic ? 1.0 : 0.0}, mu, builder + "(" + std::to_string(n) + ")", {1, 1.0 / n},
        provenance(builder, params)));
    if (auto arc = optionalPositive(params, "arc")) {
        IndexSet marked;
        for (int i = 0; i < n; ++i)
            if (coords(i, 0) < *arc) marked.push_back(i);
        out.marked = marked;
    }
    return out;
}

BuiltSpace weightedLine(const nlohmann::json& params) {
    rejectUnknown(params, {"n", "density"});
    const int n = positiveInt(params, "n");
    const std::string density = params.value("density", std::string("uniform"));
    const auto colon = density.find(':');
    const std::string kind = density.substr(0, colon);
    double a = 0.0;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            a = std::stod(density.substr(colon + 1), &used);
            if (used != density.size() - colon - 1) throw std::invalid_argument(density);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "weightedLine: cannot parse density '" + density + "'");
        }
    } else if (kind != "uniform") {
        fail(ErrorKind::Config, "weightedLine: density '" + density + "' needs a parameter");
    }

    Eigen::MatrixXd coords(n, 1);
    Vector mu(n);
    for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) / n;
        coords(i, 0) = x;
        if (kind == "uniform") mu[i] = 1.0 / n;
        else if (kind == "geometric") mu[i] = std::pow(a, i);
        else if (kind == "linear") mu[i] = (1.0 + a * x) / n;
        else if (kind == "exp") mu[i] = std::exp(a * x) / n;
        else fail(ErrorKind::Config, "weightedLine: unknown density kind '" + kind + "'");
    }
    return {std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::embedded(
                coords, {0.0}, mu, "weightedLine(" + std::to_string(n) + "," + density + ")", {1, 1.0 / n},
                provenance("weightedLine", params))),
            std::nullopt};
}

std::shared_ptr<const MetricMeasureSpace> torusLattice(int n, const std::string& builder, const nlohmann::json& params) {
    if (n < 2) fail(ErrorKind::Config, builder + ": n must be at least 2");
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(n) * n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            coords(i * n + j, 0) = static_cast<double>(i) / n;
            coords(i * n + j, 1) = static_cast<double>(j) / n;
        }
    Vector mu = Vector::Constant(coords.rows(), 1.0 / (static_cast<double>(n) * n));
    return std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::embedded(
        coords, {1.0, 1.0}, mu, builder + "(" + std::to_string(n) + ")", {2, 1.0 / n}, provenance(builder, params)));
}

double torusGap(double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 1.0 - d);
}

BuiltSpace torus2d(const nlohmann::json& params) {
    rejectUnknown(params, {"n", "disk"});
    BuiltSpace out;
    out.space = torusLattice(positiveInt(params, "n"), "torus2d", params);
    if (auto r = optionalPositive(params, "disk")) {
        const auto& c = out.space->coordinates();
        IndexSet marked;
        for (Index p = 0; p < out.space->size(); ++p)
            if (std::hypot(torusGap(c(p, 0), 0.5), torusGap(c(p, 1), 0.5)) < *r) marked.push_back(p);
        out.marked = marked;
    }
    return out;
}

BuiltSpace pointCloud(const nlohmann::json& params) {
    rejectUnknown(params, {"n", "dim", "seed"});
    const int n = positiveInt(params, "n");
    const int dim = positiveInt(params, "dim", 2);
    const std::uint64_t seed = params.value("seed", std::uint64_t{1});
    if (n < 2 || dim > 8) fail(ErrorKind::Config, "pointCloud: need n >= 2 and 1 <= dim <= 8");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd coords(n, dim);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < dim; ++c) coords(i, c) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return {std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::embedded(
                coords, std::vector<double>(dim, 1.0), Vector::Constant(n, 1.0 / n),
                "pointCloud(" + std::to_string(n) + "," + std::to_string(dim) + ")", {dim, 0.0},
                provenance("pointCloud", params))),
            std::nullopt};
}

}  // namespace

const std::vector<std::string>& builderNames() {
    static const std::vector<std::string> names{"circle", "interval", "torus2d",
                                                "weightedLine", "pointCloud", "shrinkingBallsUnion"};
    return names;
}

std::vector<BallSpec> shrinkingBalls(int k) {
    std::vector<BallSpec> balls;
    for (int j = 1; j <= k; ++j) balls.push_back({radicalInverse(j, 2), radicalInverse(j, 3), std::ldexp(1.0, -(j + 1))});
    return balls;
}

BuiltSpace shrinkingBallsUnion(int n, int k) {
    if (k < 1 || k > 30) fail(ErrorKind::Config, "shrinkingBallsUnion: k must lie in [1, 30]");
    const nlohmann::json params = {{"n", n}, {"k", k}};
    BuiltSpace out;
    out.space = torusLattice(n, "shrinkingBallsUnion", params);
    const auto& c = out.space->coordinates();
    std::vector<char> inSet(out.space->size(), 0);
    for (const BallSpec& b : shrinkingBalls(k)) {
        Index nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        bool any = false;
        for (Index p = 0; p < out.space->size(); ++p) {
            const double d = std::hypot(torusGap(c(p, 0), b.cx), torusGap(c(p, 1), b.cy));
            if (d < b.r) {
                inSet[p] = 1;
                any = true;
            }
            if (d < best) {
                best = d;
                nearest = p;
            }
        }
        if (!any) inSet[nearest] = 1;
    }
    IndexSet marked;
    for (Index p = 0; p < out.space->size(); ++p)
        if (inSet[p]) marked.push_back(p);
    out.marked = marked;
    return out;
}

BuiltSpace buildSpace(const std::string& builder, const nlohmann::json& params) {
    if (builder == "circle" || builder == "interval") {
        rejectUnknown(params, {"n", "arc"});
        return lineSpace(builder, params, builder == "circle");
    }
    if (builder == "torus2d") return torus2d(params);
    if (builder == "weightedLine") return weightedLine(params);
    if (builder == "pointCloud") return pointCloud(params);
    if (builder == "shrinkingBallsUnion") {
        rejectUnknown(params, {"n", "k"});
        return shrinkingBallsUnion(positiveInt(params, "n"), positiveInt(params, "k"));
    }
    fail(ErrorKind::Config, "unknown space builder '" + builder + "'");
}

}  // namespace heatperim
