#include "heatperim/experiment.hpp"

#include "heatperim/functionals.hpp"
#include "heatperim/plot.hpp"
#include "heatperim/serialize.hpp"
#include "heatperim/smoothing.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#ifndef HEATPERIM_VERSION
#define HEATPERIM_VERSION "unknown"
#endif

namespace heatperim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

double number(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_number())
        fail(ErrorKind::Config, std::string("ladder field '") + key + "' must be a number");
    return doc.at(key).get<double>();
}

void validateLadder(const nlohmann::json& ladder, const std::string& where) {
    if (!ladder.is_object()) fail(ErrorKind::Config, where + ": ladder must be an object");
    const std::string kind = ladder.value("kind", std::string("geometric"));
    if (kind == "explicit") {
        const auto values = ladder.at("values").get<std::vector<double>>();
        if (values.empty()) fail(ErrorKind::Config, where + ": explicit ladder is empty");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!(values[i] > 0.0) || (i && !(values[i] < values[i - 1])))
                fail(ErrorKind::Config, where + ": explicit ladder must be positive and strictly decreasing");
        return;
    }
    if (kind != "geometric" && kind != "sqrtTime") fail(ErrorKind::Config, where + ": unknown ladder kind '" + kind + "'");
    const double hi = number(ladder, "hi"), lo = number(ladder, "lo");
    if (!(hi > lo && lo > 0.0)) fail(ErrorKind::Config, where + ": ladder needs hi > lo > 0");
    if (!ladder.contains("count") || !ladder.at("count").is_number_integer() || ladder.at("count").get<int>() < 2)
        fail(ErrorKind::Config, where + ": ladder count must be an integer >= 2");
    if (ladder.contains("snap") && !(ladder.at("snap") == "spacing" || ladder.at("snap").is_number()))
        fail(ErrorKind::Config, where + ": snap must be \"spacing\" or a number");
}

double defaultWindowFactor(const std::string& name) {
    if (isHeatFunctional(name)) return 10.0;
    if (name == "minkowskiContent") return 4.0;
    return 8.0;
}

std::string environmentUname() {
    utsname info{};
    if (uname(&info) != 0) return "unknown";
    return std::string(info.sysname) + " " + info.release + " " + info.machine;
}

}  // namespace

Vector inputFunction(const std::string& input, const BuiltSpace& built, const std::string& id) {
    const MetricMeasureSpace& space = *built.space;
    if (input == "marked") {
        if (!built.marked) fail(ErrorKind::Config, id + ": input 'marked' needs a builder that marks a set");
        return indicator(*built.marked, space.size());
    }
    if (input == "sin" || input == "cos") {
        if (space.isDense()) fail(ErrorKind::Config, id + ": input '" + input + "' needs coordinates");
        const Eigen::ArrayXd x = 2.0 * std::numbers::pi * space.coordinates().col(0).array();
        return input == "sin" ? Vector(x.sin().matrix()) : Vector(x.cos().matrix());
    }
    fail(ErrorKind::Config, id + ": unknown input '" + input + "'");
}

const std::vector<std::string>& functionalNames() {
    static const std::vector<std::string> names{"nearDiagonalEnergy", "averagedDifferenceMass", "minkowskiContent",
                                                "ledouxGlobal",       "ledouxLocal",            "deGiorgi"};
    return names;
}

bool isHeatFunctional(const std::string& name) {
    return name == "ledouxGlobal" || name == "ledouxLocal" || name == "deGiorgi";
}

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
        ExperimentConfig cfg;
        cfg.raw = doc;
        cfg.name = doc.value("name", std::string("experiment"));
        cfg.seed = doc.value("seed", std::uint64_t{1});
        cfg.output = doc.value("output", std::string());
        const auto& space = doc.at("space");
        cfg.builder = space.at("builder").get<std::string>();
        cfg.params = space.value("params", nlohmann::json::object());
        const auto& builders = builderNames();
        if (std::find(builders.begin(), builders.end(), cfg.builder) == builders.end())
            fail(ErrorKind::Config, "unknown space builder '" + cfg.builder + "'");
        cfg.generator = doc.value("generator", nlohmann::json::object());
        if (doc.contains("heat")) {
            const auto& heat = doc.at("heat");
            cfg.heatTol = heat.value("tol", cfg.heatTol);
            const std::string strategy = heat.value("strategy", std::string("auto"));
            if (strategy == "spectral") cfg.heatStrategy = HeatStrategy::Spectral;
            else if (strategy == "krylov") cfg.heatStrategy = HeatStrategy::Krylov;
            else if (strategy != "auto") fail(ErrorKind::Config, "unknown heat strategy '" + strategy + "'");
            if (!(cfg.heatTol > 0.0)) fail(ErrorKind::Config, "heat tolerance must be positive");
        }
        std::set<std::string> ids;
        for (const auto& f : doc.value("functionals", nlohmann::json::array())) {
            FunctionalSpec spec;
            spec.name = f.at("name").get<std::string>();
            const auto& known = functionalNames();
            if (std::find(known.begin(), known.end(), spec.name) == known.end())
                fail(ErrorKind::Config, "unknown functional '" + spec.name + "'");
            spec.id = f.value("id", spec.name);
            if (!ids.insert(spec.id).second) fail(ErrorKind::Config, "duplicate functional id '" + spec.id + "'");
            spec.input = f.value("input", std::string("marked"));
            spec.ladder = f.at("ladder");
            validateLadder(spec.ladder, spec.id);
            spec.windowFactor = f.value("windowFactor", defaultWindowFactor(spec.name));
            spec.tubeScale = f.value("tubeScale", 1.0);
            if (f.contains("expect")) {
                spec.expectLimit = f.at("expect").at("limit").get<double>();
                spec.expectRelTol = f.at("expect").value("relTol", spec.expectRelTol);
            }
            cfg.functionals.push_back(std::move(spec));
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("config: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open config " + path);
    try {
        return parse(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Config, "config " + path + ": " + e.what());
    }
}

std::vector<double> resolveLadder(const nlohmann::json& ladder, const MetricMeasureSpace& space) {
    validateLadder(ladder, "ladder");
    const std::string kind = ladder.value("kind", std::string("geometric"));
    if (kind == "explicit") return ladder.at("values").get<std::vector<double>>();
    double snap = 0.0;
    if (ladder.contains("snap"))
        snap = ladder.at("snap").is_number() ? ladder.at("snap").get<double>()
                                             : (space.geometry().latticeSpacing > 0.0 ? space.geometry().latticeSpacing
                                                                                      : space.resolution());
    const double hi = number(ladder, "hi"), lo = number(ladder, "lo");
    const int count = ladder.at("count").get<int>();
    return kind == "sqrtTime" ? sqrtTimeLadder(hi, lo, count, snap) : geometricLadder(hi, lo, count, snap);
}

Generator buildConfiguredGenerator(const std::shared_ptr<const MetricMeasureSpace>& space, const nlohmann::json& block) {
    const std::string shapeName = block.value("shape", std::string("indicator"));
    if (shapeName != "indicator" && shapeName != "gaussian") fail(ErrorKind::Config, "unknown kernel shape '" + shapeName + "'");
    const KernelShape shape = shapeName == "gaussian" ? KernelShape::Gaussian : KernelShape::Indicator;
    if (block.contains("knn")) return buildGenerator(space, GraphRule::knn(block.at("knn").get<int>(), shape));
    double h;
    if (block.contains("h")) {
        h = block.at("h").get<double>();
    } else {
        const double base = space->geometry().latticeSpacing > 0.0 ? space->geometry().latticeSpacing : space->resolution();
        if (space->geometry().latticeSpacing <= 0.0 && !block.contains("hFactor"))
            return buildGenerator(space, GraphRule::knn(10, shape));
        h = block.value("hFactor", 1.0) * base;
    }
    return buildGenerator(space, GraphRule::radius(h, shape));
}

std::string ladderCsvRows(const FunctionalLadder& ladder, const std::string& id, const std::string& spaceLabel) {
    std::ostringstream out;
    for (const auto& s : ladder.samples)
        out << id << ',' << spaceLabel << ',' << formatDouble(s.param) << ',' << formatDouble(s.value) << ','
            << (s.inWindow ? "true" : "false") << ',' << (ladder.limitEst ? formatDouble(*ladder.limitEst) : "") << ','
            << toString(ladder.verdict) << '\n';
    return out.str();
}

bool ResultManifest::acceptanceViolated() const {
    for (const auto& r : results)
        if (r.expectationMet && !*r.expectationMet) return true;
    return false;
}

nlohmann::json ResultManifest::toJson() const {
    nlohmann::json doc;
    doc["configHash"] = configHash;
    doc["artifactVersion"] = artifactVersion;
    doc["wallClock"] = nlohmann::json::array();
    for (const auto& [stage, secs] : wallClock) doc["wallClock"].push_back({{"stage", stage}, {"seconds", secs}});
    doc["results"] = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json item = {{"id", r.id}, {"functional", r.name}, {"verdict", toString(r.verdict)}};
        item["limitEst"] = r.limitEst ? nlohmann::json(*r.limitEst) : nlohmann::json(nullptr);
        item["minInWindow"] = r.minInWindow ? nlohmann::json(*r.minInWindow) : nlohmann::json(nullptr);
        if (r.expectationMet) item["expectationMet"] = *r.expectationMet;
        doc["results"].push_back(std::move(item));
    }
    doc["failures"] = nlohmann::json::array();
    for (const auto& f : failures) doc["failures"].push_back({{"stage", f.stage}, {"message", f.message}});
    doc["environment"] = environment;
    return doc;
}

ResultManifest runExperiment(const ExperimentConfig& config, const std::string& outDir, unsigned workers) {
    namespace fs = std::filesystem;
    if (workers == 0) workers = defaultWorkers();
    fs::create_directories(outDir);
    ResultManifest manifest;
    manifest.configHash = configHash(config.raw);
    manifest.artifactVersion = HEATPERIM_VERSION;
    manifest.environment = {{"compiler", __VERSION__},
                            {"os", environmentUname()},
                            {"workers", workers},
                            {"hardwareThreads", std::thread::hardware_concurrency()}};
    std::mutex lock;
    auto record = [&](const std::string& stage, Clock::time_point start) {
        std::lock_guard guard(lock);
        manifest.wallClock.emplace_back(stage, seconds(start));
    };
    auto failStage = [&](const std::string& stage, const Error& e) {
        std::lock_guard guard(lock);
        manifest.failures.push_back({stage, e.what(), e.kind()});
    };
    auto writeManifest = [&] {
        std::ofstream out(fs::path(outDir) / "manifest.json");
        out << manifest.toJson().dump(2) << '\n';
    };

    BuiltSpace built;
    auto start = Clock::now();
    try {
        built = buildSpace(config.builder, config.params);
    } catch (const Error& e) {
        failStage("build-space", e);
        writeManifest();
        return manifest;
    }
    record("build-space", start);
    const MetricMeasureSpace& space = *built.space;

    std::unique_ptr<HeatOperator> heat;
    const bool needsHeat = std::any_of(config.functionals.begin(), config.functionals.end(),
                                       [](const FunctionalSpec& f) { return isHeatFunctional(f.name); });
    if (needsHeat) {
        start = Clock::now();
        try {
            HeatOptions options;
            options.tol = config.heatTol;
            options.strategy = config.heatStrategy;
            heat = std::make_unique<HeatOperator>(buildConfiguredGenerator(built.space, config.generator), options);
        } catch (const Error& e) {
            failStage("heat-operator", e);
        }
        record("heat-operator", start);
    }

    const std::size_t count = config.functionals.size();
    std::vector<std::optional<FunctionalLadder>> ladders(count);
    std::vector<std::optional<Vector>> inputs(count);
    parallelFor(count, workers, [&](std::size_t k) {
        const FunctionalSpec& spec = config.functionals[k];
        const std::string stage = "functional:" + spec.id;
        const auto begin = Clock::now();
        try {
            if (isHeatFunctional(spec.name) && !heat) fail(ErrorKind::Numerical, "heat operator unavailable");
            const Vector u = inputFunction(spec.input, built, spec.id);
            inputs[k] = u;
            const auto params = resolveLadder(spec.ladder, space);
            const double res = space.geometry().latticeSpacing > 0.0 ? space.geometry().latticeSpacing : space.resolution();
            if (spec.name == "minkowskiContent") {
                if (!built.marked) fail(ErrorKind::Config, spec.id + ": minkowskiContent needs a marked set");
                const IndexSet boundary = boundaryVertices(space, *built.marked, res);
                ladders[k] = minkowskiContent(space, boundary, params, spec.windowFactor);
            } else {
                const ParamWindow window = isHeatFunctional(spec.name) ? heatTimeWindow(res, spec.windowFactor)
                                                                       : lengthWindow(res, spec.windowFactor);
                std::function<double(double)> fn;
                IndexSet set;
                if (spec.name.rfind("ledoux", 0) == 0) {
                    if (!built.marked) fail(ErrorKind::Config, spec.id + ": Ledoux functionals need a marked set");
                    set = *built.marked;
                }
                if (spec.name == "nearDiagonalEnergy")
                    fn = [&](double eps) { return nearDiagonalEnergy(space, u, eps).value; };
                else if (spec.name == "averagedDifferenceMass")
                    fn = [&](double eps) { return averagedDifferenceDensity(space, u, eps).mass; };
                else if (spec.name == "ledouxGlobal")
                    fn = [&](double t) { return ledouxGlobal(*heat, set, t); };
                else if (spec.name == "ledouxLocal")
                    fn = [&](double t) { return ledouxLocal(*heat, set, t, spec.tubeScale); };
                else
                    fn = [&](double t) { return deGiorgi(*heat, u, t); };
                ladders[k] = ladderScan(spec.name, fn, params, window, 1);
            }
            std::ofstream(fs::path(outDir) / (spec.id + ".svg"))
                << emitPlot(*ladders[k], {640, 400, spec.id + " on " + space.label(),
                                          isHeatFunctional(spec.name) ? "t" : "scale", spec.name});
            std::ofstream(fs::path(outDir) / (spec.id + ".dat")) << emitDat(*ladders[k]);
        } catch (const Error& e) {
            failStage(stage, e);
        }
        record(stage, begin);
    });

    std::ofstream csv(fs::path(outDir) / "ladders.csv");
    csv << kLadderCsvHeader << '\n';
    std::ofstream vectors(fs::path(outDir) / "vectors.jsonl");
    vectors << nlohmann::json{{"name", "mu"}, {"space", space.label()},
                              {"values", std::vector<double>(space.measure().data(), space.measure().data() + space.size())}}
                   .dump()
            << '\n';
    for (std::size_t k = 0; k < count; ++k) {
        const FunctionalSpec& spec = config.functionals[k];
        if (inputs[k])
            vectors << nlohmann::json{{"name", "input:" + spec.id},
                                      {"space", space.label()},
                                      {"values", std::vector<double>(inputs[k]->data(), inputs[k]->data() + inputs[k]->size())}}
                           .dump()
                    << '\n';
        if (!ladders[k]) continue;
        const FunctionalLadder& ladder = *ladders[k];
        csv << ladderCsvRows(ladder, spec.id, space.label());
        FunctionalResult result{spec.id, spec.name, ladder.limitEst, ladder.minInWindow, ladder.verdict, std::nullopt};
        if (spec.expectLimit)
            result.expectationMet =
                ladder.limitEst && std::abs(*ladder.limitEst - *spec.expectLimit) <= spec.expectRelTol * std::abs(*spec.expectLimit);
        manifest.results.push_back(std::move(result));
    }
    std::sort(manifest.wallClock.begin(), manifest.wallClock.end());
    writeManifest();
    return manifest;
}

}  // namespace heatperim
