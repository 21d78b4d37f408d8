#include <doctest.h>

#include "heatperim/bv.hpp"
#include "heatperim/experiment.hpp"
#include "heatperim/plot.hpp"
#include "heatperim/serialize.hpp"
#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace heatperim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("heatperim_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

FunctionalLadder ladderOf(std::vector<std::pair<double, double>> pts) {
    std::vector<LadderSample> samples;
    for (auto [p, v] : pts) samples.push_back({p, v, true});
    return summarizeLadder("test", std::move(samples), ParamWindow{});
}

}  // namespace

TEST_CASE("builders") {
    auto c = buildSpace("circle", {{"n", 8}});
    CHECK(c.space->size() == 8);
    CHECK(c.space->measure(3) == 0.125);
    CHECK(c.space->distance(0, 7) == doctest::Approx(0.125));
    CHECK(c.space->label() == "circle(8)");

    auto t = buildSpace("torus2d", {{"n", 64}});
    CHECK(t.space->size() == 4096);
    CHECK(t.space->measure(100) == doctest::Approx(1.0 / 4096));
    CHECK(t.space->distance(0, 63) == doctest::Approx(1.0 / 64));

    CHECK_THROWS_AS(buildSpace("sphere", {{"n", 8}}), Error);
    CHECK_THROWS_AS(buildSpace("circle", {{"n", 8}, {"radius", 2}}), Error);
    CHECK_THROWS_AS(buildSpace("weightedLine", {{"n", 8}, {"density", "cubic:2"}}), Error);
    try {
        buildSpace("circle", {{"m", 8}});
    } catch (const Error& e) {
        CHECK((e.kind() == ErrorKind::Config));
    }
    for (const auto& name : builderNames()) CHECK_FALSE(name.empty());
}

TEST_CASE("shrinking balls union") {
    const int n = 256, k = 8;
    auto b = shrinkingBallsUnion(n, k);
    REQUIRE(b.marked);
    const auto balls = shrinkingBalls(k);
    REQUIRE(balls.size() == static_cast<std::size_t>(k));
    double l1Perimeter = 0.0, radii = 0.0;
    for (int j = 0; j < k; ++j) {
        CHECK(balls[j].r == doctest::Approx(std::ldexp(1.0, -(j + 2))));
        radii += 2 * std::numbers::pi * balls[j].r;
        // a lattice disk has l1 perimeter 8r; a single point has 4h
        l1Perimeter += std::max(8 * balls[j].r, 4.0 / n);
    }
    const double p = perimeter(support::nearest(b), *b.marked);
    CHECK(p == doctest::Approx(l1Perimeter).epsilon(0.25));
    CHECK(p <= 8.0 / (2 * std::numbers::pi) * radii * 1.25);
}

TEST_CASE("space serialization round trip") {
    for (const auto& b : {support::circle(64), support::torus(8), buildSpace("pointCloud", {{"n", 50}, {"dim", 3}, {"seed", 2}}),
                          buildSpace("weightedLine", {{"n", 30}, {"density", "geometric:0.9"}})}) {
        const std::string first = canonicalDump(spaceToJson(*b.space));
        const auto back = spaceFromJson(nlohmann::json::parse(first));
        CHECK(canonicalDump(spaceToJson(*back)) == first);
    }
    Eigen::MatrixXd d(3, 3);
    d << 0, 0.1, 0.3, 0.1, 0, 0.25, 0.3, 0.25, 0;
    Vector mu(3);
    mu << 0.2, 0.3, 0.5;
    auto dense = support::denseSpace(d, mu);
    const std::string first = canonicalDump(spaceToJson(*dense));
    const auto back = spaceFromJson(nlohmann::json::parse(first));
    CHECK(canonicalDump(spaceToJson(*back)) == first);
    CHECK(back->distance(2, 0) == 0.3);

    auto doc = spaceToJson(*support::circle(16).space);
    doc["mu"][0] = 0.5;
    CHECK_THROWS_AS(spaceFromJson(doc), Error);
}

TEST_CASE("canonical form and hashing") {
    const auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2], "c": {"z": 0, "y": 1}})");
    const auto b = nlohmann::json::parse(R"({ "c": {"y": 1, "z": 0}, "a": [1,2], "b": 1 })");
    CHECK(canonicalDump(a) == R"({"a":[1,2],"b":1,"c":{"y":1,"z":0}})");
    CHECK(configHash(a) == configHash(b));
    CHECK(configHash(a).size() == 64);
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) CHECK(std::stod(formatDouble(v)) == v);
}

TEST_CASE("convergence plots") {
    const auto single = emitPlot(ladderOf({{0.1, 2.0}}));
    CHECK(single.rfind("<?xml", 0) == 0);
    CHECK(single.find("version=\"1.1\"") != std::string::npos);
    CHECK(count(single, "<circle") == 1);
    CHECK(count(single, "stroke-dasharray") == 0);

    const auto flat = ladderOf({{0.1, 2.0}, {0.05, 2.01}, {0.02, 2.0}, {0.01, 1.99}});
    REQUIRE(flat.limitEst);
    const auto svg = emitPlot(flat, PlotStyle{640, 400, "ledouxGlobal", "t", "value"});
    CHECK(count(svg, "stroke-dasharray") == 1);
    CHECK(svg.find("limit 2") != std::string::npos);
    CHECK(svg.find("no plateau") == std::string::npos);

    const auto divergent = ladderOf({{0.1, 1.0}, {0.05, 2.0}, {0.02, 4.0}, {0.01, 8.0}});
    CHECK(emitPlot(divergent).find("no plateau") != std::string::npos);
    CHECK(count(emitDat(divergent), "\n") == 6);
    CHECK_THROWS_AS(emitPlot(FunctionalLadder{}), Error);
}

TEST_CASE("experiment with no functionals") {
    auto cfg = ExperimentConfig::parse(nlohmann::json::parse(R"({"space": {"builder": "circle", "params": {"n": 32}}})"));
    const auto dir = scratch("empty_run");
    const auto manifest = runExperiment(cfg, dir.string());
    CHECK(manifest.results.empty());
    CHECK(manifest.failures.empty());
    CHECK_FALSE(manifest.acceptanceViolated());
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(slurp(dir / "ladders.csv") == std::string(kLadderCsvHeader) + "\n");
}

TEST_CASE("config validation") {
    auto bad = [](const char* text) { return ExperimentConfig::parse(nlohmann::json::parse(text)); };
    CHECK_THROWS_AS(bad(R"({"space": {"builder": "blob"}})"), Error);
    CHECK_THROWS_AS(bad(R"({"space": {"builder": "circle", "params": {"n": 8}}, "heat": {"strategy": "magic"}})"), Error);
    CHECK_THROWS_AS(bad(R"({"space": {"builder": "circle", "params": {"n": 8}},
        "functionals": [{"name": "nope", "ladder": {"kind": "explicit", "values": [0.1]}}]})"),
                    Error);
    CHECK_THROWS_AS(bad(R"({"space": {"builder": "circle", "params": {"n": 8}},
        "functionals": [{"name": "deGiorgi", "ladder": {"kind": "explicit", "values": [0.1, 0.2]}}]})"),
                    Error);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), Error);
    try {
        bad(R"({"space": 3})");
    } catch (const Error& e) {
        CHECK((e.kind() == ErrorKind::Config));
    }
}

TEST_CASE("bundled circle config") {
    auto cfg = ExperimentConfig::load(std::string(HEATPERIM_CONFIG_DIR) + "/energy_circle.json");
    const auto first = scratch("t31_a"), second = scratch("t31_b");
    const auto manifest = runExperiment(cfg, first.string(), 2);
    REQUIRE(manifest.failures.empty());
    REQUIRE(manifest.results.size() == 3);
    const auto& energy = manifest.results[0];
    CHECK(energy.id == "energy_arc");
    REQUIRE(energy.limitEst);
    CHECK(*energy.limitEst == doctest::Approx(1.0).epsilon(0.03));
    CHECK_FALSE(manifest.acceptanceViolated());

    runExperiment(cfg, second.string(), 1);
    CHECK(slurp(first / "ladders.csv") == slurp(second / "ladders.csv"));
    CHECK(slurp(first / "vectors.jsonl") == slurp(second / "vectors.jsonl"));
    CHECK(fs::exists(first / "energy_arc.svg"));
    CHECK(fs::exists(first / "energy_arc.dat"));

    std::ifstream csv(first / "ladders.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == kLadderCsvHeader);
    const std::regex row(R"(^[A-Za-z_]+,[^,]+,[-+0-9.e]+,[-+0-9.e]+,(true|false),([-+0-9.e]+)?,(plateau|no plateau)$)");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        CHECK(std::regex_match(line, row));
        ++rows;
    }
    CHECK(rows == 30);

    const auto doc = nlohmann::json::parse(slurp(first / "manifest.json"));
    CHECK(doc["configHash"] == configHash(cfg.raw));
    CHECK(doc.contains("wallClock"));
}

TEST_CASE("stage failures are recorded and the run continues") {
    auto cfg = ExperimentConfig::parse(nlohmann::json::parse(R"({
        "space": {"builder": "circle", "params": {"n": 256}},
        "functionals": [
          {"name": "minkowskiContent", "ladder": {"kind": "geometric", "hi": 0.1, "lo": 0.02, "count": 5}},
          {"name": "nearDiagonalEnergy", "input": "sin", "ladder": {"kind": "geometric", "hi": 0.2, "lo": 0.04, "count": 5, "snap": "spacing"},
           "expect": {"limit": 10.0, "relTol": 0.01}}
        ]})"));
    const auto dir = scratch("failures");
    const auto manifest = runExperiment(cfg, dir.string());
    REQUIRE(manifest.failures.size() == 1);
    CHECK(manifest.failures[0].stage == "functional:minkowskiContent");
    REQUIRE(manifest.results.size() == 1);
    CHECK(manifest.acceptanceViolated());
    const auto doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(doc["failures"].size() == 1);
}
