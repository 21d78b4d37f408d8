#include "heatperim/bv.hpp"
#include "heatperim/curvature.hpp"
#include "heatperim/experiment.hpp"
#include "heatperim/functionals.hpp"
#include "heatperim/plot.hpp"
#include "heatperim/serialize.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace heatperim;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kAcceptance = 4 };

struct Globals {
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    bool seedGiven = false;
    unsigned workers = 1;
    double tol = 1e-10;
    bool assertExpect = false;
};

struct SpaceArgs {
    std::string builder;
    std::vector<std::string> params;  // key=value
    std::string spaceFile;
    std::optional<double> h;
    std::optional<int> knn;
    std::string strategy = "auto";
    std::string input = "marked";
};

struct LadderArgs {
    std::vector<double> explicitValues;
    double hi = 0.0, lo = 0.0;
    int count = 8;
    std::optional<double> expect;
    double relTol = 0.05;
};

nlohmann::json parseValue(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        return text;
    }
}

// A space from --space/--param, from --space-file, or from the config's "space" block.
struct Setup {
    BuiltSpace built;
    nlohmann::json generator = nlohmann::json::object();
};

Setup resolveSpace(const Globals& g, const SpaceArgs& a) {
    Setup s;
    nlohmann::json config;
    if (!g.config.empty()) config = ExperimentConfig::load(g.config).raw;
    if (!a.spaceFile.empty()) {
        std::ifstream in(a.spaceFile);
        if (!in) fail(ErrorKind::Config, "cannot read " + a.spaceFile);
        s.built.space = spaceFromJson(nlohmann::json::parse(in));
    } else {
        std::string builder = a.builder;
        nlohmann::json params = nlohmann::json::object();
        if (builder.empty() && config.contains("space")) {
            builder = config["space"].value("builder", "");
            params = config["space"].value("params", nlohmann::json::object());
        }
        if (builder.empty()) fail(ErrorKind::Config, "no space given: use --space, --space-file or --config");
        for (const auto& kv : a.params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) fail(ErrorKind::Config, "--param expects key=value, got '" + kv + "'");
            params[kv.substr(0, eq)] = parseValue(kv.substr(eq + 1));
        }
        if (builder == "pointCloud" && g.seedGiven) params["seed"] = g.seed;
        s.built = buildSpace(builder, params);
    }
    if (config.contains("generator")) s.generator = config["generator"];
    if (a.h) s.generator = {{"h", *a.h}};
    if (a.knn) s.generator = {{"knn", *a.knn}};
    return s;
}

HeatOperator heatOperator(const Globals& g, const SpaceArgs& a, const Generator& gen) {
    HeatOptions o;
    o.tol = g.tol;
    if (a.strategy == "spectral") o.strategy = HeatStrategy::Spectral;
    else if (a.strategy == "krylov") o.strategy = HeatStrategy::Krylov;
    else if (a.strategy != "auto") fail(ErrorKind::Config, "unknown heat strategy '" + a.strategy + "'");
    return HeatOperator(gen, o);
}

std::vector<double> resolve(const LadderArgs& l, const MetricMeasureSpace& space, bool sqrtTime) {
    if (!l.explicitValues.empty()) return resolveLadder({{"kind", "explicit"}, {"values", l.explicitValues}}, space);
    return resolveLadder({{"kind", sqrtTime ? "sqrtTime" : "geometric"}, {"hi", l.hi}, {"lo", l.lo}, {"count", l.count},
                          {"snap", "spacing"}},
                         space);
}

fs::path outDir(const Globals& g) {
    fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    fs::create_directories(dir);
    return dir;
}

void writeFile(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Config, "cannot write " + path.string());
    out << text;
}

// Prints each ladder, writes ladders.csv and <id>.svg/.dat under --out (CSV to stdout otherwise),
// and checks --expect.
int reportLadders(const Globals& g, const LadderArgs& l, const std::string& spaceLabel,
                  const std::vector<std::pair<std::string, FunctionalLadder>>& ladders) {
    int code = kOk;
    std::string csv = std::string(kLadderCsvHeader) + "\n";
    for (const auto& [id, lad] : ladders) {
        csv += ladderCsvRows(lad, id, spaceLabel);
        std::printf("%s: %s", id.c_str(), toString(lad.verdict));
        if (lad.limitEst) std::printf(", limit %s", formatDouble(*lad.limitEst).c_str());
        if (lad.minInWindow) std::printf(", min in window %s", formatDouble(*lad.minInWindow).c_str());
        std::printf("\n");
        if (!g.out.empty()) {
            const fs::path dir = outDir(g);
            writeFile(dir / (id + ".svg"), emitPlot(lad, PlotStyle{640, 400, id, "parameter", "value"}));
            writeFile(dir / (id + ".dat"), emitDat(lad));
        }
        if (g.assertExpect && l.expect) {
            const bool ok = lad.limitEst && std::abs(*lad.limitEst - *l.expect) <= l.relTol * std::abs(*l.expect);
            if (!ok) {
                std::fprintf(stderr, "%s: expected limit %g within %g relative\n", id.c_str(), *l.expect, l.relTol);
                code = kAcceptance;
            }
        }
    }
    if (g.out.empty()) std::cout << csv;
    else writeFile(outDir(g) / "ladders.csv", csv);
    return code;
}

void addSpaceOptions(CLI::App* cmd, SpaceArgs& a, bool withInput) {
    cmd->add_option("--space", a.builder, "Space builder")->check(CLI::IsMember(builderNames()));
    cmd->add_option("--param", a.params, "Builder parameter key=value (repeatable)");
    cmd->add_option("--space-file", a.spaceFile, "Serialized space written by build-space");
    cmd->add_option("--bandwidth", a.h, "Radius rule for the generator");
    cmd->add_option("--knn", a.knn, "k-nearest-neighbor rule for the generator");
    cmd->add_option("--strategy", a.strategy, "Heat strategy: auto, spectral or krylov");
    if (withInput) cmd->add_option("--input", a.input, "Input function: marked, sin or cos");
}

void addLadderOptions(CLI::App* cmd, LadderArgs& l, const std::string& unit) {
    cmd->add_option("--values", l.explicitValues, "Explicit decreasing " + unit + " values");
    cmd->add_option("--hi", l.hi, "Largest " + unit);
    cmd->add_option("--lo", l.lo, "Smallest " + unit);
    cmd->add_option("--count", l.count, "Number of ladder points");
    cmd->add_option("--expect", l.expect, "Expected limit, checked with --assert");
    cmd->add_option("--rel-tol", l.relTol, "Relative tolerance for --expect");
}

// Reads ladders.csv back into per-functional ladders.
std::vector<std::pair<std::string, FunctionalLadder>> readLadderCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line != kLadderCsvHeader) fail(ErrorKind::Config, path + ": unexpected header");
    std::vector<std::pair<std::string, FunctionalLadder>> out;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        if (line.back() == ',') cols.emplace_back();
        if (cols.size() != 7) fail(ErrorKind::Config, path + ": malformed row '" + line + "'");
        auto [it, fresh] = index.emplace(cols[0], out.size());
        if (fresh) out.push_back({cols[0], FunctionalLadder{}});
        FunctionalLadder& lad = out[it->second].second;
        lad.name = cols[0];
        const LadderSample s{std::stod(cols[2]), std::stod(cols[3]), cols[4] == "true"};
        lad.samples.push_back(s);
        if (!cols[5].empty()) lad.limitEst = std::stod(cols[5]);
        lad.verdict = cols[6] == "plateau" ? Verdict::Plateau : Verdict::NoPlateau;
    }
    for (auto& [id, lad] : out) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& s : lad.samples)
            if (s.inWindow) {
                lo = std::min(lo, s.param);
                hi = std::max(hi, s.param);
                lad.minInWindow = std::min(lad.minInWindow.value_or(s.value), s.value);
            }
        lad.window = hi > 0.0 ? ParamWindow{lo, hi} : ParamWindow{0.0, 0.0};
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heatperim: heat-semigroup characterizations of perimeter on metric measure spaces"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--seed", g.seed, "Seed for randomized builders")->each([&](const std::string&) { g.seedGiven = true; });
    app.add_option("--workers", g.workers, "Worker threads (default: $HEATPERIM_WORKERS, else 1)")->check(CLI::PositiveNumber);
    app.add_option("--tol", g.tol, "Heat semigroup tolerance")->check(CLI::PositiveNumber);
    app.add_flag("--assert", g.assertExpect, "Exit 4 when an expectation fails");
    app.fallthrough();

    SpaceArgs sa;
    LadderArgs la;
    double t = 0.01;
    bool local = false;
    double tubeScale = 1.0;
    int radius = 2;
    std::string csvPath;

    auto* buildCmd = app.add_subcommand("build-space", "Build a space and write it as JSON");
    addSpaceOptions(buildCmd, sa, false);

    auto* heatCmd = app.add_subcommand("heat", "Apply the heat semigroup to an input function");
    addSpaceOptions(heatCmd, sa, true);
    heatCmd->add_option("--t", t, "Time")->check(CLI::NonNegativeNumber);

    auto* perimeterCmd = app.add_subcommand("perimeter", "Perimeter and total variation of the input");
    addSpaceOptions(perimeterCmd, sa, true);

    auto* ledouxCmd = app.add_subcommand("ledoux", "Ledoux functional along a sqrt(t) ladder");
    addSpaceOptions(ledouxCmd, sa, false);
    addLadderOptions(ledouxCmd, la, "sqrt(t)");
    ledouxCmd->add_flag("--local", local, "Localize to the sqrt(t)-tube around the set");
    ledouxCmd->add_option("--tube-scale", tubeScale, "Tube radius in units of sqrt(t)");

    auto* degiorgiCmd = app.add_subcommand("degiorgi", "De Giorgi functional along a sqrt(t) ladder");
    addSpaceOptions(degiorgiCmd, sa, true);
    addLadderOptions(degiorgiCmd, la, "sqrt(t)");

    auto* ksCmd = app.add_subcommand("ks-energy", "Near-diagonal energy along a radius ladder");
    addSpaceOptions(ksCmd, sa, true);
    addLadderOptions(ksCmd, la, "radius");

    auto* curvatureCmd = app.add_subcommand("curvature", "Best curvature constant per vertex");
    addSpaceOptions(curvatureCmd, sa, false);
    curvatureCmd->add_option("--radius", radius, "Neighborhood radius in hops");

    auto* coareaCmd = app.add_subcommand("coarea", "Co-area identity for the input function");
    addSpaceOptions(coareaCmd, sa, true);

    auto* runCmd = app.add_subcommand("run", "Run a config-driven experiment");

    auto* plotCmd = app.add_subcommand("plot", "Render SVG plots from a ladders.csv");
    plotCmd->add_option("csv", csvPath, "ladders.csv to plot")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : kConfig;
    }

    if (const char* env = std::getenv("HEATPERIM_WORKERS"); env && !app.count("--workers")) {
        char* end = nullptr;
        const unsigned long n = std::strtoul(env, &end, 10);
        if (*env == '\0' || *end != '\0' || n == 0 || n > 1024) {
            std::fprintf(stderr, "error: HEATPERIM_WORKERS must be a positive integer, got '%s'\n", env);
            return kConfig;
        }
        g.workers = static_cast<unsigned>(n);
    }

    try {
        if (*runCmd) {
            if (g.config.empty()) fail(ErrorKind::Config, "run needs --config");
            auto cfg = ExperimentConfig::load(g.config);
            if (g.seedGiven) cfg.seed = g.seed;
            if (app.count("--tol")) cfg.heatTol = g.tol;
            const std::string dir = !g.out.empty() ? g.out : (!cfg.output.empty() ? cfg.output : "results");
            const auto manifest = runExperiment(cfg, dir, g.workers);
            for (const auto& r : manifest.results) {
                std::printf("%s: %s", r.id.c_str(), toString(r.verdict));
                if (r.limitEst) std::printf(", limit %s", formatDouble(*r.limitEst).c_str());
                if (r.expectationMet) std::printf(", expectation %s", *r.expectationMet ? "met" : "violated");
                std::printf("\n");
            }
            for (const auto& f : manifest.failures) std::fprintf(stderr, "%s failed: %s\n", f.stage.c_str(), f.message.c_str());
            std::printf("results in %s\n", dir.c_str());
            if (g.assertExpect && manifest.acceptanceViolated()) return kAcceptance;
            if (!manifest.failures.empty()) return manifest.failures.front().kind == ErrorKind::Numerical ? kNumerical : kConfig;
            return kOk;
        }
        if (*plotCmd) {
            for (const auto& [id, lad] : readLadderCsv(csvPath)) {
                const fs::path dir = g.out.empty() ? fs::path(csvPath).parent_path() : outDir(g);
                writeFile(dir / (id + ".svg"), emitPlot(lad, PlotStyle{640, 400, id, "parameter", "value"}));
                std::printf("%s\n", (dir / (id + ".svg")).string().c_str());
            }
            return kOk;
        }

        const Setup setup = resolveSpace(g, sa);
        const BuiltSpace& built = setup.built;
        const MetricMeasureSpace& space = *built.space;
        const double h = space.geometry().latticeSpacing > 0.0 ? space.geometry().latticeSpacing : space.resolution();

        if (*buildCmd) {
            const std::string text = canonicalDump(spaceToJson(space)) + "\n";
            if (g.out.empty()) std::cout << text;
            else writeFile(outDir(g) / "space.json", text);
            std::fprintf(stderr, "%s: %lld points, resolution %s%s\n", space.label().c_str(), static_cast<long long>(space.size()),
                         formatDouble(space.resolution()).c_str(),
                         built.marked ? (", " + std::to_string(built.marked->size()) + " marked").c_str() : "");
            return kOk;
        }

        const Generator gen = buildConfiguredGenerator(built.space, setup.generator);
        if (*curvatureCmd) {
            const auto rep = bestK(gen, radius, g.workers);
            std::printf("globalK %s at vertex %lld\n", formatDouble(rep.globalK).c_str(), static_cast<long long>(rep.argmin));
            if (!g.out.empty()) exportCurvatureReport(rep, (outDir(g) / "curvature").string());
            return kOk;
        }

        const Vector u = inputFunction(sa.input, built, "--input");
        if (*perimeterCmd) {
            const auto rep = bvReport(gen, u);
            nlohmann::json doc{{"space", space.label()}, {"input", sa.input}, {"edgeTV", rep.tvEdge}, {"gammaTV", rep.tvGamma}};
            if (built.marked) doc["perimeter"] = perimeter(gen, *built.marked);
            std::cout << doc.dump(2) << "\n";
            return kOk;
        }
        if (*coareaCmd) {
            const auto chk = coareaCheck(gen, u);
            std::printf("lhs %s\nrhs %s\nresidual %s\n", formatDouble(chk.lhs).c_str(), formatDouble(chk.rhs).c_str(),
                        formatDouble(chk.residual).c_str());
            return g.assertExpect && chk.residual > 1e-10 * chk.rhs ? kAcceptance : kOk;
        }
        if (*ksCmd) {
            const auto eps = resolve(la, space, false);
            const auto lad = ladderScan("nearDiagonalEnergy", [&](double e) { return nearDiagonalEnergy(space, u, e).value; }, eps,
                                        lengthWindow(h), g.workers);
            return reportLadders(g, la, space.label(), {{"nearDiagonalEnergy", lad}});
        }

        const HeatOperator op = heatOperator(g, sa, gen);
        if (*heatCmd) {
            const Vector v = op.apply(u, t);
            std::ostringstream csv;
            csv << "vertex,value\n";
            for (Index i = 0; i < v.size(); ++i) csv << i << ',' << formatDouble(v[i]) << '\n';
            if (g.out.empty()) std::cout << csv.str();
            else writeFile(outDir(g) / "heat.csv", csv.str());
            std::fprintf(stderr, "%s: strategy %s, mass %s\n", space.label().c_str(), toString(op.strategy()),
                         formatDouble((space.measure().array() * v.array()).sum()).c_str());
            return kOk;
        }
        const auto ts = resolve(la, space, true);
        if (*ledouxCmd) {
            if (!built.marked) fail(ErrorKind::Config, "ledoux needs a builder that marks a set");
            const std::string name = local ? "ledouxLocal" : "ledouxGlobal";
            const auto lad = ladderScan(
                name,
                [&](double s) { return local ? ledouxLocal(op, *built.marked, s, tubeScale) : ledouxGlobal(op, *built.marked, s); },
                ts, heatTimeWindow(h), g.workers);
            return reportLadders(g, la, space.label(), {{name, lad}});
        }
        if (*degiorgiCmd) {
            const auto lad = ladderScan("deGiorgi", [&](double s) { return deGiorgi(op, u, s); }, ts, heatTimeWindow(h), g.workers);
            return reportLadders(g, la, space.label(), {{"deGiorgi", lad}});
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == ErrorKind::Numerical ? kNumerical : kConfig;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    }
    return kOk;
}
