#pragma once

#include "heatperim/builders.hpp"
#include "heatperim/generator.hpp"
#include "heatperim/heat.hpp"
#include "heatperim/ladder.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace heatperim {

/// Functionals a config may scan. Length-type ones take radii, heat ones take times.
const std::vector<std::string>& functionalNames();
bool isHeatFunctional(const std::string& name);

struct FunctionalSpec {
    std::string id;     // unique within the config; defaults to the functional name
    std::string name;
    std::string input = "marked";  // "marked" (indicator of the builder's set) | "sin" | "cos"
    nlohmann::json ladder;
    double windowFactor = 0.0;  // 0 picks the functional's default
    double tubeScale = 1.0;     // ledouxLocal only
    std::optional<double> expectLimit;
    double expectRelTol = 0.05;
};

/// A single JSON document:
/// {
///   "name": "...", "seed": 1, "output": "dir",
///   "space": {"builder": "circle", "params": {...}},
///   "generator": {"h": 0.01 | "hFactor": 1 | "knn": 10, "shape": "indicator" | "gaussian"},
///   "heat": {"tol": 1e-10, "strategy": "auto" | "spectral" | "krylov"},
///   "functionals": [{"name": ..., "input": ..., "ladder": {...}, "expect": {"limit": x, "relTol": r}}]
/// }
/// Ladders: {"kind": "geometric", "hi", "lo", "count", "snap": "spacing" | number},
/// {"kind": "sqrtTime", ...same, over sqrt t}, or {"kind": "explicit", "values": [...]}.
struct ExperimentConfig {
    std::string name;
    std::string builder;
    nlohmann::json params;
    nlohmann::json generator;
    double heatTol = 1e-10;
    HeatStrategy heatStrategy = HeatStrategy::Auto;
    std::vector<FunctionalSpec> functionals;
    std::uint64_t seed = 1;
    std::string output;
    nlohmann::json raw;

    /// Validates builders, functional names and ladder monotonicity; throws Error(Config).
    static ExperimentConfig parse(const nlohmann::json& doc);
    static ExperimentConfig load(const std::string& path);
};

/// Input function by name: "marked" (indicator of the builder's set), "sin" or "cos" of 2 pi x.
/// `id` names the caller in error messages.
Vector inputFunction(const std::string& input, const BuiltSpace& built, const std::string& id);

/// Resolves a ladder document against a space (snapping uses the lattice spacing).
std::vector<double> resolveLadder(const nlohmann::json& ladder, const MetricMeasureSpace& space);

/// Builds the generator described by a config's "generator" block.
Generator buildConfiguredGenerator(const std::shared_ptr<const MetricMeasureSpace>& space, const nlohmann::json& block);

struct FunctionalResult {
    std::string id;
    std::string name;
    std::optional<double> limitEst;
    std::optional<double> minInWindow;
    Verdict verdict = Verdict::NoPlateau;
    std::optional<bool> expectationMet;
};

struct StageFailure {
    std::string stage;
    std::string message;
    ErrorKind kind = ErrorKind::Numerical;
};

struct ResultManifest {
    std::string configHash;
    std::string artifactVersion;
    std::vector<std::pair<std::string, double>> wallClock;  // seconds per stage
    std::vector<FunctionalResult> results;
    std::vector<StageFailure> failures;
    nlohmann::json environment;

    bool acceptanceViolated() const;
    nlohmann::json toJson() const;
};

/// Runs every functional ladder (concurrently, up to `workers`) and writes into `outDir`:
/// ladders.csv, <id>.svg, <id>.dat, vectors.jsonl and manifest.json. Stage failures are recorded
/// in the manifest and the remaining stages still run.
ResultManifest runExperiment(const ExperimentConfig& config, const std::string& outDir, unsigned workers = 1);

/// Header of ladders.csv.
inline constexpr const char* kLadderCsvHeader = "functional,space,param,value,in_window,limit_est,verdict";

/// Rows of ladders.csv for one ladder (no header).
std::string ladderCsvRows(const FunctionalLadder& ladder, const std::string& id, const std::string& spaceLabel);

}  // namespace heatperim
