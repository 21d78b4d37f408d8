#pragma once

#include "heatperim/builders.hpp"
#include "heatperim/mmspace.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>

namespace heatperim {

/// {label, n, mu, dist}. Builder-made spaces store {kind: "generated", builder, params};
/// everything else stores {kind: "dense", rows} with rows[i] = d(i, 0..i-1).
nlohmann::json spaceToJson(const MetricMeasureSpace& space);

/// Inverse of spaceToJson. Generated spaces are rebuilt and checked against the stored label,
/// size and weights.
std::shared_ptr<const MetricMeasureSpace> spaceFromJson(const nlohmann::json& doc);

/// Sorted keys, no insignificant whitespace.
std::string canonicalDump(const nlohmann::json& doc);

/// SHA-256 of the canonical dump.
std::string configHash(const nlohmann::json& doc);

/// Shortest decimal text that reads back to the same double.
std::string formatDouble(double v);

}  // namespace heatperim
