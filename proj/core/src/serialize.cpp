#include "heatperim/serialize.hpp"

#include "heatperim/hash.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace heatperim {

nlohmann::json spaceToJson(const MetricMeasureSpace& space) {
    nlohmann::json doc;
    doc["label"] = space.label();
    doc["n"] = space.size();
    doc["mu"] = std::vector<double>(space.measure().data(), space.measure().data() + space.size());
    const SpaceProvenance& origin = space.provenance();
    if (!origin.builder.empty()) {
        doc["dist"] = {{"kind", "generated"}, {"builder", origin.builder}, {"params", nlohmann::json::parse(origin.paramsJson)}};
        return doc;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < space.size(); ++i) {
        std::vector<double> row(i);
        for (Index j = 0; j < i; ++j) row[j] = space.distance(i, j);
        rows.push_back(std::move(row));
    }
    doc["dist"] = {{"kind", "dense"}, {"rows", std::move(rows)}};
    return doc;
}

std::shared_ptr<const MetricMeasureSpace> spaceFromJson(const nlohmann::json& doc) {
    try {
        const std::string label = doc.at("label").get<std::string>();
        const Index n = doc.at("n").get<Index>();
        const auto weights = doc.at("mu").get<std::vector<double>>();
        if (n <= 0 || static_cast<Index>(weights.size()) != n)
            fail(ErrorKind::Config, "space document: mu must have n entries");
        const Vector mu = Eigen::Map<const Vector>(weights.data(), n);
        const auto& dist = doc.at("dist");
        const std::string kind = dist.at("kind").get<std::string>();
        if (kind == "generated") {
            auto built = buildSpace(dist.at("builder").get<std::string>(), dist.at("params"));
            if (built.space->label() != label || built.space->size() != n || built.space->measure() != mu)
                fail(ErrorKind::Config, "space document: rebuilt space does not match the stored label or weights");
            return built.space;
        }
        if (kind != "dense") fail(ErrorKind::Config, "space document: unknown dist kind '" + kind + "'");
        const auto& rows = dist.at("rows");
        if (!rows.is_array() || static_cast<Index>(rows.size()) != n)
            fail(ErrorKind::Config, "space document: need n rows of the lower triangle");
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
        for (Index i = 0; i < n; ++i) {
            const auto row = rows[i].get<std::vector<double>>();
            if (static_cast<Index>(row.size()) != i)
                fail(ErrorKind::Config, "space document: row " + std::to_string(i) + " must have " +
                                            std::to_string(i) + " entries");
            for (Index j = 0; j < i; ++j) d(i, j) = d(j, i) = row[j];
        }
        return std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::dense(std::move(d), mu, label));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("space document: ") + e.what());
    }
}

std::string canonicalDump(const nlohmann::json& doc) { return doc.dump(); }

std::string configHash(const nlohmann::json& doc) { return sha256Hex(canonicalDump(doc)); }

std::string formatDouble(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buffer{};
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), v);
    return std::string(buffer.data(), result.ptr);
}

}  // namespace heatperim
