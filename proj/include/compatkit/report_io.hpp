#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "compatkit/metrics.hpp"

namespace compatkit {

/// Version of the report and delta-report JSON layout.
inline constexpr int kReportSchemaVersion = 1;

/// Rendering of a ratio that could not be computed.
inline constexpr const char* kUndefined = "undefined";

nlohmann::json to_json(const CompatibilityReport& report);
CompatibilityReport report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DeltaReport& delta);
DeltaReport delta_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Fixed-width text table, percentages with two decimals.
std::string format_report_table(const CompatibilityReport& report);
std::string format_delta_table(const DeltaReport& delta);

/// "12.34" for a fraction of 0.1234, or "undefined".
std::string format_percent(std::optional<double> fraction);

}  // namespace compatkit
