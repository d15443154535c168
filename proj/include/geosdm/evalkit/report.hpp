// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geosdm/evalkit/metrics.hpp"

namespace geosdm::evalkit {

std::string report_json(const MetricReport& report);
std::string report_text(const MetricReport& report);

/// Writes report.json and report.txt into `dir`; returns both paths.
std::vector<std::filesystem::path> write_report(const MetricReport& report, const std::filesystem::path& dir);

/// predictions.csv: surveyId,topk,scores with space-separated lists.
/// Scores are written in shortest round-trip form, so a reload is exact.
std::string render_predictions(const std::vector<PredictionSet>& predictions);
void save_predictions(const std::vector<PredictionSet>& predictions, const std::filesystem::path& path);
std::vector<PredictionSet> parse_predictions(std::string_view text, std::string_view source = "predictions");
std::vector<PredictionSet> load_predictions(const std::filesystem::path& path);

}  // namespace geosdm::evalkit
