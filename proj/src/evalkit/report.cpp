// SPDX-License-Identifier: Apache-2.0
#include "geosdm/evalkit/report.hpp"

#include <fmt/format.h>

#include <sstream>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"
#include "json.hpp"

namespace geosdm::evalkit {

std::string report_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  auto block = [](const MetricBlock& b) {
    nlohmann::ordered_json o;
    o["auc"] = b.auc;
    o["precision"] = b.precision;
    o["recall"] = b.recall;
    o["f1"] = b.f1;
    return o;
  };
  j["k"] = report.k;
  j["num_samples"] = report.num_samples;
  j["micro"] = block(report.micro);
  j["samples"] = block(report.samples);
  j["macro"] = block(report.macro);
  j["skipped_samples"] = report.skipped_samples;
  j["skipped_classes"] = report.skipped_classes;
  return j.dump(2) + "\n";
}

std::string report_text(const MetricReport& report) {
  std::string out = fmt::format("Top-{} evaluation over {} surveys\n", report.k, report.num_samples);
  out += fmt::format("{:<8} {:>9} {:>9} {:>9} {:>9}\n", "average", "auc", "precision", "recall", "f1");
  auto row = [&](const char* name, const MetricBlock& b) {
    out += fmt::format("{:<8} {:>9.6f} {:>9.6f} {:>9.6f} {:>9.6f}\n", name, b.auc, b.precision, b.recall, b.f1);
  };
  row("micro", report.micro);
  row("samples", report.samples);
  row("macro", report.macro);
  out += fmt::format("skipped samples: {}, skipped classes (macro AUC): {}\n", report.skipped_samples,
                     report.skipped_classes);
  return out;
}

std::vector<std::filesystem::path> write_report(const MetricReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto json_path = dir / "report.json";
  const auto text_path = dir / "report.txt";
  write_text(json_path, report_json(report));
  write_text(text_path, report_text(report));
  return {json_path, text_path};
}

std::string render_predictions(const std::vector<PredictionSet>& predictions) {
  std::string out = "surveyId,topk,scores\n";
  for (const auto& p : predictions) {
    out += p.survey_id;
    out += ',';
    for (std::size_t i = 0; i < p.topk.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(p.topk[i]);
    }
    out += ',';
    for (std::size_t i = 0; i < p.scores.size(); ++i) {
      if (i) out += ' ';
      out += format_double(p.scores[i]);
    }
    out += '\n';
  }
  return out;
}

void save_predictions(const std::vector<PredictionSet>& predictions, const std::filesystem::path& path) {
  write_text(path, render_predictions(predictions));
}

std::vector<PredictionSet> parse_predictions(std::string_view text, std::string_view source) {
  std::vector<PredictionSet> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto where = fmt::format("{} line {}", source, line_no);
    const auto fields = split_fields(line, ',');
    if (!header_seen) {
      if (fields.size() != 3 || trim(fields[0]) != "surveyId" || trim(fields[1]) != "topk" ||
          trim(fields[2]) != "scores") {
        throw Error(ErrorKind::format, where + ": expected header surveyId,topk,scores");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) throw Error(ErrorKind::format, where + ": expected 3 fields");
    PredictionSet p;
    p.survey_id = std::string(trim(fields[0]));
    for (const auto& tok : split_fields(fields[1], ' ')) {
      if (trim(tok).empty()) continue;
      const auto v = parse_int(trim(tok), where + " topk");
      if (v < 0) throw Error(ErrorKind::format, where + ": negative topk index");
      p.topk.push_back(static_cast<std::size_t>(v));
    }
    for (const auto& tok : split_fields(fields[2], ' ')) {
      if (trim(tok).empty()) continue;
      p.scores.push_back(parse_double(trim(tok), where + " score"));
    }
    if (!out.empty() && out.front().scores.size() != p.scores.size()) {
      throw Error(ErrorKind::format, where + ": score vector length differs from first row");
    }
    out.push_back(std::move(p));
  }
  if (!header_seen) throw Error(ErrorKind::format, std::string(source) + ": missing header");
  return out;
}

std::vector<PredictionSet> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text(path), path.string());
}

}  // namespace geosdm::evalkit
