#pragma once

#include "gazebench/eval.hpp"
#include "gazebench/training.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazebench::report {

// One line of metrics.csv: metric,variant,value,threshold. The threshold
// column is empty for metrics that do not depend on one.
struct MetricRow {
    std::string metric;
    std::string variant;
    double value = 0.0;
    std::optional<double> threshold;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

inline constexpr const char* kMetricsHeader = "metric,variant,value,threshold";

std::vector<MetricRow> metric_rows(const eval::MetricsReport& report);

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

std::string format_csv(std::span<const MetricRow> rows);
// Throws FormatError.
std::vector<MetricRow> parse_csv(const std::string& text);

std::string confusion_svg(const eval::Confusion& confusion, const std::string& title);
std::string histogram_svg(const eval::ViewStats& stats, const std::string& title);
std::string loss_curve_svg(std::span<const training::EpochStats> history, const std::string& title);

nlohmann::json stats_json(const eval::DatasetStats& stats);

// epoch,heatmap,inbound,align,total. Wall time goes to a separate file so
// that reruns produce identical bytes here.
std::string history_csv(std::span<const training::EpochStats> history);
std::string timing_csv(std::span<const training::EpochStats> history);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// metrics.csv plus figures/confusion_<variant>.svg for each report.
void write_metrics(const std::filesystem::path& dir, std::span<const eval::MetricsReport> reports);
// stats.json plus figures/gaze_hist_<view>.svg.
void write_stats(const std::filesystem::path& dir, const eval::DatasetStats& stats);

} // namespace gazebench::report
