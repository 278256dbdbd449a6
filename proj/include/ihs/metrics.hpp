// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ihs/dataset.hpp"

namespace ihs {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double support = 0.0;

    bool operator==(const ClassMetrics&) const = default;
};

/// Binary classification metrics with Hate as the positive class. Index 0 of
/// per_class is NotHate, index 1 is Hate.
struct Metrics {
    std::array<ClassMetrics, 2> per_class{};
    double accuracy = 0.0;
    double f1_weighted = 0.0;
    double f1_macro = 0.0;

    const ClassMetrics& not_hate() const { return per_class[0]; }
    const ClassMetrics& hate() const { return per_class[1]; }
    bool operator==(const Metrics&) const = default;
};

/// Precision (recall) of a class with no predicted (actual) instances is 0,
/// and so is F1 when precision + recall is 0.
Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> labels);

/// Flat view of every field, in the order of metric_field_names().
inline constexpr std::size_t kMetricFields = 11;
std::array<double, kMetricFields> flatten(const Metrics& m);
Metrics unflatten(const std::array<double, kMetricFields>& values);
const std::array<std::string, kMetricFields>& metric_field_names();

nlohmann::json to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);

struct RunReport {
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::uint64_t> seeds;
    std::vector<Metrics> per_seed;
    Metrics mean;
    Metrics std;  // sample standard deviation (divisor N - 1), 0 for one run
    nlohmann::json provenance = nlohmann::json::object();
};

RunReport aggregate_runs(std::span<const Metrics> metrics_list, std::span<const std::uint64_t> seeds);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// Plain-text table with per-class P/R/F1 and overall Acc/F1-w/F1-M columns,
/// each cell "mean (std)" in percent.
std::string format_table(std::span<const std::pair<std::string, RunReport>> rows);

}  // namespace ihs
