// SPDX-License-Identifier: Apache-2.0
#include "ihs/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "ihs/error.hpp"

namespace ihs {

using nlohmann::json;

Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size()) {
        fail(ErrorKind::Contract, "predictions and labels differ in length");
    }
    if (labels.empty()) fail(ErrorKind::Contract, "cannot compute metrics over zero samples");

    // confusion[actual][predicted]
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++confusion[static_cast<int>(labels[i])][static_cast<int>(predictions[i])];
    }
    const double n = static_cast<double>(labels.size());

    Metrics m;
    for (int c = 0; c < 2; ++c) {
        const double tp = static_cast<double>(confusion[c][c]);
        const double predicted = static_cast<double>(confusion[0][c] + confusion[1][c]);
        const double actual = static_cast<double>(confusion[c][0] + confusion[c][1]);
        auto& cm = m.per_class[c];
        cm.precision = predicted > 0 ? tp / predicted : 0.0;
        cm.recall = actual > 0 ? tp / actual : 0.0;
        cm.f1 = cm.precision + cm.recall > 0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
        cm.support = actual;
    }
    m.accuracy = static_cast<double>(confusion[0][0] + confusion[1][1]) / n;
    m.f1_macro = (m.per_class[0].f1 + m.per_class[1].f1) / 2.0;
    m.f1_weighted = (m.per_class[0].f1 * m.per_class[0].support + m.per_class[1].f1 * m.per_class[1].support) / n;
    return m;
}

const std::array<std::string, kMetricFields>& metric_field_names() {
    static const std::array<std::string, kMetricFields> names = {
        "not_hate.precision", "not_hate.recall", "not_hate.f1", "not_hate.support",
        "hate.precision",     "hate.recall",     "hate.f1",     "hate.support",
        "accuracy",           "f1_weighted",     "f1_macro"};
    return names;
}

std::array<double, kMetricFields> flatten(const Metrics& m) {
    const auto& a = m.per_class[0];
    const auto& b = m.per_class[1];
    return {a.precision, a.recall, a.f1, a.support, b.precision, b.recall, b.f1, b.support,
            m.accuracy,  m.f1_weighted, m.f1_macro};
}

Metrics unflatten(const std::array<double, kMetricFields>& v) {
    Metrics m;
    m.per_class[0] = {v[0], v[1], v[2], v[3]};
    m.per_class[1] = {v[4], v[5], v[6], v[7]};
    m.accuracy = v[8];
    m.f1_weighted = v[9];
    m.f1_macro = v[10];
    return m;
}

namespace {

json class_json(const ClassMetrics& c) {
    return {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
}

ClassMetrics class_from_json(const json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>(),
            j.at("support").get<double>()};
}

std::string cell(double mean, double sd) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * mean << " (" << 100.0 * sd << ")";
    return os.str();
}

}  // namespace

json to_json(const Metrics& m) {
    return {{"not_hate", class_json(m.per_class[0])},
            {"hate", class_json(m.per_class[1])},
            {"accuracy", m.accuracy},
            {"f1_weighted", m.f1_weighted},
            {"f1_macro", m.f1_macro}};
}

Metrics metrics_from_json(const json& j) {
    try {
        Metrics m;
        m.per_class[0] = class_from_json(j.at("not_hate"));
        m.per_class[1] = class_from_json(j.at("hate"));
        m.accuracy = j.at("accuracy").get<double>();
        m.f1_weighted = j.at("f1_weighted").get<double>();
        m.f1_macro = j.at("f1_macro").get<double>();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("metrics: ") + e.what());
    }
}

RunReport aggregate_runs(std::span<const Metrics> metrics_list, std::span<const std::uint64_t> seeds) {
    if (metrics_list.empty()) fail(ErrorKind::Contract, "cannot aggregate zero runs");
    if (seeds.size() != metrics_list.size()) fail(ErrorKind::Contract, "one seed per run is required");

    const double n = static_cast<double>(metrics_list.size());
    std::array<double, kMetricFields> mean{};
    for (const auto& m : metrics_list) {
        const auto f = flatten(m);
        for (std::size_t i = 0; i < kMetricFields; ++i) mean[i] += f[i];
    }
    for (auto& v : mean) v /= n;
    std::array<double, kMetricFields> sd{};
    if (metrics_list.size() > 1) {
        for (const auto& m : metrics_list) {
            const auto f = flatten(m);
            for (std::size_t i = 0; i < kMetricFields; ++i) sd[i] += (f[i] - mean[i]) * (f[i] - mean[i]);
        }
        for (auto& v : sd) v = std::sqrt(v / (n - 1.0));
    }

    RunReport r;
    r.seeds.assign(seeds.begin(), seeds.end());
    r.per_seed.assign(metrics_list.begin(), metrics_list.end());
    r.mean = unflatten(mean);
    r.std = unflatten(sd);
    return r;
}

json to_json(const RunReport& r) {
    json per_seed = json::array();
    for (const auto& m : r.per_seed) per_seed.push_back(to_json(m));
    return {{"config", r.config},     {"seeds", r.seeds},        {"per_seed", per_seed},
            {"mean", to_json(r.mean)}, {"std", to_json(r.std)}, {"provenance", r.provenance}};
}

RunReport report_from_json(const json& j) {
    try {
        RunReport r;
        r.config = j.value("config", json::object());
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        for (const auto& m : j.at("per_seed")) r.per_seed.push_back(metrics_from_json(m));
        r.mean = metrics_from_json(j.at("mean"));
        r.std = metrics_from_json(j.at("std"));
        r.provenance = j.value("provenance", json::object());
        return r;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("run report: ") + e.what());
    }
}

std::string format_table(std::span<const std::pair<std::string, RunReport>> rows) {
    std::size_t name_width = 5;
    for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());

    constexpr int kCell = 14;
    std::ostringstream os;
    const auto pad = [&](const std::string& s, std::size_t w) {
        os << s << std::string(w > s.size() ? w - s.size() : 0, ' ');
    };
    pad("", name_width + 2);
    pad("Not hate", 3 * kCell);
    pad("Hate", 3 * kCell);
    os << "Overall\n";
    pad("Model", name_width + 2);
    for (const char* h : {"P", "R", "F1", "P", "R", "F1", "Acc", "F1-w", "F1-M"}) pad(h, kCell);
    os << '\n';
    for (const auto& [name, r] : rows) {
        pad(name, name_width + 2);
        for (int c = 0; c < 2; ++c) {
            const auto& m = r.mean.per_class[c];
            const auto& s = r.std.per_class[c];
            pad(cell(m.precision, s.precision), kCell);
            pad(cell(m.recall, s.recall), kCell);
            pad(cell(m.f1, s.f1), kCell);
        }
        pad(cell(r.mean.accuracy, r.std.accuracy), kCell);
        pad(cell(r.mean.f1_weighted, r.std.f1_weighted), kCell);
        os << cell(r.mean.f1_macro, r.std.f1_macro) << '\n';
    }
    return os.str();
}

}  // namespace ihs
