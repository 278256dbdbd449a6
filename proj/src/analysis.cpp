// SPDX-License-Identifier: Apache-2.0
#include "ihs/analysis.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "ihs/error.hpp"
#include "ihs/io.hpp"

namespace ihs {

using nlohmann::json;

namespace {

constexpr std::string_view kSlot = "{target}";

const char* label_name(Label l) { return l == Label::Hate ? "hate" : "not_hate"; }

}  // namespace

std::string_view to_string(Direction direction) {
    return direction == Direction::HateAsNotHate ? "hate-as-not-hate" : "not-hate-as-hate";
}

Direction parse_direction(std::string_view name) {
    if (name == "hate-as-not-hate") return Direction::HateAsNotHate;
    if (name == "not-hate-as-hate") return Direction::NotHateAsHate;
    fail(ErrorKind::Config, "unknown error direction '" + std::string(name) + "'");
}

std::vector<ErrorRecord> confident_errors(const TrainedRun& run, const SampleSet& samples,
                                          std::span<const std::string> ids, const FeatureStores& stores,
                                          Direction direction, std::size_t k) {
    if (k == 0) fail(ErrorKind::Contract, "k must be at least 1");
    std::unordered_map<std::string_view, const Sample*> by_id;
    for (const auto& s : samples.samples()) by_id.emplace(s.id, &s);

    const auto set = resolve_split(samples, ids, stores, run.spec);
    const auto predicted = predict_labels(run.best, set.features);
    const Matrix proba = predict_probabilities(run.best, set.features);
    const Label wanted_truth = direction == Direction::HateAsNotHate ? Label::Hate : Label::NotHate;

    std::vector<ErrorRecord> out;
    for (std::size_t i = 0; i < set.ids.size(); ++i) {
        if (set.labels[i] != wanted_truth || predicted[i] == wanted_truth) continue;
        const int p = static_cast<int>(predicted[i]);
        out.push_back({set.ids[i], by_id.at(set.ids[i])->text, set.labels[i], predicted[i],
                       proba(static_cast<Eigen::Index>(i), p)});
    }
    std::sort(out.begin(), out.end(), [](const ErrorRecord& a, const ErrorRecord& b) {
        if (a.predicted_probability != b.predicted_probability) {
            return a.predicted_probability > b.predicted_probability;
        }
        return a.sample_id < b.sample_id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

json to_json(std::span<const ErrorRecord> errors, Direction direction) {
    json rows = json::array();
    for (const auto& e : errors) {
        rows.push_back({{"sample_id", e.sample_id},
                        {"text", e.text},
                        {"true_label", label_name(e.true_label)},
                        {"predicted_label", label_name(e.predicted_label)},
                        {"predicted_probability", e.predicted_probability}});
    }
    return {{"direction", std::string(to_string(direction))}, {"errors", rows}};
}

std::string format_errors(std::span<const ErrorRecord> errors, Direction direction) {
    std::ostringstream os;
    os << "direction: " << to_string(direction) << " (" << errors.size() << ")\n";
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const auto& e = errors[i];
        os << std::setw(3) << i + 1 << "  " << std::fixed << std::setprecision(4) << e.predicted_probability << "  "
           << e.sample_id << "  " << e.text << '\n';
    }
    return os.str();
}

const std::vector<std::string>& default_probe_targets() {
    static const std::vector<std::string> targets = {"Black people", "White people", "Jews", "Muslims", "Gay", "They"};
    return targets;
}

std::string instantiate_probe(std::string_view probe_template, std::string_view target) {
    if (probe_template.find(kSlot) == std::string_view::npos) {
        fail(ErrorKind::Validation, "probe template has no {target} slot");
    }
    std::string out;
    std::size_t pos = 0;
    for (auto hit = probe_template.find(kSlot); hit != std::string_view::npos;
         hit = probe_template.find(kSlot, pos)) {
        out.append(probe_template.substr(pos, hit - pos));
        out.append(target);
        pos = hit + kSlot.size();
    }
    out.append(probe_template.substr(pos));
    return out;
}

std::string probe_id(std::string_view text) { return "probe-" + to_hex(sha256(text)).substr(0, 16); }

SampleSet probe_samples(std::string_view probe_template, std::span<const std::string> targets) {
    std::vector<Sample> samples;
    for (const auto& t : targets) {
        auto text = instantiate_probe(probe_template, t);
        const auto id = probe_id(text);
        // Repeated targets map to one text; the extractor needs it once.
        if (std::any_of(samples.begin(), samples.end(), [&](const Sample& s) { return s.id == id; })) continue;
        samples.push_back({id, std::move(text), Label::NotHate, Dataset::IHC, std::nullopt});
    }
    return SampleSet(Dataset::IHC, std::move(samples));
}

BiasProbeResult bias_probe(const TrainedRun& run, std::string_view probe_template,
                           std::span<const std::string> targets, const FeatureStores& probe_stores) {
    check_compatible(run, probe_stores);
    BiasProbeResult result{std::string(probe_template), {}};
    std::vector<std::string> missing;
    std::vector<FeatureBundle> features;
    for (const auto& t : targets) {
        auto text = instantiate_probe(probe_template, t);
        const auto id = probe_id(text);
        try {
            features.push_back(
                resolve_features(probe_stores, id, run.spec.uses_context(), run.spec.uses_emotion()));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Lookup) throw;
            missing.push_back(text);
        }
        result.rows.push_back({t, std::move(text), 0.0});
    }
    if (!missing.empty()) {
        std::string msg = "missing probe embeddings for:";
        for (const auto& m : missing) msg += " \"" + m + "\"";
        fail(ErrorKind::Lookup, msg);
    }
    const Matrix proba = predict_probabilities(run.best, features);
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        result.rows[i].hate_probability = proba(static_cast<Eigen::Index>(i), 1);
    }
    return result;
}

json to_json(const BiasProbeResult& result) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"target", r.target}, {"text", r.text}, {"hate_probability", r.hate_probability}});
    }
    return {{"template", result.probe_template}, {"rows", rows}};
}

std::string format_probe(const BiasProbeResult& result) {
    std::size_t width = 4;
    for (const auto& r : result.rows) width = std::max(width, r.text.size());
    std::ostringstream os;
    os << "template: " << result.probe_template << '\n';
    for (const auto& r : result.rows) {
        os << r.text << std::string(width - r.text.size() + 2, ' ') << std::fixed << std::setprecision(2)
           << r.hate_probability << '\n';
    }
    return os.str();
}

}  // namespace ihs
