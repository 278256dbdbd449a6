// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ihs/dataset.hpp"
#include "ihs/embedding_store.hpp"
#include "ihs/trainer.hpp"

namespace ihs {

enum class Direction { HateAsNotHate, NotHateAsHate };

std::string_view to_string(Direction direction);
/// "hate-as-not-hate" / "not-hate-as-hate".
Direction parse_direction(std::string_view name);

struct ErrorRecord {
    std::string sample_id;
    std::string text;
    Label true_label = Label::NotHate;
    Label predicted_label = Label::NotHate;
    double predicted_probability = 0.0;  // of the wrong, predicted class

    bool operator==(const ErrorRecord&) const = default;
};

/// Misclassifications in one direction among `ids`, by predicted probability
/// descending then id ascending, truncated to k.
std::vector<ErrorRecord> confident_errors(const TrainedRun& run, const SampleSet& samples,
                                          std::span<const std::string> ids, const FeatureStores& stores,
                                          Direction direction, std::size_t k = 20);

nlohmann::json to_json(std::span<const ErrorRecord> errors, Direction direction);
std::string format_errors(std::span<const ErrorRecord> errors, Direction direction);

inline constexpr std::string_view kDefaultProbeTemplate = "{target} are stupid";
const std::vector<std::string>& default_probe_targets();

/// Template with every "{target}" replaced; Validation error without a slot.
std::string instantiate_probe(std::string_view probe_template, std::string_view target);
/// Cache id under which the extractor stores a probe text.
std::string probe_id(std::string_view text);

/// Probe statements as canonical samples, ready for the extractor.
SampleSet probe_samples(std::string_view probe_template, std::span<const std::string> targets);

struct BiasProbeRow {
    std::string target;
    std::string text;
    double hate_probability = 0.0;
};

struct BiasProbeResult {
    std::string probe_template;
    std::vector<BiasProbeRow> rows;
};

/// Hate probability of each instantiated probe. The stores must match the
/// run's provenance and hold every probe id; otherwise the error lists the
/// texts still to be embedded.
BiasProbeResult bias_probe(const TrainedRun& run, std::string_view probe_template,
                           std::span<const std::string> targets, const FeatureStores& probe_stores);

nlohmann::json to_json(const BiasProbeResult& result);
std::string format_probe(const BiasProbeResult& result);

}  // namespace ihs
