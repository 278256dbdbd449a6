// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ihs/dataset.hpp"
#include "ihs/embedding_store.hpp"
#include "ihs/metrics.hpp"
#include "ihs/model.hpp"
#include "ihs/optim.hpp"

namespace ihs {

nlohmann::json to_json(const TrainHyper& hyper);
TrainHyper hyper_from_json(const nlohmann::json& j, TrainHyper base = {});

/// (model_id, pooling, instruction digest) of a store a run consumed.
struct StoreProvenance {
    std::string role;
    std::string model_id;
    Pooling pooling = Pooling::NormalizedSum;
    std::string instruction_sha256;

    bool operator==(const StoreProvenance&) const = default;
};

std::vector<StoreProvenance> provenance_of(const FeatureStores& stores, const ModelSpec& spec);
nlohmann::json to_json(std::span<const StoreProvenance> provenance);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    Metrics validation;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainedRun {
    ModelSpec spec;
    TrainHyper hyper;
    std::uint64_t seed = 0;
    Model best;                  // parameters at the best validation epoch
    std::size_t best_epoch = 0;  // 0-based index into history
    std::size_t steps = 0;       // optimizer steps taken over the whole run
    std::vector<EpochRecord> history;
    std::vector<StoreProvenance> provenance;

    double best_validation_f1() const { return history.at(best_epoch).validation.f1_weighted; }
};

/// Labels and features of a list of sample ids, resolved up front so that a
/// missing embedding aborts before any training happens.
struct LabeledFeatures {
    std::vector<std::string> ids;
    std::vector<FeatureBundle> features;
    std::vector<Label> labels;
};

LabeledFeatures resolve_split(const SampleSet& samples, std::span<const std::string> ids,
                              const FeatureStores& stores, const ModelSpec& spec);

/// Eval-mode predictions; exactly equal logits resolve to NotHate.
std::vector<Label> predict_labels(const Model& model, std::span<const FeatureBundle> features);
/// Eval-mode {NotHate, Hate} probabilities, one row per input.
Matrix predict_probabilities(const Model& model, std::span<const FeatureBundle> features);

/// Runs the epoch loop: seeded shuffling, AdamW under the linear warmup/decay
/// schedule over epochs * ceil(|train| / batch) steps, validation after every
/// epoch, and retention of the epoch with the highest validation weighted F1
/// (earliest on ties). The model is built with spec.dropout replaced by
/// hyper.dropout. Deterministic in all of its inputs.
TrainedRun train(const ModelSpec& spec, const SampleSet& samples, const SplitAssignment& splits,
                 const FeatureStores& stores, const TrainHyper& hyper, std::uint64_t seed);

Metrics evaluate(const TrainedRun& run, const SampleSet& samples, std::span<const std::string> ids,
                 const FeatureStores& stores);

/// Throws a Protocol error unless every store the model needs was produced by
/// the same encoder, pooling and instruction as the ones used for training.
void check_compatible(const TrainedRun& run, const FeatureStores& stores);

/// Evaluates the unmodified best checkpoint on a foreign dataset: all of its
/// samples, or only `ids` when given.
Metrics cross_evaluate(const TrainedRun& run, const SampleSet& foreign_samples, const FeatureStores& foreign_stores,
                       const std::vector<std::string>* ids = nullptr);

/// Trains one run per seed (up to `jobs` in parallel), evaluates each best
/// checkpoint on the test split and aggregates the results.
RunReport run_multi_seed(const ModelSpec& spec, const SampleSet& samples, const SplitAssignment& splits,
                         const FeatureStores& stores, const TrainHyper& hyper, std::span<const std::uint64_t> seeds,
                         std::size_t jobs = 1);

inline constexpr std::array<std::uint64_t, 5> kDefaultSeeds = {0, 1, 2, 3, 4};

// Checkpoint directory: manifest.json {"spec","hyper","seed","step",
// "val_weighted_f1",...} beside the parameter blob params.bin.
void save_checkpoint(const std::filesystem::path& dir, const TrainedRun& run,
                     const nlohmann::json& extra = nlohmann::json::object());
TrainedRun load_checkpoint(const std::filesystem::path& dir);

}  // namespace ihs
