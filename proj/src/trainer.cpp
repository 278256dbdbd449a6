// SPDX-License-Identifier: Apache-2.0
#include "ihs/trainer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "ihs/error.hpp"
#include "ihs/io.hpp"
#include "ihs/random.hpp"

namespace ihs {

using nlohmann::json;

namespace {

constexpr std::size_t kEvalChunk = 256;

enum Stream : std::uint64_t { kInitStream = 0, kTrainStream = 1 };

}  // namespace

json to_json(const TrainHyper& h) {
    json j = {{"learning_rate", h.learning_rate},
              {"weight_decay", h.weight_decay},
              {"warmup_fraction", h.warmup_fraction},
              {"dropout", h.dropout},
              {"batch_size", h.batch_size},
              {"epochs", h.epochs},
              {"beta1", h.beta1},
              {"beta2", h.beta2},
              {"epsilon", h.epsilon}};
    j["class_weights"] = h.class_weights ? json(*h.class_weights) : json(nullptr);
    return j;
}

TrainHyper hyper_from_json(const json& j, TrainHyper h) {
    try {
        h.learning_rate = j.value("learning_rate", h.learning_rate);
        h.weight_decay = j.value("weight_decay", h.weight_decay);
        h.warmup_fraction = j.value("warmup_fraction", h.warmup_fraction);
        h.dropout = j.value("dropout", h.dropout);
        h.batch_size = j.value("batch_size", h.batch_size);
        h.epochs = j.value("epochs", h.epochs);
        h.beta1 = j.value("beta1", h.beta1);
        h.beta2 = j.value("beta2", h.beta2);
        h.epsilon = j.value("epsilon", h.epsilon);
        if (j.contains("class_weights")) {
            if (j["class_weights"].is_null()) {
                h.class_weights.reset();
            } else {
                h.class_weights = j["class_weights"].get<std::array<double, 2>>();
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("hyperparameters: ") + e.what());
    }
    h.validate();
    return h;
}

std::vector<StoreProvenance> provenance_of(const FeatureStores& stores, const ModelSpec& spec) {
    std::vector<StoreProvenance> out;
    const auto add = [&](const char* role, const EmbeddingStore* s) {
        if (!s) fail(ErrorKind::Config, std::string("no ") + role + " store configured");
        out.push_back({role, s->model_id(), s->pooling(), to_hex(s->instruction_digest())});
    };
    add("tweet", stores.tweet);
    if (spec.uses_context()) add("context", stores.context);
    if (spec.uses_emotion()) add("emotion", stores.emotion);
    return out;
}

json to_json(std::span<const StoreProvenance> provenance) {
    json j = json::array();
    for (const auto& p : provenance) {
        j.push_back({{"role", p.role},
                     {"model_id", p.model_id},
                     {"pooling", to_string(p.pooling)},
                     {"instruction_sha256", p.instruction_sha256}});
    }
    return j;
}

LabeledFeatures resolve_split(const SampleSet& samples, std::span<const std::string> ids, const FeatureStores& stores,
                              const ModelSpec& spec) {
    std::unordered_map<std::string_view, Label> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples.samples()) labels.emplace(s.id, s.label);

    LabeledFeatures out;
    out.ids.assign(ids.begin(), ids.end());
    out.features.reserve(ids.size());
    out.labels.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = labels.find(id);
        if (it == labels.end()) fail(ErrorKind::Lookup, "split references unknown sample id '" + id + "'");
        out.labels.push_back(it->second);
        out.features.push_back(resolve_features(stores, id, spec.uses_context(), spec.uses_emotion()));
    }
    return out;
}

Matrix predict_probabilities(const Model& model, std::span<const FeatureBundle> features) {
    Matrix out(static_cast<Eigen::Index>(features.size()), 2);
    for (std::size_t start = 0; start < features.size(); start += kEvalChunk) {
        const auto n = std::min(kEvalChunk, features.size() - start);
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
            softmax_rows(model.logits(features.subspan(start, n)));
    }
    return out;
}

std::vector<Label> predict_labels(const Model& model, std::span<const FeatureBundle> features) {
    std::vector<Label> out;
    out.reserve(features.size());
    for (std::size_t start = 0; start < features.size(); start += kEvalChunk) {
        const auto n = std::min(kEvalChunk, features.size() - start);
        const Matrix logits = model.logits(features.subspan(start, n));
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            out.push_back(logits(i, 1) > logits(i, 0) ? Label::Hate : Label::NotHate);
        }
    }
    return out;
}

TrainedRun train(const ModelSpec& spec, const SampleSet& samples, const SplitAssignment& splits,
                 const FeatureStores& stores, const TrainHyper& hyper, std::uint64_t seed) {
    hyper.validate();
    ModelSpec resolved = spec;
    resolved.dropout = hyper.dropout;
    resolved.validate();

    const auto provenance = provenance_of(stores, resolved);
    const auto train_set = resolve_split(samples, splits.train, stores, resolved);
    const auto val_set = resolve_split(samples, splits.validation, stores, resolved);
    if (train_set.ids.empty()) fail(ErrorKind::Config, "training split is empty");
    if (val_set.ids.empty()) fail(ErrorKind::Config, "validation split is empty");

    Model model(resolved, derive_seed(seed, kInitStream));
    Rng rng(derive_seed(seed, kTrainStream));
    AdamW optimizer(hyper);
    const auto params = model.parameters();

    const std::size_t n = train_set.ids.size();
    const std::size_t batches_per_epoch = (n + hyper.batch_size - 1) / hyper.batch_size;
    const LinearSchedule schedule{hyper.learning_rate, hyper.epochs * batches_per_epoch, hyper.warmup_fraction};
    const std::array<double, 2> class_weights = hyper.class_weights.value_or(std::array<double, 2>{1.0, 1.0});

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<FeatureBundle> batch;
    std::vector<int> batch_labels;
    std::vector<double> per_sample;

    std::vector<EpochRecord> history;
    std::optional<Model> best;
    std::size_t best_epoch = 0;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        shuffle(std::span(order), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += hyper.batch_size) {
            const std::size_t end = std::min(n, start + hyper.batch_size);
            batch.clear();
            batch_labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(train_set.features[order[i]]);
                batch_labels.push_back(static_cast<int>(train_set.labels[order[i]]));
            }

            Tape tape;
            model.zero_grad();
            const auto fwd = model.forward(tape, batch, Mode::Train, &rng);
            const auto loss = tape.softmax_cross_entropy(fwd.logits, batch_labels, class_weights, &per_sample);
            for (std::size_t i = 0; i < per_sample.size(); ++i) {
                if (!std::isfinite(per_sample[i])) {
                    fail(ErrorKind::Numerical, "non-finite loss at step " + std::to_string(step) + " for sample '" +
                                                   train_set.ids[order[start + i]] + "'");
                }
            }
            tape.backward(loss);
            optimizer.step(params, schedule.lr_at(step));
            ++step;
            loss_sum += tape.value(loss)(0, 0) * static_cast<double>(end - start);
        }

        const auto predictions = predict_labels(model, val_set.features);
        EpochRecord record{epoch, loss_sum / static_cast<double>(n), compute_metrics(predictions, val_set.labels)};
        if (!best || record.validation.f1_weighted > history[best_epoch].validation.f1_weighted) {
            best = model;
            best_epoch = epoch;
        }
        history.push_back(std::move(record));
    }

    return TrainedRun{resolved, hyper, seed, std::move(*best), best_epoch, step, std::move(history), provenance};
}

Metrics evaluate(const TrainedRun& run, const SampleSet& samples, std::span<const std::string> ids,
                 const FeatureStores& stores) {
    const auto set = resolve_split(samples, ids, stores, run.spec);
    if (set.ids.empty()) fail(ErrorKind::Contract, "cannot evaluate an empty split");
    return compute_metrics(predict_labels(run.best, set.features), set.labels);
}

void check_compatible(const TrainedRun& run, const FeatureStores& stores) {
    const auto theirs = provenance_of(stores, run.spec);
    for (std::size_t i = 0; i < theirs.size(); ++i) {
        const auto& a = run.provenance.at(i);
        const auto& b = theirs[i];
        if (a.model_id != b.model_id || a.pooling != b.pooling || a.instruction_sha256 != b.instruction_sha256) {
            fail(ErrorKind::Protocol, b.role + " store (" + b.model_id + ", " + std::string(to_string(b.pooling)) +
                                          ", " + b.instruction_sha256.substr(0, 12) + ") does not match training (" +
                                          a.model_id + ", " + std::string(to_string(a.pooling)) + ", " +
                                          a.instruction_sha256.substr(0, 12) + ")");
        }
    }
}

Metrics cross_evaluate(const TrainedRun& run, const SampleSet& foreign_samples, const FeatureStores& foreign_stores,
                       const std::vector<std::string>* ids) {
    check_compatible(run, foreign_stores);
    if (ids) return evaluate(run, foreign_samples, *ids, foreign_stores);
    std::vector<std::string> all;
    all.reserve(foreign_samples.size());
    for (const auto& s : foreign_samples.samples()) all.push_back(s.id);
    return evaluate(run, foreign_samples, all, foreign_stores);
}

RunReport run_multi_seed(const ModelSpec& spec, const SampleSet& samples, const SplitAssignment& splits,
                         const FeatureStores& stores, const TrainHyper& hyper, std::span<const std::uint64_t> seeds,
                         std::size_t jobs) {
    if (seeds.empty()) fail(ErrorKind::Config, "no seeds given");
    std::vector<std::optional<Metrics>> results(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                const auto run = train(spec, samples, splits, stores, hyper, seeds[i]);
                results[i] = evaluate(run, samples, splits.test, stores);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, seeds.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<Metrics> per_seed;
    for (auto& r : results) per_seed.push_back(*r);
    auto report = aggregate_runs(per_seed, seeds);
    ModelSpec resolved = spec;
    resolved.dropout = hyper.dropout;
    report.config = {{"spec", to_json(resolved)}, {"hyper", to_json(hyper)}};
    const auto prov = provenance_of(stores, resolved);
    report.provenance = {{"stores", to_json(prov)}};
    return report;
}

void save_checkpoint(const std::filesystem::path& dir, const TrainedRun& run, const json& extra) {
    json history = json::array();
    for (const auto& h : run.history) {
        history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"validation", to_json(h.validation)}});
    }
    const std::size_t steps_per_epoch = run.history.empty() ? 0 : run.steps / run.history.size();
    json manifest = {{"spec", to_json(run.spec)},
                     {"hyper", to_json(run.hyper)},
                     {"seed", run.seed},
                     {"step", (run.best_epoch + 1) * steps_per_epoch},
                     {"total_steps", run.steps},
                     {"best_epoch", run.best_epoch},
                     {"val_weighted_f1", run.best_validation_f1()},
                     {"history", history},
                     {"provenance", to_json(run.provenance)}};
    for (const auto& [k, v] : extra.items()) manifest[k] = v;

    // Staged beside the target and renamed into place as a whole.
    namespace fs = std::filesystem;
    fs::path staging = dir;
    staging += ".tmp";
    try {
        fs::remove_all(staging);
        fs::create_directories(staging);
        write_file_atomic(staging / "params.bin", encode_parameters(run.best.parameters()));
        write_file_atomic(staging / "manifest.json", manifest.dump(2) + "\n");
        fs::remove_all(dir);
        fs::rename(staging, dir);
    } catch (const fs::filesystem_error& e) {
        std::error_code ignored;
        fs::remove_all(staging, ignored);
        fail(ErrorKind::Io, dir.string() + ": " + e.what());
    } catch (...) {
        std::error_code ignored;
        fs::remove_all(staging, ignored);
        throw;
    }
}

TrainedRun load_checkpoint(const std::filesystem::path& dir) {
    json m;
    try {
        m = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, (dir / "manifest.json").string() + ": " + e.what());
    }
    try {
        const auto spec = spec_from_json(m.at("spec"));
        const auto hyper = hyper_from_json(m.at("hyper"));
        Model model(spec, 0);
        const auto values = decode_parameters(read_file(dir / "params.bin"));
        model.load_values(values);

        std::vector<EpochRecord> history;
        for (const auto& h : m.at("history")) {
            history.push_back({h.at("epoch").get<std::size_t>(), h.at("train_loss").get<double>(),
                               metrics_from_json(h.at("validation"))});
        }
        std::vector<StoreProvenance> provenance;
        for (const auto& p : m.at("provenance")) {
            provenance.push_back({p.at("role").get<std::string>(), p.at("model_id").get<std::string>(),
                                  parse_pooling(p.at("pooling").get<std::string>()),
                                  p.at("instruction_sha256").get<std::string>()});
        }
        TrainedRun run{spec,
                       hyper,
                       m.at("seed").get<std::uint64_t>(),
                       std::move(model),
                       m.at("best_epoch").get<std::size_t>(),
                       m.at("total_steps").get<std::size_t>(),
                       std::move(history),
                       std::move(provenance)};
        if (run.best_epoch >= run.history.size()) fail(ErrorKind::Corruption, "best_epoch outside history");
        return run;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, (dir / "manifest.json").string() + ": " + e.what());
    }
}

}  // namespace ihs
