// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "ihs/error.hpp"
#include "ihs/io.hpp"
#include "ihs/trainer.hpp"
#include "support.hpp"

namespace support = ihs::testing;

using namespace ihs;

namespace {

TrainHyper quick_hyper() {
    TrainHyper h = linear_probe_profile();
    h.epochs = 3;
    h.batch_size = 32;
    return h;
}

const support::GaussianData& data() {
    static const auto d = support::two_gaussians(21, 12, 3.0, 200, 60, 60);
    return d;
}

FeatureStores stores() { return {&data().store, nullptr, nullptr}; }

const TrainedRun& trained() {
    static const auto run =
        train(make_spec(ModelKind::EmbedHead, 12), data().samples, data().splits, stores(), quick_hyper(), 4);
    return run;
}

}  // namespace

TEST(Trainer, HistoryAndBestEpoch) {
    const auto& run = trained();
    ASSERT_EQ(run.history.size(), 3u);
    EXPECT_EQ(run.steps, 3u * 7u);  // ceil(200 / 32) = 7
    for (std::size_t e = 0; e < run.history.size(); ++e) {
        EXPECT_LE(run.history[e].validation.f1_weighted, run.best_validation_f1());
        if (e < run.best_epoch) EXPECT_LT(run.history[e].validation.f1_weighted, run.best_validation_f1());
    }
    EXPECT_EQ(run.spec.dropout, quick_hyper().dropout);
}

TEST(Trainer, DeterministicForSeed) {
    const auto again =
        train(make_spec(ModelKind::EmbedHead, 12), data().samples, data().splits, stores(), quick_hyper(), 4);
    EXPECT_EQ(again.history, trained().history);
    EXPECT_EQ(again.best.parameter("mlp.out.weight").value, trained().best.parameter("mlp.out.weight").value);
}

TEST(Trainer, EvaluateOnValidationReproducesStoredMetric) {
    const auto m = evaluate(trained(), data().samples, data().splits.validation, stores());
    EXPECT_EQ(m.f1_weighted, trained().best_validation_f1());
}

TEST(Trainer, CrossEvaluateOnOwnTestEqualsEvaluate) {
    const auto& s = data().splits.test;
    EXPECT_EQ(cross_evaluate(trained(), data().samples, stores(), &s), evaluate(trained(), data().samples, s, stores()));
}

TEST(Trainer, PredictionTiesGoToNotHate) {
    auto model = Model(make_spec(ModelKind::EmbedHead, 3), 0);
    model.parameter("mlp.out.weight").value.setZero();
    model.parameter("mlp.out.bias").value.setZero();
    std::vector<FeatureBundle> f(2);
    for (auto& b : f) b.tweet = Matrix::Ones(1, 3);
    const auto labels = predict_labels(model, f);
    EXPECT_EQ(labels[0], Label::NotHate);
    const auto p = predict_probabilities(model, f);
    EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(Trainer, MissingEmbeddingFailsBeforeTraining) {
    EmbeddingStore partial("synthetic-gaussians", Pooling::MeanPassthrough, 12);
    const FeatureStores s{&partial, nullptr, nullptr};
    try {
        train(make_spec(ModelKind::EmbedHead, 12), data().samples, data().splits, s, quick_hyper(), 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Lookup);
    }
}

TEST(Trainer, EmptyTrainOrValidationIsAnError) {
    auto splits = data().splits;
    splits.validation.clear();
    EXPECT_THROW(train(make_spec(ModelKind::EmbedHead, 12), data().samples, splits, stores(), quick_hyper(), 0),
                 Error);
}

TEST(Trainer, ProtocolMismatch) {
    EmbeddingStore other("another-encoder", Pooling::MeanPassthrough, 12);
    for (const auto& r : data().store.records()) other.add(r.sample_id, r.vector);
    const FeatureStores s{&other, nullptr, nullptr};
    try {
        check_compatible(trained(), s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Protocol);
    }
    EXPECT_THROW(cross_evaluate(trained(), data().samples, s), Error);
    EXPECT_NO_THROW(check_compatible(trained(), stores()));
}

TEST(Trainer, HyperJsonRoundtrip) {
    auto h = quick_hyper();
    h.class_weights = std::array<double, 2>{1.0, 2.5};
    EXPECT_EQ(hyper_from_json(to_json(h)), h);
    EXPECT_THROW(hyper_from_json(nlohmann::json{{"batch_size", 0}}), Error);
}

TEST(Checkpoint, Roundtrip) {
    const auto dir = support::scratch_dir("checkpoint") / "run";
    save_checkpoint(dir, trained(), {{"note", "x"}});
    EXPECT_FALSE(std::filesystem::exists(dir.string() + ".tmp"));
    const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(manifest.at("step"), (trained().best_epoch + 1) * 7);
    EXPECT_EQ(manifest.at("note"), "x");
    EXPECT_EQ(manifest.at("val_weighted_f1").get<double>(), trained().best_validation_f1());

    const auto back = load_checkpoint(dir);
    EXPECT_EQ(back.spec, trained().spec);
    EXPECT_EQ(back.hyper, trained().hyper);
    EXPECT_EQ(back.seed, trained().seed);
    EXPECT_EQ(back.best_epoch, trained().best_epoch);
    EXPECT_EQ(back.provenance, trained().provenance);
    EXPECT_EQ(evaluate(back, data().samples, data().splits.test, stores()),
              evaluate(trained(), data().samples, data().splits.test, stores()));
}

TEST(Checkpoint, CorruptAndMissing) {
    const auto dir = support::scratch_dir("checkpoint-bad") / "run";
    EXPECT_THROW(load_checkpoint(dir), Error);
    save_checkpoint(dir, trained());
    auto blob = read_file(dir / "params.bin");
    write_file_atomic(dir / "params.bin", blob.substr(0, blob.size() / 2));
    EXPECT_THROW(load_checkpoint(dir), Error);
    write_file_atomic(dir / "params.bin", blob);
    write_file_atomic(dir / "manifest.json", "{not json");
    EXPECT_THROW(load_checkpoint(dir), Error);
}

TEST(MultiSeed, ParallelMatchesSerial) {
    const std::vector<std::uint64_t> seeds = {0, 1, 2};
    const auto spec = make_spec(ModelKind::EmbedHead, 12);
    const auto serial = run_multi_seed(spec, data().samples, data().splits, stores(), quick_hyper(), seeds, 1);
    const auto parallel = run_multi_seed(spec, data().samples, data().splits, stores(), quick_hyper(), seeds, 3);
    EXPECT_EQ(to_json(serial), to_json(parallel));
    EXPECT_EQ(serial.per_seed.size(), 3u);
    EXPECT_EQ(serial.seeds, seeds);
}

TEST(MultiSeed, FailingSeedPropagates) {
    EmbeddingStore empty("synthetic-gaussians", Pooling::MeanPassthrough, 12);
    const FeatureStores s{&empty, nullptr, nullptr};
    const std::vector<std::uint64_t> seeds = {0, 1};
    EXPECT_THROW(run_multi_seed(make_spec(ModelKind::EmbedHead, 12), data().samples, data().splits, s, quick_hyper(),
                                seeds, 2),
                 Error);
}

TEST(Provenance, RecordsEveryRole) {
    EmbeddingStore ctx("ctx", Pooling::NormalizedSum, 4);
    EmbeddingStore emo("emo", Pooling::None, 7);
    const FeatureStores s{&data().store, &ctx, &emo};
    const auto p = provenance_of(s, make_spec(ModelKind::ConcatFusion, 12, 4));
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[1].model_id, "ctx");
    EXPECT_EQ(provenance_of(s, make_spec(ModelKind::EmbedHead, 12)).size(), 1u);
}
