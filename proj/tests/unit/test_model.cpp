// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ihs/error.hpp"
#include "ihs/grad_check.hpp"
#include "ihs/model.hpp"
#include "support.hpp"

namespace support = ihs::testing;

using namespace ihs;

TEST(Spec, WidthsAndCounts) {
    const auto head = make_spec(ModelKind::EmbedHead, 1024);
    EXPECT_EQ(Model(head, 0).parameter_count(), 1051650u);
    const auto concat = make_spec(ModelKind::ConcatFusion, 1024, 512);
    EXPECT_EQ(concat.mlp_input(), 1543u);
    const auto adaptive = make_spec(ModelKind::AdaptiveFusion, 1024, 512);
    EXPECT_EQ(Model(adaptive, 0).parameter_count(), Model(concat, 0).parameter_count() + 3);
    const auto shared = make_spec(ModelKind::SharedQueryFusion, 32, 32, 8);
    EXPECT_EQ(shared.mlp_input(), 2 * 32u + 7u);
}

TEST(Spec, JsonRoundtripAndValidation) {
    for (const auto kind : kAllModelKinds) {
        const auto s = make_spec(kind, 16, 8, 4);
        EXPECT_EQ(spec_from_json(to_json(s)), s);
        EXPECT_EQ(parse_model_kind(to_string(kind)), kind);
    }
    auto bad = make_spec(ModelKind::SharedQueryFusion, 16, 16, 3);
    EXPECT_THROW(bad.validate(), Error);
    EXPECT_THROW(parse_model_kind("transformer"), Error);
}

TEST(Model, SameSeedSameParameters) {
    const auto spec = make_spec(ModelKind::MoEFusion, 8, 8);
    const Model a(spec, 5), b(spec, 5), c(spec, 6);
    EXPECT_EQ(a.parameter("mlp.hidden.weight").value, b.parameter("mlp.hidden.weight").value);
    EXPECT_NE(a.parameter("mlp.hidden.weight").value, c.parameter("mlp.hidden.weight").value);
}

TEST(Model, ShapeErrorsBeforeArithmetic) {
    const auto spec = make_spec(ModelKind::ConcatFusion, 8, 8);
    const Model m(spec, 0);
    Rng rng(1);
    auto batch = support::random_batch(rng, spec, 2);
    batch[1].tweet = Matrix::Zero(1, 7);
    EXPECT_THROW(m.logits(batch), Error);
    batch = support::random_batch(rng, spec, 2);
    batch[0].context.reset();
    EXPECT_THROW(m.logits(batch), Error);
    batch = support::random_batch(rng, spec, 2);
    batch[0].tweet = Matrix::Zero(3, 8);
    EXPECT_THROW(m.logits(batch), Error);
}

TEST(Model, ConcatFuseIsConcatenation) {
    const auto spec = make_spec(ModelKind::ConcatFusion, 4, 3);
    const Model m(spec, 0);
    Rng rng(2);
    const auto batch = support::random_batch(rng, spec, 1);
    const auto f = m.fuse(batch);
    ASSERT_EQ(f.cols(), 14);
    EXPECT_TRUE(f.leftCols(4).isApprox(batch[0].tweet));
    EXPECT_TRUE(f.middleCols(4, 3).isApprox(*batch[0].context));
    EXPECT_TRUE(f.rightCols(7).transpose().isApprox(*batch[0].emotion));
}

TEST(Model, AdaptiveZeroAlphaGivesZeroFeatures) {
    // With the scaled sigmoid a raw alpha of 0 squashes to 0.
    auto m = Model(make_spec(ModelKind::AdaptiveFusion, 4, 3), 0);
    m.parameter("fusion.alpha").value.setZero();
    Rng rng(3);
    const auto batch = support::random_batch(rng, m.spec(), 2);
    EXPECT_EQ(m.fuse(batch).cwiseAbs().maxCoeff(), 0.0);
    const auto a = m.alphas(batch[0]);
    ASSERT_TRUE(a.has_value());
    EXPECT_EQ(a->tweet, 0.0);
}

TEST(Model, MoEEqualGateGivesThirds) {
    auto m = Model(make_spec(ModelKind::MoEFusion, 4, 3), 0);
    m.parameter("gate.out.weight").value.setZero();
    m.parameter("gate.out.bias").value.setZero();
    Rng rng(4);
    const auto batch = support::random_batch(rng, m.spec(), 1);
    const auto a = m.alphas(batch[0]);
    ASSERT_TRUE(a.has_value());
    EXPECT_NEAR(a->tweet, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(a->emotion, 1.0 / 3.0, 1e-15);
}

TEST(Model, SharedQueryAttentionProperties) {
    const Model m(make_spec(ModelKind::SharedQueryFusion, 8, 8, 2), 0);
    const Matrix same = Matrix::Ones(5, 8);
    const auto w = m.attention_weights(same);
    ASSERT_EQ(w.rows(), 2);
    ASSERT_EQ(w.cols(), 5);
    for (Eigen::Index i = 0; i < w.size(); ++i) EXPECT_NEAR(w.data()[i], 0.2, 1e-15);
    Rng rng(5);
    const auto seq = support::random_matrix(rng, 4, 8);
    for (Eigen::Index h = 0; h < 2; ++h) EXPECT_NEAR(m.attention_weights(seq).row(h).sum(), 1.0, 1e-12);
    // Permuting positions permutes weights and leaves the output unchanged.
    const Matrix rev = seq.colwise().reverse();
    EXPECT_TRUE(m.attention_output(seq).isApprox(m.attention_output(rev), 1e-12));
}

TEST(Model, EvalIsDeterministicAndProbabilitiesSumToOne) {
    for (const auto kind : kAllModelKinds) {
        const auto spec = make_spec(kind, 8, 8, 2);
        const Model m(spec, 1);
        Rng rng(6);
        const auto batch = support::random_batch(rng, spec, 3, 2);
        EXPECT_EQ(m.logits(batch), m.logits(batch));
        const auto p = predict_proba(m, batch[0]);
        EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
    }
}

TEST(Model, TrainModeNeedsRng) {
    auto m = Model(make_spec(ModelKind::EmbedHead, 4), 0);
    Rng rng(7);
    const auto batch = support::random_batch(rng, m.spec(), 2);
    Tape tape;
    EXPECT_THROW(m.forward(tape, batch, Mode::Train, nullptr), Error);
}

TEST(Model, LoadValuesChecksShapes) {
    auto m = Model(make_spec(ModelKind::EmbedHead, 4), 0);
    const auto other = Model(make_spec(ModelKind::EmbedHead, 4), 9);
    std::vector<Parameter> values;
    for (const auto* p : other.parameters()) values.push_back(*p);
    m.load_values(values);
    EXPECT_EQ(m.parameter("mlp.out.weight").value, other.parameter("mlp.out.weight").value);
    values[0].value = Matrix::Zero(3, 3);
    EXPECT_THROW(m.load_values(values), Error);
}

class GradientsPerKind : public ::testing::TestWithParam<ModelKind> {};

TEST_P(GradientsPerKind, MatchCentralDifferences) {
    auto spec = make_spec(GetParam(), 6, 5, 2);
    if (spec.kind == ModelKind::SharedQueryFusion) spec.share_projections = false;
    Model model(spec, 0);
    Rng rng(8);
    const auto batch = support::random_batch(rng, spec, 3, 3);
    const std::vector<int> labels = {0, 1, 1};
    const auto params = model.parameters();
    const auto loss = [&](bool with_grads) {
        Tape tape;
        const auto out = model.forward(tape, batch, Mode::Eval);
        const auto l = tape.softmax_cross_entropy(out.logits, labels);
        if (with_grads) tape.backward(l);
        return tape.value(l)(0, 0);
    };
    // Loose eps keeps roundoff below the truncation error at these widths.
    const auto r = grad_check(params, loss, 1e-4);
    EXPECT_LT(r.max_relative_error, 1e-5) << r.worst_parameter << "[" << r.worst_index << "]";
}

INSTANTIATE_TEST_SUITE_P(AllKinds, GradientsPerKind, ::testing::ValuesIn(kAllModelKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Gradients, SharedProjectionsMatchCentralDifferences) {
    const auto spec = make_spec(ModelKind::SharedQueryFusion, 6, 6, 2);
    ASSERT_TRUE(spec.share_projections);
    Model model(spec, 0);
    Rng rng(9);
    const auto batch = support::random_batch(rng, spec, 3, 3);
    const std::vector<int> labels = {1, 0, 1};
    const auto params = model.parameters();
    const auto loss = [&](bool with_grads) {
        Tape tape;
        const auto out = model.forward(tape, batch, Mode::Eval);
        const auto l = tape.softmax_cross_entropy(out.logits, labels);
        if (with_grads) tape.backward(l);
        return tape.value(l)(0, 0);
    };
    const auto r = grad_check(params, loss, 1e-4);
    EXPECT_LT(r.max_relative_error, 1e-5) << r.worst_parameter << "[" << r.worst_index << "]";
}

TEST(Model, IdenticalKeysAttendToTheMeanValue) {
    // A zero key projection makes every score equal within a head.
    auto m = Model(make_spec(ModelKind::SharedQueryFusion, 8, 8, 2), 3);
    m.parameter("attn.key.weight").value.setZero();
    Rng rng(10);
    const auto seq = support::random_matrix(rng, 5, 8);
    const Matrix mean = seq.colwise().mean();
    EXPECT_TRUE(m.attention_output(seq).isApprox(m.attention_output(mean), 1e-12));
}

TEST(Model, AlphaRanges) {
    Rng rng(11);
    auto adaptive = Model(make_spec(ModelKind::AdaptiveFusion, 4, 3), 0);
    // Beyond |x| of about 37 the squash rounds to exactly +-1 in double precision.
    adaptive.parameter("fusion.alpha").value << 15.0, -15.0, 0.3;
    const Model moe(make_spec(ModelKind::MoEFusion, 4, 3), 0);
    for (int i = 0; i < 20; ++i) {
        const auto b = support::random_batch(rng, moe.spec(), 1);
        const auto a = *moe.alphas(b[0]);
        EXPECT_NEAR(a.tweet + a.context + a.emotion, 1.0, 1e-12);
        const auto s = *adaptive.alphas(b[0]);
        for (const double v : {s.tweet, s.context, s.emotion}) {
            EXPECT_GT(v, -1.0);
            EXPECT_LT(v, 1.0);
        }
    }
}
