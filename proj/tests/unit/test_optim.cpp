// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "ihs/error.hpp"
#include "ihs/optim.hpp"

using namespace ihs;

namespace {

Parameter scalar(double value, double grad) {
    Parameter p("p", {1});
    p.value(0, 0) = value;
    p.grad(0, 0) = grad;
    return p;
}

}  // namespace

TEST(AdamW, FirstStepValues) {
    for (const double decay : {0.0, 0.5}) {
        TrainHyper h;
        h.weight_decay = decay;
        auto p = scalar(1.0, 1.0);
        Parameter* ps[] = {&p};
        AdamW opt(h);
        opt.step(ps, 0.1);
        EXPECT_NEAR(p.value(0, 0), 1.0 - 0.1 * decay - 0.1 / (1.0 + 1e-8), 1e-12);
        EXPECT_EQ(opt.state().step, 1u);
    }
}

TEST(AdamW, DecayIsDecoupledFromGradient) {
    TrainHyper h;
    h.weight_decay = 0.5;
    auto p = scalar(2.0, 0.0);
    Parameter* ps[] = {&p};
    AdamW(h).step(ps, 0.1);
    EXPECT_NEAR(p.value(0, 0), 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
}

TEST(AdamW, BiasCorrectionSecondStep) {
    TrainHyper h;
    h.weight_decay = 0.0;
    auto p = scalar(0.0, 1.0);
    Parameter* ps[] = {&p};
    AdamW opt(h);
    opt.step(ps, 0.01);
    p.grad(0, 0) = 3.0;
    opt.step(ps, 0.01);
    const double m = (0.9 * 0.1 * 1.0 + 0.1 * 3.0) / (1.0 - 0.81);
    const double v = (0.999 * 0.001 * 1.0 + 0.001 * 9.0) / (1.0 - 0.999 * 0.999);
    EXPECT_NEAR(p.value(0, 0), -0.01 / (1.0 + 1e-8) - 0.01 * m / (std::sqrt(v) + 1e-8), 1e-12);
}

TEST(AdamW, NonFiniteGradientLeavesParametersUntouched) {
    TrainHyper h;
    auto a = scalar(1.0, 1.0);
    auto b = scalar(1.0, std::nan(""));
    b.name = "broken";
    Parameter* ps[] = {&a, &b};
    try {
        AdamW(h).step(ps, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numerical);
        EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
    }
    EXPECT_EQ(a.value(0, 0), 1.0);
}

TEST(Schedule, WarmupThenDecay) {
    const LinearSchedule s{2e-6, 1000, 0.2};
    EXPECT_NEAR(s.lr_at(0), 1e-8, 1e-20);
    EXPECT_NEAR(s.lr_at(100), 1e-6, 1e-18);
    EXPECT_NEAR(s.lr_at(200), 2e-6, 1e-18);
    EXPECT_NEAR(s.lr_at(600), 1e-6, 1e-18);
    EXPECT_EQ(s.lr_at(1000), 0.0);
    EXPECT_THROW(s.lr_at(1001), Error);
    const LinearSchedule flat{1.0, 10, 0.0};
    EXPECT_EQ(flat.lr_at(0), 1.0);
    EXPECT_NEAR(flat.lr_at(5), 0.5, 1e-15);
}

TEST(Schedule, Monotone) {
    const LinearSchedule s{1e-3, 137, 0.2};
    for (std::size_t t = 1; t < 137; ++t) {
        if (static_cast<double>(t) < 0.2 * 137) {
            EXPECT_GE(s.lr_at(t), s.lr_at(t - 1));
        } else {
            EXPECT_LE(s.lr_at(t + 1), s.lr_at(t));
        }
    }
}

TEST(Profiles, Values) {
    const auto f = finetune_head_profile();
    EXPECT_EQ(f.learning_rate, 2e-6);
    EXPECT_EQ(f.batch_size, 16u);
    EXPECT_EQ(f.epochs, 4u);
    EXPECT_EQ(f.weight_decay, 0.5);
    const auto l = linear_probe_profile();
    EXPECT_EQ(l.learning_rate, 2e-3);
    EXPECT_EQ(l.batch_size, 512u);
    EXPECT_EQ(l.epochs, 20u);
    EXPECT_EQ(parse_profile(to_string(Profile::LinearProbe)), Profile::LinearProbe);
}

TEST(Hyper, Validation) {
    TrainHyper h;
    EXPECT_NO_THROW(h.validate());
    h.dropout = 1.0;
    EXPECT_THROW(h.validate(), Error);
    h = {};
    h.batch_size = 0;
    EXPECT_THROW(h.validate(), Error);
    h = {};
    h.learning_rate = -1.0;
    EXPECT_THROW(h.validate(), Error);
}

TEST(ParameterBlob, RoundtripAndCorruption) {
    Parameter a("layer.weight", {2, 3});
    a.value << 1, 2, 3, 4, 5, 6;
    Parameter b("layer.bias", {3});
    b.value << -1, 0.5, 1e-300;
    const Parameter* ps[] = {&a, &b};
    const auto blob = encode_parameters(ps);
    const auto back = decode_parameters(blob);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].name, "layer.weight");
    EXPECT_EQ(back[0].value, a.value);
    EXPECT_EQ(back[1].shape, b.shape);
    EXPECT_EQ(back[1].value, b.value);
    EXPECT_THROW(decode_parameters(blob.substr(0, blob.size() - 3)), Error);
}

TEST(AdamW, ZeroGradientWithoutDecayIsFixedPoint) {
    TrainHyper h;
    h.weight_decay = 0.0;
    auto p = scalar(0.75, 0.0);
    Parameter* ps[] = {&p};
    AdamW opt(h);
    for (int i = 0; i < 5; ++i) opt.step(ps, 0.1);
    EXPECT_EQ(p.value(0, 0), 0.75);
}
