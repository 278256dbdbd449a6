// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihs/autograd.hpp"

namespace ihs {

struct TrainHyper {
    double learning_rate = 2e-6;
    double weight_decay = 0.5;
    double warmup_fraction = 0.2;
    double dropout = 0.2;
    std::size_t batch_size = 16;
    std::size_t epochs = 4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Optional loss weights for {NotHate, Hate}; unweighted when absent.
    std::optional<std::array<double, 2>> class_weights;

    /// Throws a Config error when any field is out of range.
    void validate() const;
    bool operator==(const TrainHyper&) const = default;
};

enum class Profile { FinetuneHead, LinearProbe };

std::string_view to_string(Profile profile);
Profile parse_profile(std::string_view name);

/// Head/fusion training: lr 2e-6, decay 0.5, 20% warmup, dropout 0.2,
/// batch 16, 4 epochs.
TrainHyper finetune_head_profile();
/// Linear probing: the head profile with lr 2e-3, batch 512 and 20 epochs.
TrainHyper linear_probe_profile();
TrainHyper profile_hyper(Profile profile);

/// Linear warmup to base_rate over warmup_fraction * total_steps, then
/// linear decay to zero at total_steps.
struct LinearSchedule {
    double base_rate = 0.0;
    std::size_t total_steps = 0;
    double warmup_fraction = 0.0;

    /// Step 0 returns the first ramp increment, base / warmup_steps, rather
    /// than zero. Valid for 0 <= step <= total_steps.
    double lr_at(std::size_t step) const;
};

struct OptimizerState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::uint64_t step = 0;
};

/// AdamW with decoupled weight decay:
///   p <- p - lr * decay * p - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
public:
    explicit AdamW(const TrainHyper& hyper) : hyper_(hyper) {}

    /// One update from the gradients stored in each Parameter. Throws a
    /// Numerical error naming the parameter before touching anything when a
    /// gradient is not finite.
    void step(std::span<Parameter* const> params, double lr_now);

    const OptimizerState& state() const { return state_; }

private:
    TrainHyper hyper_;
    OptimizerState state_;
};

// Parameter blob: per tensor, u16 name length | name | u8 rank |
// rank x u32 shape | row-major f64 values, all little-endian.
std::string encode_parameters(std::span<const Parameter* const> params);
std::vector<Parameter> decode_parameters(std::string_view bytes);

}  // namespace ihs
