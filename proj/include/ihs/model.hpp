// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ihs/autograd.hpp"
#include "ihs/embedding_store.hpp"

namespace ihs {

enum class ModelKind { EmbedHead, ConcatFusion, AdaptiveFusion, MoEFusion, SharedQueryFusion };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {
    ModelKind::EmbedHead, ModelKind::ConcatFusion, ModelKind::AdaptiveFusion, ModelKind::MoEFusion,
    ModelKind::SharedQueryFusion};

/// Architecture description.
///
/// `hidden` is the width of the first MLP layer for the head and for the
/// concatenating fusions (d_tweet for EmbedHead, d_tweet + d_context +
/// d_emotion for Concat/Adaptive/MoE). For SharedQueryFusion it is the
/// attention width; its MLP then sees 2 * hidden + d_emotion inputs.
struct ModelSpec {
    ModelKind kind = ModelKind::EmbedHead;
    std::size_t d_tweet = 0;
    std::size_t d_context = 0;
    std::size_t d_emotion = kEmotionClasses;
    std::size_t hidden = 0;
    std::size_t attention_heads = 8;
    double leaky_slope = 0.01;
    double dropout = 0.2;
    /// Adaptive fusion squash: 2*sigmoid(x) - 1 by default, plain sigmoid optional.
    Squash alpha_squash = Squash::ScaledSigmoid;
    /// SharedQueryFusion: one K/V projection serves both sources.
    bool share_projections = true;
    std::size_t gate_hidden = 64;

    void validate() const;
    bool uses_context() const { return kind != ModelKind::EmbedHead; }
    bool uses_emotion() const { return kind != ModelKind::EmbedHead; }
    /// Width of the vector entering the classification MLP.
    std::size_t mlp_input() const;

    bool operator==(const ModelSpec&) const = default;
};

/// Spec with `hidden` filled by the width rules above.
ModelSpec make_spec(ModelKind kind, std::size_t d_tweet, std::size_t d_context = 0,
                    std::size_t attention_heads = 8);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

struct FusionAlphas {
    double tweet = 0.0;
    double context = 0.0;
    double emotion = 0.0;
};

enum class Mode { Train, Eval };

/// Tape handles of one forward pass.
struct ForwardResult {
    Tape::Var logits;
    Tape::Var fused;
    std::optional<Tape::Var> alphas;  // 1 x 3 (adaptive) or B x 3 (mixture of experts)
};

class Model {
public:
    Model(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const { return spec_; }
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::size_t parameter_count() const;
    Parameter& parameter(std::string_view name);
    const Parameter& parameter(std::string_view name) const;

    void zero_grad();

    /// Records the forward pass on `tape` with gradients flowing into this
    /// model's parameters. Input shapes are checked before any arithmetic.
    /// Train mode draws dropout masks from `rng`, which must then be non-null;
    /// Eval mode disables dropout.
    ForwardResult forward(Tape& tape, std::span<const FeatureBundle> batch, Mode mode, Rng* rng = nullptr);

    /// Eval-mode logits, one row per input.
    Matrix logits(std::span<const FeatureBundle> batch) const;
    /// Pre-MLP fused representation, one row per input.
    Matrix fuse(std::span<const FeatureBundle> batch) const;
    std::optional<FusionAlphas> alphas(const FeatureBundle& features) const;

    /// SharedQueryFusion only: attention weights (heads x positions) of the
    /// shared query over one source sequence, and the block output.
    Matrix attention_weights(const Matrix& sequence, bool context_source = false) const;
    RowVector attention_output(const Matrix& sequence, bool context_source = false) const;

    /// Copies parameter values by name; shapes must match exactly.
    void load_values(std::span<const Parameter> values);

private:
    void check_inputs(std::span<const FeatureBundle> batch) const;
    Parameter& add(std::string name, std::vector<std::size_t> shape);
    // With `track` false parameters enter the tape as constants, which keeps
    // Eval-mode inference free of writes to the model.
    ForwardResult forward_impl(Tape& tape, std::span<const FeatureBundle> batch, Mode mode, Rng* rng,
                               bool track) const;
    Tape::Var use(Tape& tape, std::string_view name, bool track) const;
    Tape::Var dense(Tape& tape, Tape::Var x, std::string_view prefix, bool track) const;
    Tape::Var attend(Tape& tape, const Matrix& rows, const std::vector<Eigen::Index>& offsets, bool context,
                     Mode mode, Rng* rng, bool track) const;

    ModelSpec spec_;
    // Fixed at construction so Parameter addresses stay stable.
    std::vector<Parameter> params_;
};

Model build_model(const ModelSpec& spec, std::uint64_t seed);

/// Softmax of the Eval-mode logits: {NotHate, Hate}.
std::array<double, 2> predict_proba(const Model& model, const FeatureBundle& features);

}  // namespace ihs
