// SPDX-License-Identifier: Apache-2.0
#include "ihs/model.hpp"

#include <cmath>

#include "ihs/error.hpp"

namespace ihs {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::EmbedHead: return "embed_head";
        case ModelKind::ConcatFusion: return "concat_fusion";
        case ModelKind::AdaptiveFusion: return "adaptive_fusion";
        case ModelKind::MoEFusion: return "moe_fusion";
        case ModelKind::SharedQueryFusion: return "shared_query_fusion";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto k : kAllModelKinds) {
        if (to_string(k) == name) return k;
    }
    fail(ErrorKind::Config, "unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
    const auto bad = [](const std::string& what) { fail(ErrorKind::Config, "invalid model spec: " + what); };
    if (d_tweet == 0) bad("d_tweet must be positive");
    if (hidden == 0) bad("hidden must be positive");
    if (!std::isfinite(leaky_slope)) bad("leaky_slope must be finite");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0,1)");
    if (kind == ModelKind::EmbedHead) {
        if (hidden != d_tweet) bad("embed_head hidden must equal d_tweet");
        return;
    }
    if (d_context == 0) bad("fusion models need d_context");
    if (d_emotion != kEmotionClasses) bad("d_emotion must be 7");
    switch (kind) {
        case ModelKind::ConcatFusion:
        case ModelKind::AdaptiveFusion:
        case ModelKind::MoEFusion:
            if (hidden != d_tweet + d_context + d_emotion) bad("hidden must equal d_tweet + d_context + d_emotion");
            if (kind == ModelKind::MoEFusion && gate_hidden == 0) bad("gate_hidden must be positive");
            break;
        case ModelKind::SharedQueryFusion:
            if (attention_heads == 0 || hidden % attention_heads != 0) bad("hidden must be divisible by attention_heads");
            if (share_projections && d_tweet != d_context) bad("shared projections need d_tweet == d_context");
            break;
        case ModelKind::EmbedHead: break;
    }
}

std::size_t ModelSpec::mlp_input() const {
    switch (kind) {
        case ModelKind::EmbedHead: return d_tweet;
        case ModelKind::SharedQueryFusion: return 2 * hidden + d_emotion;
        default: return d_tweet + d_context + d_emotion;
    }
}

ModelSpec make_spec(ModelKind kind, std::size_t d_tweet, std::size_t d_context, std::size_t attention_heads) {
    ModelSpec s;
    s.kind = kind;
    s.d_tweet = d_tweet;
    s.d_context = kind == ModelKind::EmbedHead ? 0 : d_context;
    s.attention_heads = attention_heads;
    switch (kind) {
        case ModelKind::EmbedHead: s.hidden = d_tweet; break;
        case ModelKind::SharedQueryFusion: s.hidden = d_tweet; break;
        default: s.hidden = d_tweet + d_context + s.d_emotion; break;
    }
    return s;
}

json to_json(const ModelSpec& s) {
    return {{"kind", to_string(s.kind)},
            {"d_tweet", s.d_tweet},
            {"d_context", s.d_context},
            {"d_emotion", s.d_emotion},
            {"hidden", s.hidden},
            {"attention_heads", s.attention_heads},
            {"leaky_slope", s.leaky_slope},
            {"dropout", s.dropout},
            {"alpha_squash", s.alpha_squash == Squash::ScaledSigmoid ? "scaled_sigmoid" : "sigmoid"},
            {"share_projections", s.share_projections},
            {"gate_hidden", s.gate_hidden}};
}

ModelSpec spec_from_json(const json& j) {
    try {
        const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
        ModelSpec s = make_spec(kind, j.at("d_tweet").get<std::size_t>(), j.value("d_context", std::size_t{0}),
                                j.value("attention_heads", std::size_t{8}));
        s.d_emotion = j.value("d_emotion", s.d_emotion);
        s.hidden = j.value("hidden", s.hidden);
        s.leaky_slope = j.value("leaky_slope", s.leaky_slope);
        s.dropout = j.value("dropout", s.dropout);
        const auto squash = j.value("alpha_squash", std::string("scaled_sigmoid"));
        if (squash == "scaled_sigmoid") {
            s.alpha_squash = Squash::ScaledSigmoid;
        } else if (squash == "sigmoid") {
            s.alpha_squash = Squash::Sigmoid;
        } else {
            fail(ErrorKind::Config, "unknown alpha_squash '" + squash + "'");
        }
        s.share_projections = j.value("share_projections", s.share_projections);
        s.gate_hidden = j.value("gate_hidden", s.gate_hidden);
        return s;
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("model spec: ") + e.what());
    }
}

Parameter& Model::add(std::string name, std::vector<std::size_t> shape) {
    params_.emplace_back(std::move(name), std::move(shape));
    return params_.back();
}

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    const auto& s = spec_;
    params_.reserve(24);

    const auto dense = [this](const std::string& prefix, std::size_t in, std::size_t out) {
        add(prefix + ".weight", {in, out});
        add(prefix + ".bias", {out});
    };
    switch (s.kind) {
        case ModelKind::AdaptiveFusion: add("fusion.alpha", {3}); break;
        case ModelKind::MoEFusion:
            dense("gate.hidden", s.d_tweet, s.gate_hidden);
            dense("gate.out", s.gate_hidden, 3);
            break;
        case ModelKind::SharedQueryFusion:
            add("attn.query", {s.hidden});
            // No key bias: it shifts every score of a head equally, which the
            // softmax cancels.
            add("attn.key.weight", {s.d_tweet, s.hidden});
            dense("attn.value", s.d_tweet, s.hidden);
            dense("attn.out", s.hidden, s.hidden);
            if (!s.share_projections) {
                add("attn_context.key.weight", {s.d_context, s.hidden});
                dense("attn_context.value", s.d_context, s.hidden);
                dense("attn_context.out", s.hidden, s.hidden);
            }
            break;
        default: break;
    }
    // The first MLP layer keeps the width of its input.
    const std::size_t width = s.mlp_input();
    dense("mlp.hidden", width, width);
    dense("mlp.out", width, 2);

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for dense layers and the query;
    // raw fusion alphas start at 1 so the scaled features are not all zero.
    Rng rng(seed);
    for (auto& p : params_) {
        if (p.name == "fusion.alpha") {
            p.value.setConstant(1.0);
            continue;
        }
        std::size_t fan_in = p.shape.front();
        if (p.name.ends_with(".bias")) {
            const auto& w = params_[static_cast<std::size_t>(&p - params_.data()) - 1];
            fan_in = w.shape.front();
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.name == "attn.query" ? s.hidden : fan_in));
        for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.value.cols(); ++c) p.value(r, c) = uniform_real(rng, -bound, bound);
        }
    }
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> Model::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

const Parameter& Model::parameter(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p;
    }
    fail(ErrorKind::Contract, "model has no parameter '" + std::string(name) + "'");
}

Parameter& Model::parameter(std::string_view name) {
    return const_cast<Parameter&>(std::as_const(*this).parameter(name));
}

void Model::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Model::load_values(std::span<const Parameter> values) {
    if (values.size() != params_.size()) {
        fail(ErrorKind::Corruption, "checkpoint has " + std::to_string(values.size()) + " tensors, model expects " +
                                        std::to_string(params_.size()));
    }
    for (const auto& v : values) {
        auto& p = parameter(v.name);
        if (p.shape != v.shape || p.value.rows() != v.value.rows() || p.value.cols() != v.value.cols()) fail(ErrorKind::Corruption, "shape mismatch for parameter '" + v.name + "'");
        if (!v.value.allFinite()) fail(ErrorKind::Corruption, "non-finite values in parameter '" + v.name + "'");
        p.value = v.value;
    }
}

void Model::check_inputs(std::span<const FeatureBundle> batch) const {
    const auto& s = spec_;
    if (batch.empty()) fail(ErrorKind::Shape, "empty batch");
    const bool sequences = s.kind == ModelKind::SharedQueryFusion;
    const auto check_seq = [&](const Matrix& m, std::size_t width, const char* role, std::size_t i) {
        if (m.cols() != static_cast<Eigen::Index>(width) || m.rows() < 1 || (!sequences && m.rows() != 1)) {
            fail(ErrorKind::Shape, std::string(role) + " input " + std::to_string(i) + " is " +
                                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                                       (sequences ? "k" : "1") + "x" + std::to_string(width));
        }
        if (!m.allFinite()) fail(ErrorKind::Numerical, std::string(role) + " input " + std::to_string(i) + " is not finite");
    };
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& b = batch[i];
        check_seq(b.tweet, s.d_tweet, "tweet", i);
        if (s.uses_context()) {
            if (!b.context) fail(ErrorKind::Contract, "missing context features for input " + std::to_string(i));
            check_seq(*b.context, s.d_context, "context", i);
        }
        if (s.uses_emotion()) {
            if (!b.emotion) fail(ErrorKind::Contract, "missing emotion features for input " + std::to_string(i));
            validate_emotion(*b.emotion);
        }
    }
}

Tape::Var Model::use(Tape& tape, std::string_view name, bool track) const {
    const auto& p = parameter(name);
    return track ? tape.param(const_cast<Parameter&>(p)) : tape.constant(p.value);
}

Tape::Var Model::dense(Tape& tape, Tape::Var x, std::string_view prefix, bool track) const {
    const std::string base(prefix);
    const auto w = use(tape, base + ".weight", track);
    const auto b = use(tape, base + ".bias", track);
    return tape.add_row(tape.matmul(x, w), b);
}

Tape::Var Model::attend(Tape& tape, const Matrix& rows, const std::vector<Eigen::Index>& offsets, bool context,
                        Mode mode, Rng* rng, bool track) const {
    const std::string block = context && !spec_.share_projections ? "attn_context" : "attn";
    const auto x = tape.constant(rows);
    const auto query = use(tape, "attn.query", track);
    const auto keys = tape.matmul(x, use(tape, block + ".key.weight", track));
    const auto values = dense(tape, x, block + ".value", track);
    auto out = tape.query_attention(query, keys, values, offsets, static_cast<Eigen::Index>(spec_.attention_heads));
    out = dense(tape, out, block + ".out", track);
    if (mode == Mode::Train) out = tape.dropout(out, spec_.dropout, *rng);
    return out;
}

ForwardResult Model::forward(Tape& tape, std::span<const FeatureBundle> batch, Mode mode, Rng* rng) {
    return forward_impl(tape, batch, mode, rng, true);
}

ForwardResult Model::forward_impl(Tape& tape, std::span<const FeatureBundle> batch, Mode mode, Rng* rng,
                                  bool track) const {
    check_inputs(batch);
    if (mode == Mode::Train && !rng) fail(ErrorKind::Contract, "Train mode needs a random generator");
    const auto& s = spec_;
    const auto n = static_cast<Eigen::Index>(batch.size());

    const auto stack_rows = [&](auto pick, std::size_t width) {
        Matrix m(n, static_cast<Eigen::Index>(width));
        for (Eigen::Index i = 0; i < n; ++i) m.row(i) = pick(batch[static_cast<std::size_t>(i)]).row(0);
        return m;
    };
    const auto tweet_of = [](const FeatureBundle& b) -> const Matrix& { return b.tweet; };
    const auto context_of = [](const FeatureBundle& b) -> const Matrix& { return *b.context; };
    const auto maybe_dropout = [&](Tape::Var v) { return mode == Mode::Train ? tape.dropout(v, s.dropout, *rng) : v; };

    ForwardResult result{};
    Tape::Var fused{};
    switch (s.kind) {
        case ModelKind::EmbedHead: fused = tape.constant(stack_rows(tweet_of, s.d_tweet)); break;
        case ModelKind::ConcatFusion:
        case ModelKind::AdaptiveFusion:
        case ModelKind::MoEFusion: {
            Matrix emotion(n, static_cast<Eigen::Index>(s.d_emotion));
            for (Eigen::Index i = 0; i < n; ++i) emotion.row(i) = batch[static_cast<std::size_t>(i)].emotion->transpose();
            std::array<Tape::Var, 3> parts = {tape.constant(stack_rows(tweet_of, s.d_tweet)),
                                              tape.constant(stack_rows(context_of, s.d_context)),
                                              tape.constant(std::move(emotion))};
            if (s.kind == ModelKind::AdaptiveFusion) {
                const auto alphas = tape.squash(use(tape, "fusion.alpha", track), s.alpha_squash);
                for (Eigen::Index k = 0; k < 3; ++k) parts[k] = tape.scale_rows(parts[k], tape.column(alphas, k));
                result.alphas = alphas;
            } else if (s.kind == ModelKind::MoEFusion) {
                auto g = tape.leaky_relu(dense(tape, parts[0], "gate.hidden", track), s.leaky_slope);
                g = maybe_dropout(g);
                const auto alphas = tape.softmax_rows(dense(tape, g, "gate.out", track));
                for (Eigen::Index k = 0; k < 3; ++k) parts[k] = tape.scale_rows(parts[k], tape.column(alphas, k));
                result.alphas = alphas;
            }
            fused = tape.concat_cols(parts);
            break;
        }
        case ModelKind::SharedQueryFusion: {
            const auto sequences = [&](auto pick, std::size_t width, std::vector<Eigen::Index>& offsets) {
                Eigen::Index total = 0;
                offsets.assign(1, 0);
                for (const auto& b : batch) {
                    total += pick(b).rows();
                    offsets.push_back(total);
                }
                Matrix m(total, static_cast<Eigen::Index>(width));
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    m.middleRows(offsets[i], offsets[i + 1] - offsets[i]) = pick(batch[i]);
                }
                return m;
            };
            std::vector<Eigen::Index> t_off, c_off;
            const Matrix t_rows = sequences(tweet_of, s.d_tweet, t_off);
            const Matrix c_rows = sequences(context_of, s.d_context, c_off);
            Matrix emotion(n, static_cast<Eigen::Index>(s.d_emotion));
            for (Eigen::Index i = 0; i < n; ++i) emotion.row(i) = batch[static_cast<std::size_t>(i)].emotion->transpose();
            const std::array<Tape::Var, 3> parts = {attend(tape, t_rows, t_off, false, mode, rng, track),
                                                    attend(tape, c_rows, c_off, true, mode, rng, track),
                                                    tape.constant(std::move(emotion))};
            fused = tape.concat_cols(parts);
            break;
        }
    }
    result.fused = fused;
    auto h = tape.leaky_relu(dense(tape, fused, "mlp.hidden", track), s.leaky_slope);
    h = maybe_dropout(h);
    result.logits = dense(tape, h, "mlp.out", track);
    return result;
}

Matrix Model::logits(std::span<const FeatureBundle> batch) const {
    Tape tape;
    return tape.value(forward_impl(tape, batch, Mode::Eval, nullptr, false).logits);
}

Matrix Model::fuse(std::span<const FeatureBundle> batch) const {
    Tape tape;
    return tape.value(forward_impl(tape, batch, Mode::Eval, nullptr, false).fused);
}

std::optional<FusionAlphas> Model::alphas(const FeatureBundle& features) const {
    Tape tape;
    const auto r = forward_impl(tape, std::span(&features, 1), Mode::Eval, nullptr, false);
    if (!r.alphas) return std::nullopt;
    const auto& a = tape.value(*r.alphas);
    return FusionAlphas{a(0, 0), a(0, 1), a(0, 2)};
}

Matrix Model::attention_weights(const Matrix& sequence, bool context_source) const {
    if (spec_.kind != ModelKind::SharedQueryFusion) fail(ErrorKind::Contract, "model has no attention block");
    const std::string block = context_source && !spec_.share_projections ? "attn_context" : "attn";
    const auto& wk = parameter(block + ".key.weight").value;
    if (sequence.cols() != wk.rows()) fail(ErrorKind::Shape, "sequence width does not match the key projection");
    const Matrix keys = sequence * wk;
    return ihs::attention_weights(parameter("attn.query").value.row(0), keys, {0, sequence.rows()},
                                  static_cast<Eigen::Index>(spec_.attention_heads));
}

RowVector Model::attention_output(const Matrix& sequence, bool context_source) const {
    if (spec_.kind != ModelKind::SharedQueryFusion) fail(ErrorKind::Contract, "model has no attention block");
    Tape tape;
    const auto out = attend(tape, sequence, {0, sequence.rows()}, context_source, Mode::Eval, nullptr, false);
    return tape.value(out).row(0);
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) { return Model(spec, seed); }

std::array<double, 2> predict_proba(const Model& model, const FeatureBundle& features) {
    const Matrix p = softmax_rows(model.logits(std::span(&features, 1)));
    return {p(0, 0), p(0, 1)};
}

}  // namespace ihs
