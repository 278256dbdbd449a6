// SPDX-License-Identifier: Apache-2.0
#include "ihs/optim.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "ihs/error.hpp"

namespace ihs {

void TrainHyper::validate() const {
    const auto bad = [](const std::string& what) { fail(ErrorKind::Config, "invalid hyperparameter: " + what); };
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) bad("weight_decay must be nonnegative");
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) bad("warmup_fraction must be in [0,1]");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0,1)");
    if (batch_size == 0) bad("batch_size must be positive");
    if (epochs == 0) bad("epochs must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) bad("betas must be in [0,1)");
    if (!(epsilon > 0.0)) bad("epsilon must be positive");
    if (class_weights && (!((*class_weights)[0] > 0.0) || !((*class_weights)[1] > 0.0))) {
        bad("class weights must be positive");
    }
}

std::string_view to_string(Profile profile) {
    return profile == Profile::FinetuneHead ? "finetune-head" : "linear-probe";
}

Profile parse_profile(std::string_view name) {
    if (name == "finetune-head") return Profile::FinetuneHead;
    if (name == "linear-probe") return Profile::LinearProbe;
    fail(ErrorKind::Config, "unknown profile '" + std::string(name) + "'");
}

TrainHyper finetune_head_profile() { return TrainHyper{}; }

TrainHyper linear_probe_profile() {
    TrainHyper h;
    h.learning_rate = 2e-3;
    h.batch_size = 512;
    h.epochs = 20;
    return h;
}

TrainHyper profile_hyper(Profile profile) {
    return profile == Profile::FinetuneHead ? finetune_head_profile() : linear_probe_profile();
}

double LinearSchedule::lr_at(std::size_t step) const {
    if (total_steps == 0) fail(ErrorKind::Contract, "schedule needs at least one step");
    if (step > total_steps) {
        fail(ErrorKind::Contract, "step " + std::to_string(step) + " beyond schedule end " +
                                      std::to_string(total_steps));
    }
    const double total = static_cast<double>(total_steps);
    const double warmup = warmup_fraction * total;
    const double s = static_cast<double>(step);
    if (warmup > 0.0 && s < warmup) {
        if (step == 0) return base_rate * std::min(1.0, 1.0 / warmup);
        return base_rate * s / warmup;
    }
    if (total <= warmup) return base_rate;
    return base_rate * (total - s) / (total - warmup);
}

void AdamW::step(std::span<Parameter* const> params, double lr_now) {
    for (const auto* p : params) {
        if (!p->grad.allFinite()) fail(ErrorKind::Numerical, "non-finite gradient in parameter '" + p->name + "'");
    }
    if (state_.first_moment.size() != params.size()) {
        state_.first_moment.clear();
        state_.second_moment.clear();
        for (const auto* p : params) {
            state_.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            state_.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
        state_.step = 0;
    }
    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double bias1 = 1.0 - std::pow(hyper_.beta1, t);
    const double bias2 = 1.0 - std::pow(hyper_.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = state_.first_moment[i];
        auto& v = state_.second_moment[i];
        m = hyper_.beta1 * m + (1.0 - hyper_.beta1) * p.grad;
        v = hyper_.beta2 * v + (1.0 - hyper_.beta2) * p.grad.cwiseAbs2();
        const auto m_hat = m.array() / bias1;
        const auto v_hat = v.array() / bias2;
        const Matrix update = m_hat / (v_hat.sqrt() + hyper_.epsilon);
        p.value = p.value - lr_now * hyper_.weight_decay * p.value - lr_now * update;
        if (!p.value.allFinite()) fail(ErrorKind::Numerical, "parameter '" + p.name + "' became non-finite");
    }
}

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view bytes, std::size_t& pos, int n) {
    if (bytes.size() - pos < static_cast<std::size_t>(n)) fail(ErrorKind::Corruption, "truncated parameter blob");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(n);
    return v;
}

}  // namespace

std::string encode_parameters(std::span<const Parameter* const> params) {
    std::string out;
    for (const auto* p : params) {
        if (p->name.size() > std::numeric_limits<std::uint16_t>::max()) {
            fail(ErrorKind::Validation, "parameter name too long");
        }
        put_le(out, p->name.size(), 2);
        out.append(p->name);
        put_le(out, p->shape.size(), 1);
        for (auto d : p->shape) put_le(out, d, 4);
        for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
            for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
                put_le(out, std::bit_cast<std::uint64_t>(p->value(r, c)), 8);
            }
        }
    }
    return out;
}

std::vector<Parameter> decode_parameters(std::string_view bytes) {
    std::vector<Parameter> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto name_len = static_cast<std::size_t>(get_le(bytes, pos, 2));
        if (bytes.size() - pos < name_len) fail(ErrorKind::Corruption, "truncated parameter name");
        std::string name(bytes.substr(pos, name_len));
        pos += name_len;
        const auto rank = static_cast<std::size_t>(get_le(bytes, pos, 1));
        if (rank < 1 || rank > 2) fail(ErrorKind::Corruption, "parameter '" + name + "' has unsupported rank");
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(get_le(bytes, pos, 4));
        Parameter p(std::move(name), std::move(shape));
        for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
                p.value(r, c) = std::bit_cast<double>(get_le(bytes, pos, 8));
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace ihs
