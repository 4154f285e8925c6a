#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>

#include "corrpose/error.hpp"
#include "corrpose/nn/siren.hpp"

namespace corrpose {

/// Adam with linear learning-rate warmup over the first warmup_steps steps.
struct AdamState {
    std::int64_t step = 0;
    VecX m;
    VecX v;
    double lr_base = 3e-4;
    std::int64_t warmup_steps = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState create(Eigen::Index parameter_count, double lr, std::int64_t warmup) {
        AdamState s;
        s.m = VecX::Zero(parameter_count);
        s.v = VecX::Zero(parameter_count);
        s.lr_base = lr;
        s.warmup_steps = warmup;
        return s;
    }

    double effective_lr(std::int64_t at_step) const {
        if (warmup_steps <= 0) return lr_base;
        const double ramp = static_cast<double>(at_step) / static_cast<double>(warmup_steps);
        return lr_base * std::min(1.0, ramp);
    }
};

/// One Adam update in place. Throws NonFiniteGradient on NaN/inf gradients.
inline void adam_step(AdamState& state, VecX& params, const VecX& grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size()) {
        raise(ErrorCode::ShapeMismatch, "adam buffers do not match parameters");
    }
    if (!grads.allFinite()) raise(ErrorCode::NonFiniteGradient, "gradient has NaN or inf");
    const std::int64_t t = state.step + 1;
    const double lr = state.effective_lr(t);
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
    const double m_corr = 1.0 - std::pow(state.beta1, static_cast<double>(t));
    const double v_corr = 1.0 - std::pow(state.beta2, static_cast<double>(t));
    params.array() -=
        lr * (state.m.array() / m_corr) / ((state.v.array() / v_corr).sqrt() + state.eps);
    state.step = t;
}

}  // namespace corrpose
