#pragma once

#include <Eigen/Dense>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/nn/siren.hpp"

namespace corrpose {

struct InfoNceResult {
    double loss = 0.0;
    MatX grad_queries;        // N x E
    MatX grad_positive_keys;  // N x E
    MatX grad_negative_keys;  // K x E
};

/// InfoNCE over one crop: for each query u the positive is its own key and the
/// denominator runs over the shared negatives plus that positive. Log-sum-exp
/// stabilized; exact gradients.
inline InfoNceResult infonce_loss(const MatX& queries, const MatX& positive_keys,
                                  const MatX& negative_keys) {
    const Eigen::Index n = queries.rows();
    const Eigen::Index k = negative_keys.rows();
    const Eigen::Index e = queries.cols();
    if (n < 1 || k < 1) raise(ErrorCode::ShapeMismatch, "need at least one pair and one negative");
    if (positive_keys.rows() != n || positive_keys.cols() != e || negative_keys.cols() != e) {
        raise(ErrorCode::ShapeMismatch, "embedding dims disagree");
    }
    if (!queries.allFinite() || !positive_keys.allFinite() || !negative_keys.allFinite()) {
        raise(ErrorCode::NonFinite, "loss inputs contain NaN or inf");
    }

    const VecX pos_logits = (queries.array() * positive_keys.array()).rowwise().sum();
    MatX neg_logits = queries * negative_keys.transpose();  // N x K

    const double inv_n = 1.0 / static_cast<double>(n);
    InfoNceResult out;
    out.grad_queries.resize(n, e);
    out.grad_positive_keys.resize(n, e);
    out.grad_negative_keys = MatX::Zero(k, e);

    MatX p_neg(n, k);
    VecX p_pos(n);
    double loss = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
        const double m = std::max(pos_logits[u], neg_logits.row(u).maxCoeff());
        const double pos_exp = std::exp(pos_logits[u] - m);
        const Eigen::ArrayXd neg_exp = (neg_logits.row(u).transpose().array() - m).exp();
        const double total = pos_exp + neg_exp.sum();
        loss += std::log(total) + m - pos_logits[u];
        p_pos[u] = pos_exp / total;
        p_neg.row(u) = (neg_exp / total).transpose();
    }
    out.loss = loss * inv_n;

    const VecX pos_coeff = (p_pos.array() - 1.0) * inv_n;
    out.grad_queries = pos_coeff.asDiagonal() * positive_keys + inv_n * (p_neg * negative_keys);
    out.grad_positive_keys = pos_coeff.asDiagonal() * queries;
    out.grad_negative_keys = inv_n * (p_neg.transpose() * queries);
    return out;
}

struct BceResult {
    double loss = 0.0;
    VecX grad_logits;
};

/// Mean binary cross-entropy on logits, the numerically stable softplus form.
inline BceResult mask_bce_loss(const VecX& logits, const std::vector<unsigned char>& labels) {
    const Eigen::Index p = logits.size();
    if (p < 1 || static_cast<std::size_t>(p) != labels.size()) {
        raise(ErrorCode::ShapeMismatch, "logits/labels size mismatch");
    }
    BceResult out;
    out.grad_logits.resize(p);
    double loss = 0.0;
    const double inv_p = 1.0 / static_cast<double>(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double z = logits[i];
        const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        const double sigma = 1.0 / (1.0 + std::exp(-z));
        out.grad_logits[i] = (sigma - y) * inv_p;
    }
    out.loss = loss * inv_p;
    return out;
}

}  // namespace corrpose
