#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/random.hpp"

namespace corrpose {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

struct SirenLayer {
    MatX weight;  // out_dim x in_dim
    VecX bias;    // out_dim
};

/// Sine-activated MLP. Hidden layers compute sin(omega0 * (Wx + b)); the
/// final layer is affine. Weight bounds shrink by 1/omega0 on hidden layers
/// past the first so pre-activations keep unit scale through depth.
struct SirenMlp {
    std::vector<SirenLayer> layers;
    double omega0 = 30.0;

    int in_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
    int out_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
        return n;
    }
};

/// Cached forward state for one batch; consumed exactly once by a backward pass.
struct GradientTape {
    std::vector<MatX> layer_inputs;          // x_l, batch x in_dim_l
    std::vector<MatX> layer_preactivations;  // z_l = x_l W_l^T + b_l
    bool consumed = false;
};

struct SirenGradients {
    std::vector<SirenLayer> layers;  // same shapes as the model
    MatX inputs;                     // batch x in_dim
};

inline SirenMlp siren_init(int in_dim, const std::vector<int>& hidden_dims, int out_dim,
                           double omega0, std::uint64_t seed) {
    if (in_dim < 1 || out_dim < 1) raise(ErrorCode::InvalidConfig, "dims must be >= 1");
    for (int h : hidden_dims) {
        if (h < 1) raise(ErrorCode::InvalidConfig, "dims must be >= 1");
    }
    SirenMlp model;
    model.omega0 = omega0;
    Rng rng(seed);
    std::vector<int> dims;
    dims.push_back(in_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(out_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const bool is_final = l + 2 == dims.size();
        const double bound = l == 0          ? 1.0 / fan_in
                             : is_final      ? std::sqrt(6.0 / fan_in)
                                             : std::sqrt(6.0 / fan_in) / omega0;
        SirenLayer layer;
        layer.weight.resize(fan_out, fan_in);
        layer.bias.resize(fan_out);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
        }
        for (int r = 0; r < fan_out; ++r) layer.bias[r] = rng.uniform(-bound, bound);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

/// Forward pass over a batch (rows are samples). Inputs are expected to be
/// roughly unit scale; object coordinates are normalized to [-1, 1]^3 by the
/// caller.
inline MatX siren_forward(const SirenMlp& model, const MatX& inputs, GradientTape* tape = nullptr) {
    if (model.layers.empty()) raise(ErrorCode::ShapeMismatch, "model has no layers");
    if (inputs.cols() != model.in_dim()) {
        raise(ErrorCode::ShapeMismatch,
              "input dim " + std::to_string(inputs.cols()) + " vs model " + std::to_string(model.in_dim()));
    }
    if (tape) {
        tape->layer_inputs.clear();
        tape->layer_preactivations.clear();
        tape->consumed = false;
    }
    MatX x = inputs;
    const std::size_t last = model.layers.size() - 1;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        if (tape) tape->layer_inputs.push_back(x);
        MatX z = (x * layer.weight.transpose()).rowwise() + layer.bias.transpose();
        if (tape) tape->layer_preactivations.push_back(z);
        if (l == last) {
            x = std::move(z);
        } else {
            x = (model.omega0 * z.array()).sin().matrix();
        }
    }
    return x;
}

/// Exact reverse-mode gradients of siren_forward. output_grads carries any
/// loss scaling (e.g. 1/batch), so the returned gradients are unscaled sums.
inline SirenGradients siren_backward(const SirenMlp& model, GradientTape& tape,
                                     const MatX& output_grads) {
    if (tape.consumed) raise(ErrorCode::TapeReuse, "gradient tape already consumed");
    if (tape.layer_inputs.size() != model.layers.size()) {
        raise(ErrorCode::ShapeMismatch, "tape does not match model");
    }
    if (output_grads.rows() != tape.layer_inputs.front().rows() ||
        output_grads.cols() != model.out_dim()) {
        raise(ErrorCode::ShapeMismatch, "output_grads shape mismatch");
    }
    tape.consumed = true;

    SirenGradients grads;
    grads.layers.resize(model.layers.size());
    const std::size_t last = model.layers.size() - 1;
    MatX g = output_grads;  // dL/dz for the layer being processed
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        if (li != last) {
            // g currently holds dL/dx_{li+1}; fold in the sine derivative.
            const MatX& z = tape.layer_preactivations[li];
            g = (g.array() * (model.omega0 * z.array()).cos() * model.omega0).matrix();
        }
        grads.layers[li].weight = g.transpose() * tape.layer_inputs[li];
        grads.layers[li].bias = g.colwise().sum().transpose();
        g = g * model.layers[li].weight;  // dL/dx_li
    }
    grads.inputs = std::move(g);
    return grads;
}

// Flat parameter views, used by the optimizer.

inline VecX pack_parameters(const SirenMlp& model) {
    VecX flat(static_cast<Eigen::Index>(model.parameter_count()));
    Eigen::Index at = 0;
    for (const auto& l : model.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[at++] = l.weight(r, c);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat[at++] = l.bias[r];
    }
    return flat;
}

inline VecX pack_gradients(const SirenGradients& grads) {
    Eigen::Index total = 0;
    for (const auto& l : grads.layers) total += l.weight.size() + l.bias.size();
    VecX flat(total);
    Eigen::Index at = 0;
    for (const auto& l : grads.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[at++] = l.weight(r, c);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat[at++] = l.bias[r];
    }
    return flat;
}

inline void unpack_parameters(const VecX& flat, SirenMlp& model) {
    if (flat.size() != static_cast<Eigen::Index>(model.parameter_count())) {
        raise(ErrorCode::ShapeMismatch, "flat parameter size mismatch");
    }
    Eigen::Index at = 0;
    for (auto& l : model.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[at++];
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[at++];
    }
}

// Binary persistence: magic "SMLP", u32 layer count, per layer u32 in/out dims
// + f64 weights row-major + f64 biases, then f64 omega0.

inline void save_siren(const SirenMlp& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out.write("SMLP", 4);
    const std::uint32_t count = static_cast<std::uint32_t>(model.layers.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& l : model.layers) {
        const std::uint32_t in = static_cast<std::uint32_t>(l.weight.cols());
        const std::uint32_t out_d = static_cast<std::uint32_t>(l.weight.rows());
        out.write(reinterpret_cast<const char*>(&in), 4);
        out.write(reinterpret_cast<const char*>(&out_d), 4);
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                const double v = l.weight(r, c);
                out.write(reinterpret_cast<const char*>(&v), 8);
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            const double v = l.bias[r];
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
    out.write(reinterpret_cast<const char*>(&model.omega0), 8);
    if (!out) raise(ErrorCode::IoError, "short write to " + path);
}

inline SirenMlp load_siren(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SMLP", 4) != 0) raise(ErrorCode::IoError, "bad SMLP magic in " + path);
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    SirenMlp model;
    for (std::uint32_t l = 0; l < count; ++l) {
        std::uint32_t in_d = 0, out_d = 0;
        in.read(reinterpret_cast<char*>(&in_d), 4);
        in.read(reinterpret_cast<char*>(&out_d), 4);
        SirenLayer layer;
        layer.weight.resize(out_d, in_d);
        layer.bias.resize(out_d);
        for (std::uint32_t r = 0; r < out_d; ++r) {
            for (std::uint32_t c = 0; c < in_d; ++c) {
                double v;
                in.read(reinterpret_cast<char*>(&v), 8);
                layer.weight(r, c) = v;
            }
        }
        for (std::uint32_t r = 0; r < out_d; ++r) {
            double v;
            in.read(reinterpret_cast<char*>(&v), 8);
            layer.bias[r] = v;
        }
        model.layers.push_back(std::move(layer));
    }
    in.read(reinterpret_cast<char*>(&model.omega0), 8);
    if (!in) raise(ErrorCode::IoError, "truncated SMLP file " + path);
    return model;
}

}  // namespace corrpose
