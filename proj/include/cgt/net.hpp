#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgt/rng.hpp"

namespace cgt::nn {

enum class Activation { relu, tanh, linear, sigmoid };

[[nodiscard]] inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::linear: return "linear";
        case Activation::sigmoid: return "sigmoid";
    }
    throw std::logic_error("unknown activation");
}

[[nodiscard]] inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "linear") return Activation::linear;
    if (s == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

/// Sigmoid outputs are clamped away from {0,1} so downstream log-losses
/// stay finite.
inline constexpr double kSigmoidClamp = 1e-7;

/// Dense feed-forward network. Weights are (out_dim x in_dim) per layer;
/// the same hidden activation applies to every hidden layer.
struct MlpNet {
    std::vector<int> layer_dims;  // input, hidden..., output
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::linear;
    double weight_decay = 0.0;

    [[nodiscard]] std::size_t layer_count() const { return weights.size(); }
    [[nodiscard]] int input_dim() const { return layer_dims.front(); }
    [[nodiscard]] int output_dim() const { return layer_dims.back(); }
};

/// Glorot-uniform initialized network: weights in +/- sqrt(6/(fan_in+fan_out)),
/// biases zero.
[[nodiscard]] inline MlpNet make_mlp(std::vector<int> layer_dims, Activation hidden,
                                     Activation output, double weight_decay, Rng& rng) {
    if (layer_dims.size() < 2) throw std::invalid_argument("net needs at least input and output");
    for (int d : layer_dims)
        if (d <= 0) throw std::invalid_argument("net layer dims must be positive");
    MlpNet net;
    net.layer_dims = std::move(layer_dims);
    net.hidden_activation = hidden;
    net.output_activation = output;
    net.weight_decay = weight_decay;
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        const int fan_in = net.layer_dims[l];
        const int fan_out = net.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    return net;
}

namespace detail {

inline void apply_activation(Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::linear:
            break;
        case Activation::sigmoid:
            z = (1.0 / (1.0 + (-z.array()).exp()))
                    .cwiseMax(kSigmoidClamp)
                    .cwiseMin(1.0 - kSigmoidClamp)
                    .matrix();
            break;
    }
}

/// Activation derivative expressed in terms of the activation value itself.
[[nodiscard]] inline Eigen::ArrayXXd activation_derivative(const Eigen::MatrixXd& a,
                                                           Activation act) {
    switch (act) {
        case Activation::relu: return (a.array() > 0.0).cast<double>();
        case Activation::tanh: return 1.0 - a.array().square();
        case Activation::linear: return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
        case Activation::sigmoid: return a.array() * (1.0 - a.array());
    }
    throw std::logic_error("unknown activation");
}

}  // namespace detail

/// All per-layer activations of one forward pass; activations[0] is the
/// input, activations[L] the network output. Columns are batch samples.
struct ForwardPass {
    std::vector<Eigen::MatrixXd> activations;

    [[nodiscard]] const Eigen::MatrixXd& output() const { return activations.back(); }
};

[[nodiscard]] inline ForwardPass forward(const MlpNet& net, const Eigen::MatrixXd& input) {
    if (input.rows() != net.input_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(input.rows()) +
                                    " rows, net expects " + std::to_string(net.input_dim()));
    ForwardPass pass;
    pass.activations.reserve(net.layer_count() + 1);
    pass.activations.push_back(input);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Eigen::MatrixXd z =
            (net.weights[l] * pass.activations.back()).colwise() + net.biases[l];
        const bool is_output = (l + 1 == net.layer_count());
        detail::apply_activation(z, is_output ? net.output_activation : net.hidden_activation);
        pass.activations.push_back(std::move(z));
    }
    return pass;
}

/// Gradients of a scalar loss w.r.t. every parameter and the input batch.
struct Gradients {
    std::vector<Eigen::MatrixXd> weight_grads;
    std::vector<Eigen::VectorXd> bias_grads;
    Eigen::MatrixXd input_grad;
};

/// Backpropagate `upstream` = dLoss/dOutput through the recorded pass.
/// Gradients sum over batch columns; put any 1/batch factor in `upstream`.
[[nodiscard]] inline Gradients backward(const MlpNet& net, const ForwardPass& pass,
                                        const Eigen::MatrixXd& upstream) {
    const auto L = net.layer_count();
    if (pass.activations.size() != L + 1)
        throw std::invalid_argument("backward: pass does not match net depth");
    if (upstream.rows() != net.output_dim() || upstream.cols() != pass.output().cols())
        throw std::invalid_argument("backward: upstream gradient shape mismatch");

    Gradients grads;
    grads.weight_grads.resize(L);
    grads.bias_grads.resize(L);

    Eigen::MatrixXd delta =
        (upstream.array() * detail::activation_derivative(pass.output(), net.output_activation))
            .matrix();
    for (std::size_t l = L; l-- > 0;) {
        grads.weight_grads[l] = delta * pass.activations[l].transpose();
        grads.bias_grads[l] = delta.rowwise().sum();
        Eigen::MatrixXd back = net.weights[l].transpose() * delta;
        if (l > 0) {
            delta = (back.array() *
                     detail::activation_derivative(pass.activations[l], net.hidden_activation))
                        .matrix();
        } else {
            grads.input_grad = std::move(back);
        }
    }
    return grads;
}

/// One SGD update: w <- w - lr*(grad + weight_decay*w). Decay applies to
/// weights only.
inline void sgd_step(MlpNet& net, const Gradients& grads, double learning_rate) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        net.weights[l] -=
            learning_rate * (grads.weight_grads[l] + net.weight_decay * net.weights[l]);
        net.biases[l] -= learning_rate * grads.bias_grads[l];
    }
}

[[nodiscard]] inline bool all_finite(const MlpNet& net) {
    for (const auto& w : net.weights)
        if (!w.allFinite()) return false;
    for (const auto& b : net.biases)
        if (!b.allFinite()) return false;
    return true;
}

struct SgdConfig {
    double learning_rate = 0.01;
    int batch_size = 252;
    int epochs = 200;
    std::uint64_t seed = 0;
};

/// Thrown when training produces non-finite parameters or gradients.
class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(int epoch, const std::string& what)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + what),
          epoch_(epoch) {}
    [[nodiscard]] int epoch() const { return epoch_; }

private:
    int epoch_;
};

/// Train `net` as a least-squares regressor on (features, targets) with
/// minibatch SGD. Batch order reshuffles every epoch from the config seed;
/// the final partial batch is used, not dropped.
///
/// `features` is (samples x input_dim), `targets` length samples.
inline void train_regressor(MlpNet& net, const Eigen::MatrixXd& features,
                            const Eigen::VectorXd& targets, const SgdConfig& config) {
    const auto n = features.rows();
    if (n == 0) throw std::invalid_argument("train_regressor: empty dataset");
    if (targets.size() != n)
        throw std::invalid_argument("train_regressor: feature/target row mismatch");
    if (config.batch_size <= 0 || config.epochs <= 0 || config.learning_rate <= 0.0)
        throw std::invalid_argument("train_regressor: invalid SGD config");

    const Eigen::MatrixXd inputs = features.transpose();  // columns are samples
    Rng rng(config.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates reshuffle per epoch
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_index(i));
            std::swap(order[i - 1], order[j]);
        }
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const auto count = std::min<Eigen::Index>(config.batch_size, n - start);
            Eigen::MatrixXd batch(inputs.rows(), count);
            Eigen::MatrixXd target_row(1, count);
            for (Eigen::Index c = 0; c < count; ++c) {
                const auto idx = order[static_cast<std::size_t>(start + c)];
                batch.col(c) = inputs.col(idx);
                target_row(0, c) = targets(idx);
            }
            const ForwardPass pass = forward(net, batch);
            // mean squared error: upstream = (y_hat - y) / batch
            const Eigen::MatrixXd upstream =
                (pass.output() - target_row) / static_cast<double>(count);
            const Gradients grads = backward(net, pass, upstream);
            sgd_step(net, grads, config.learning_rate);
        }
        if (!all_finite(net)) throw TrainingDivergence(epoch, "non-finite parameters");
    }
}

}  // namespace cgt::nn
