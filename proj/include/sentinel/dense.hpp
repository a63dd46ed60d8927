#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sentinel {

enum class Activation { relu, tanh, identity };

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::identity;

    bool operator==(const DenseLayer& rhs) const {
        return activation == rhs.activation && weights == rhs.weights && bias == rhs.bias;
    }
};

enum class Loss {
    softmax_cross_entropy,  // mean over the batch of -log softmax(logits)[target]
    mean_squared,           // mean over batch and outputs of (output - target)^2
};

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;
};

// Fully connected network. Samples are columns of the input matrix.
class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<DenseLayer> layers);

    // Hidden layers use `hidden`, the last layer is linear. relu layers get
    // He-uniform weights, others Glorot-uniform; biases start at zero.
    static DenseNet initialize(std::span<const std::size_t> sizes, Activation hidden, std::uint64_t seed);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    std::size_t input_size() const { return static_cast<std::size_t>(layers_.front().weights.cols()); }
    std::size_t output_size() const { return static_cast<std::size_t>(layers_.back().weights.rows()); }

    // Output of the last (linear) layer.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;

    // Loss on the batch and, if `grads` is given, its gradients. When
    // `dropout_rate` > 0 an inverted-dropout mask drawn from `rng` is applied
    // to every hidden activation.
    double loss_and_gradients(const Eigen::MatrixXd& input, const Eigen::MatrixXd& target, Loss loss,
                              Gradients* grads, double dropout_rate = 0.0, std::mt19937_64* rng = nullptr) const;

    std::size_t parameter_count() const;
    double& parameter(std::size_t i);
    double parameter(std::size_t i) const;

    bool all_finite() const;
    bool operator==(const DenseNet&) const = default;

private:
    std::vector<DenseLayer> layers_;
};

struct AdamParams {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class AdamOptimizer {
public:
    AdamOptimizer(const DenseNet& net, AdamParams params);
    void step(DenseNet& net, const Gradients& grads);

private:
    AdamParams params_;
    std::size_t t_ = 0;
    Gradients m_;
    Gradients v_;
};

// |a - n| / max(|a|, |n|, 1e-6); symmetric in its arguments.
double gradient_relative_error(double analytic, double numeric);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    double analytic_norm = 0.0;
    std::size_t checked = 0;
};

// Central differences (step h) against backprop with dropout off. Checks
// every parameter when `max_parameters` is 0, otherwise a seeded sample of
// that many parameters spread over all layers.
GradientCheckResult check_gradients(const DenseNet& net, const Eigen::MatrixXd& input, const Eigen::MatrixXd& target,
                                    Loss loss, double h = 1e-5, std::size_t max_parameters = 0,
                                    std::uint64_t seed = 0);

}  // namespace sentinel
