#include "sentinel/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sentinel/error.hpp"
#include "sentinel/probabilities.hpp"

namespace sentinel {

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error("network has no layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.weights.rows()) throw Error("bias size does not match layer output");
        if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
            throw Error("layer " + std::to_string(l) + " input does not match previous output");
        }
    }
}

DenseNet DenseNet::initialize(std::span<const std::size_t> sizes, Activation hidden, std::uint64_t seed) {
    if (sizes.size() < 2) throw Error("network needs at least input and output sizes");
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t fan_in = sizes[l];
        const std::size_t fan_out = sizes[l + 1];
        const bool last = l + 2 == sizes.size();
        DenseLayer layer;
        layer.activation = last ? Activation::identity : hidden;
        const double limit = layer.activation == Activation::relu
                                 ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                 : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out));
        layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers));
}

namespace {

void activate(Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::relu: z = z.cwiseMax(0.0); break;
        case Activation::tanh: z = z.array().tanh().matrix(); break;
        case Activation::identity: break;
    }
}

}  // namespace

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& input) const {
    if (input.rows() != static_cast<Eigen::Index>(input_size())) throw Error("input size mismatch");
    Eigen::MatrixXd a = input;
    for (const DenseLayer& layer : layers_) {
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.bias;
        activate(z, layer.activation);
        a = std::move(z);
    }
    return a;
}

double DenseNet::loss_and_gradients(const Eigen::MatrixXd& input, const Eigen::MatrixXd& target, Loss loss,
                                    Gradients* grads, double dropout_rate, std::mt19937_64* rng) const {
    if (input.rows() != static_cast<Eigen::Index>(input_size())) throw Error("input size mismatch");
    if (target.rows() != static_cast<Eigen::Index>(output_size()) || target.cols() != input.cols()) {
        throw Error("target shape mismatch");
    }
    if (dropout_rate > 0.0 && rng == nullptr) throw Error("dropout requires an rng");

    const std::size_t n_layers = layers_.size();
    const double batch = static_cast<double>(input.cols());
    // activations[l] is the input to layer l; activations[n_layers] is the output.
    std::vector<Eigen::MatrixXd> activations(n_layers + 1);
    std::vector<Eigen::MatrixXd> derivs(n_layers);
    std::vector<Eigen::MatrixXd> masks(n_layers);
    activations[0] = input;
    const double keep_scale = dropout_rate > 0.0 ? 1.0 / (1.0 - dropout_rate) : 1.0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = layers_[l];
        Eigen::MatrixXd z = layer.weights * activations[l];
        z.colwise() += layer.bias;
        switch (layer.activation) {
            case Activation::relu:
                derivs[l] = (z.array() > 0.0).cast<double>().matrix();
                z = z.cwiseMax(0.0);
                break;
            case Activation::tanh:
                z = z.array().tanh().matrix();
                derivs[l] = (1.0 - z.array().square()).matrix();
                break;
            case Activation::identity:
                break;
        }
        const bool hidden = l + 1 < n_layers;
        if (hidden && dropout_rate > 0.0) {
            masks[l].resize(z.rows(), z.cols());
            for (Eigen::Index c = 0; c < z.cols(); ++c)
                for (Eigen::Index r = 0; r < z.rows(); ++r)
                    masks[l](r, c) = unit(*rng) < dropout_rate ? 0.0 : keep_scale;
            z = z.cwiseProduct(masks[l]);
        }
        activations[l + 1] = std::move(z);
    }

    const Eigen::MatrixXd& out = activations[n_layers];
    double value = 0.0;
    Eigen::MatrixXd delta;
    if (loss == Loss::softmax_cross_entropy) {
        Eigen::MatrixXd probs(out.rows(), out.cols());
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            const double mx = out.col(c).maxCoeff();
            const Eigen::ArrayXd e = (out.col(c).array() - mx).exp();
            const double s = e.sum();
            probs.col(c) = (e / s).matrix();
            value -= (target.col(c).array() * ((out.col(c).array() - mx) - std::log(s))).sum();
        }
        value /= batch;
        if (grads) delta = (probs - target) / batch;
    } else {
        const double denom = batch * static_cast<double>(out.rows());
        const Eigen::MatrixXd diff = out - target;
        value = diff.squaredNorm() / denom;
        if (grads) delta = 2.0 * diff / denom;
    }
    if (!grads) return value;

    grads->weights.assign(n_layers, {});
    grads->bias.assign(n_layers, {});
    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = layers_[l];
        if (l + 1 < n_layers && layer.activation != Activation::identity) {
            delta = delta.cwiseProduct(derivs[l]);
        }
        grads->weights[l] = delta * activations[l].transpose();
        grads->bias[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = layer.weights.transpose() * delta;
            if (masks[l - 1].size() > 0) delta = delta.cwiseProduct(masks[l - 1]);
        }
    }
    return value;
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    return n;
}

double& DenseNet::parameter(std::size_t i) {
    for (DenseLayer& layer : layers_) {
        const auto nw = static_cast<std::size_t>(layer.weights.size());
        if (i < nw) return layer.weights.data()[i];
        i -= nw;
        const auto nb = static_cast<std::size_t>(layer.bias.size());
        if (i < nb) return layer.bias.data()[i];
        i -= nb;
    }
    throw Error("parameter index out of range");
}

double DenseNet::parameter(std::size_t i) const {
    return const_cast<DenseNet*>(this)->parameter(i);
}

bool DenseNet::all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& layer) {
        return layer.weights.allFinite() && layer.bias.allFinite();
    });
}

AdamOptimizer::AdamOptimizer(const DenseNet& net, AdamParams params) : params_(params) {
    for (const DenseLayer& layer : net.layers()) {
        m_.weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        m_.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    v_ = m_;
}

void AdamOptimizer::step(DenseNet& net, const Gradients& grads) {
    ++t_;
    const double b1 = params_.beta1;
    const double b2 = params_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double lr = params_.learning_rate;
    const double eps = params_.epsilon;

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        update(net.layers()[l].weights, m_.weights[l], v_.weights[l], grads.weights[l]);
        update(net.layers()[l].bias, m_.bias[l], v_.bias[l], grads.bias[l]);
    }
}

double gradient_relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

GradientCheckResult check_gradients(const DenseNet& net, const Eigen::MatrixXd& input, const Eigen::MatrixXd& target,
                                    Loss loss, double h, std::size_t max_parameters, std::uint64_t seed) {
    Gradients grads;
    net.loss_and_gradients(input, target, loss, &grads);

    std::vector<double> analytic;
    analytic.reserve(net.parameter_count());
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        analytic.insert(analytic.end(), grads.weights[l].data(), grads.weights[l].data() + grads.weights[l].size());
        analytic.insert(analytic.end(), grads.bias[l].data(), grads.bias[l].data() + grads.bias[l].size());
    }

    std::vector<std::size_t> indices(analytic.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (max_parameters > 0 && max_parameters < indices.size()) {
        std::mt19937_64 rng(seed);
        std::shuffle(indices.begin(), indices.end(), rng);
        indices.resize(max_parameters);
        std::sort(indices.begin(), indices.end());
    }

    GradientCheckResult result;
    double sq = 0.0;
    for (double g : analytic) sq += g * g;
    result.analytic_norm = std::sqrt(sq);

    DenseNet probe = net;
    for (std::size_t i : indices) {
        double& p = probe.parameter(i);
        const double saved = p;
        p = saved + h;
        const double up = probe.loss_and_gradients(input, target, loss, nullptr);
        p = saved - h;
        const double down = probe.loss_and_gradients(input, target, loss, nullptr);
        p = saved;
        const double numeric = (up - down) / (2.0 * h);
        result.max_relative_error = std::max(result.max_relative_error, gradient_relative_error(analytic[i], numeric));
        ++result.checked;
    }
    return result;
}

}  // namespace sentinel
