#include "sentinel/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sentinel/error.hpp"
#include "sentinel/stats.hpp"

namespace sentinel {

Autoencoder::Autoencoder(DenseNet net, double input_mean, double input_std)
    : net_(std::move(net)), mean_(input_mean), std_(input_std) {
    const auto& layers = net_.layers();
    if (layers.size() != kSizes.size() - 1) throw Error("autoencoder must have 4 weight layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (static_cast<std::size_t>(layers[l].weights.cols()) != kSizes[l] ||
            static_cast<std::size_t>(layers[l].weights.rows()) != kSizes[l + 1]) {
            throw Error("autoencoder layer " + std::to_string(l) + " has the wrong shape");
        }
    }
    if (!(input_std > 0.0) || !std::isfinite(input_mean)) throw Error("autoencoder: invalid input scaling");
}

std::array<double, kFrameLength> frame_magnitude(const Frame& frame) {
    std::array<double, kFrameLength> m{};
    for (std::size_t i = 0; i < kFrameLength; ++i) {
        m[i] = std::sqrt(frame.x[i] * frame.x[i] + frame.y[i] * frame.y[i] + frame.z[i] * frame.z[i]);
    }
    return m;
}

std::pair<double, double> magnitude_statistics(std::span<const Frame> frames) {
    if (frames.empty()) throw Error("magnitude statistics of no frames");
    double sum = 0.0;
    std::vector<std::array<double, kFrameLength>> mags;
    mags.reserve(frames.size());
    for (const Frame& f : frames) {
        mags.push_back(frame_magnitude(f));
        for (double v : mags.back()) sum += v;
    }
    const double n = static_cast<double>(frames.size() * kFrameLength);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& m : mags)
        for (double v : m) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / n)};
}

Eigen::VectorXd Autoencoder::input(const Frame& frame) const {
    const auto m = frame_magnitude(frame);
    Eigen::VectorXd v(static_cast<Eigen::Index>(kFrameLength));
    for (std::size_t i = 0; i < kFrameLength; ++i) v(static_cast<Eigen::Index>(i)) = (m[i] - mean_) / std_;
    return v;
}

Eigen::VectorXd Autoencoder::reconstruct(const Eigen::VectorXd& input) const {
    return net_.forward(input);
}

Autoencoder train_autoencoder(std::span<const Frame> healthy, const AdamConfig& cfg) {
    cfg.validate();
    if (healthy.size() < 10) throw Error("train_autoencoder: needs at least 10 healthy frames");
    for (const Frame& f : healthy) {
        if (!f.label) throw Error("train_autoencoder: unlabeled frame");
        if (f.label->anomaly()) {
            throw Error("train_autoencoder: anomaly-labeled frame (class " + std::to_string(f.label->id()) +
                        ") in healthy training set");
        }
    }

    const auto [mean, sd] = magnitude_statistics(healthy);
    if (!(sd > 0.0)) throw Error("train_autoencoder: zero training magnitude std");

    std::mt19937_64 rng(cfg.seed);
    Autoencoder ae(DenseNet::initialize(Autoencoder::kSizes, Activation::tanh, rng()), mean, sd);

    const auto n = static_cast<Eigen::Index>(healthy.size());
    Eigen::MatrixXd data(static_cast<Eigen::Index>(kFrameLength), n);
    for (Eigen::Index i = 0; i < n; ++i) data.col(i) = ae.input(healthy[static_cast<std::size_t>(i)]);

    AdamOptimizer optimizer(ae.net(), cfg.adam);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Autoencoder best = ae;
    double best_loss = std::numeric_limits<double>::infinity();
    Gradients grads;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            Eigen::MatrixXd batch(data.rows(), static_cast<Eigen::Index>(stop - start));
            for (std::size_t k = start; k < stop; ++k) batch.col(static_cast<Eigen::Index>(k - start)) = data.col(order[k]);
            const double loss = ae.net().loss_and_gradients(batch, batch, Loss::mean_squared, &grads,
                                                            cfg.dropout, cfg.dropout > 0.0 ? &rng : nullptr);
            if (!std::isfinite(loss)) {
                throw Error("train_autoencoder: non-finite loss at epoch " + std::to_string(epoch + 1));
            }
            optimizer.step(ae.net(), grads);
        }
        const double full = ae.net().loss_and_gradients(data, data, Loss::mean_squared, nullptr);
        if (full < best_loss) {
            best_loss = full;
            best = ae;
        }
    }
    return best;
}

double reconstruction_error(const Autoencoder& ae, const Frame& frame) {
    const Eigen::VectorXd x = ae.input(frame);
    const Eigen::VectorXd r = ae.reconstruct(x);
    return (r - x).squaredNorm() / static_cast<double>(x.size());
}

AnomalyThreshold fit_threshold(std::span<const double> errors) {
    if (errors.size() < 2) throw Error("fit_threshold: needs at least 2 errors");
    for (double e : errors) {
        if (!std::isfinite(e) || e < 0.0) throw Error("fit_threshold: errors must be finite and non-negative");
    }
    AnomalyThreshold t;
    t.error_mean = stats::mean(errors);
    t.error_std = std::sqrt(stats::variance_population(errors));
    t.tau = t.error_mean + t.error_std;
    return t;
}

AeFlag detect(const Autoencoder& ae, const AnomalyThreshold& threshold, const Frame& frame) {
    return detect(reconstruction_error(ae, frame), threshold);
}

const char* to_string(AeFlag flag) { return flag == AeFlag::anomaly ? "anomaly" : "healthy"; }

}  // namespace sentinel
