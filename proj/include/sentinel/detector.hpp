#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "sentinel/ann.hpp"
#include "sentinel/dataset.hpp"
#include "sentinel/dense.hpp"

namespace sentinel {

enum class AeFlag { healthy, anomaly };

// 512 -> 256 -> 126 -> 256 -> 512 tanh autoencoder over the standardised
// acceleration magnitude of a frame.
class Autoencoder {
public:
    static constexpr std::array<std::size_t, 5> kSizes{512, 256, 126, 256, 512};

    Autoencoder() = default;
    Autoencoder(DenseNet net, double input_mean, double input_std);

    const DenseNet& net() const noexcept { return net_; }
    DenseNet& net() noexcept { return net_; }
    double input_mean() const noexcept { return mean_; }
    double input_std() const noexcept { return std_; }

    // Standardised magnitude signal of a frame.
    Eigen::VectorXd input(const Frame& frame) const;
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& input) const;

    bool operator==(const Autoencoder&) const = default;

private:
    DenseNet net_;
    double mean_ = 0.0;
    double std_ = 1.0;
};

// sqrt(x^2 + y^2 + z^2) per sample.
std::array<double, kFrameLength> frame_magnitude(const Frame& frame);

// Scalar mean / population std over every magnitude sample of the frames.
std::pair<double, double> magnitude_statistics(std::span<const Frame> frames);

// Trains on healthy-labeled frames only (>= 10), minimising mean squared
// reconstruction error; keeps the epoch with the lowest full training loss.
Autoencoder train_autoencoder(std::span<const Frame> healthy, const AdamConfig& cfg);

// Mean squared error between the autoencoder input and its reconstruction.
double reconstruction_error(const Autoencoder& ae, const Frame& frame);

struct AnomalyThreshold {
    double tau = 0.0;
    double error_mean = 0.0;
    double error_std = 0.0;  // population

    bool operator==(const AnomalyThreshold&) const = default;
};

// tau = mean + population standard deviation.
AnomalyThreshold fit_threshold(std::span<const double> errors);

// Anomaly iff error > tau.
inline AeFlag detect(double error, const AnomalyThreshold& threshold) {
    return error > threshold.tau ? AeFlag::anomaly : AeFlag::healthy;
}
AeFlag detect(const Autoencoder& ae, const AnomalyThreshold& threshold, const Frame& frame);

const char* to_string(AeFlag flag);

}  // namespace sentinel
