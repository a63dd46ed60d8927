#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sentinel/dense.hpp"
#include "sentinel/features.hpp"
#include "sentinel/probabilities.hpp"

namespace sentinel {

struct AdamConfig {
    AdamParams adam;
    std::size_t batch_size = 16;
    double dropout = 0.4;
    std::size_t max_epochs = 30;
    std::uint64_t seed = 0;

    // Autoencoder schedule: no dropout, up to 100 epochs.
    static AdamConfig autoencoder(std::uint64_t seed = 0);

    // Throws unless 0 < learning rate, 0 <= beta1, beta2 < 1, 0 <= dropout < 1
    // and batch size / epochs are positive.
    void validate() const;
};

// 20 -> 64 -> 64 -> 6 relu network with a softmax head.
class Mlp {
public:
    static constexpr std::size_t kHidden = 64;

    Mlp() = default;
    explicit Mlp(DenseNet net);
    static Mlp initialize(std::uint64_t seed);

    const DenseNet& net() const noexcept { return net_; }
    DenseNet& net() noexcept { return net_; }

    ClassProbabilities predict_proba(const FeatureVector& feature) const;
    std::vector<ClassProbabilities> predict_proba(std::span<const FeatureVector> features) const;

    bool operator==(const Mlp&) const = default;

private:
    DenseNet net_;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::size_t chosen_epoch = 0;  // 1-based
};

// Adam on softmax cross-entropy with inverted dropout on both hidden layers.
// A stratified 10% validation slice is held out first; SMOTE then balances
// the remaining training slice. Returns the parameters of the epoch with the
// lowest validation loss.
std::pair<Mlp, TrainReport> train_ann(std::span<const FeatureVector> features, const AdamConfig& cfg);

// Mean of the window probabilities of one frame, renormalised.
ClassProbabilities frame_proba(const Mlp& model, std::span<const FeatureVector> window_features);
ClassProbabilities mean_probabilities(std::span<const ClassProbabilities> probs);

// Packs labeled feature vectors into (20 x n inputs, 6 x n one-hot targets).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> to_batch(std::span<const FeatureVector> batch);

// Max relative error of backprop against central differences (h = 1e-5)
// over every parameter; batch must hold at most 8 labeled vectors.
double gradient_check(const Mlp& model, std::span<const FeatureVector> batch);

}  // namespace sentinel
