#include "sentinel/ann.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "sentinel/error.hpp"

namespace sentinel {

AdamConfig AdamConfig::autoencoder(std::uint64_t seed) {
    AdamConfig cfg;
    cfg.dropout = 0.0;
    cfg.max_epochs = 100;
    cfg.seed = seed;
    return cfg;
}

void AdamConfig::validate() const {
    if (!(adam.learning_rate > 0.0)) throw Error("adam: learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw Error("adam: beta1 must lie in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw Error("adam: beta2 must lie in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw Error("adam: epsilon must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
    if (batch_size == 0) throw Error("batch size must be positive");
    if (max_epochs == 0) throw Error("max epochs must be positive");
}

Mlp::Mlp(DenseNet net) : net_(std::move(net)) {
    if (net_.input_size() != kNumMfcc || net_.output_size() != kNumClasses) {
        throw Error("mlp must map 20 inputs to 6 outputs");
    }
}

Mlp Mlp::initialize(std::uint64_t seed) {
    const std::array<std::size_t, 4> sizes{kNumMfcc, kHidden, kHidden, kNumClasses};
    return Mlp(DenseNet::initialize(sizes, Activation::relu, seed));
}

ClassProbabilities Mlp::predict_proba(const FeatureVector& feature) const {
    for (double v : feature.coeffs) {
        if (!std::isfinite(v)) throw Error("predict_proba: non-finite input");
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kNumMfcc), 1);
    for (std::size_t j = 0; j < kNumMfcc; ++j) x(static_cast<Eigen::Index>(j), 0) = feature.coeffs[j];
    const Eigen::MatrixXd logits = net_.forward(x);
    return ClassProbabilities::softmax(std::span<const double>(logits.data(), kNumClasses));
}

std::vector<ClassProbabilities> Mlp::predict_proba(std::span<const FeatureVector> features) const {
    std::vector<ClassProbabilities> out;
    if (features.empty()) return out;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kNumMfcc), static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i)
        for (std::size_t j = 0; j < kNumMfcc; ++j)
            x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = features[i].coeffs[j];
    if (!x.allFinite()) throw Error("predict_proba: non-finite input");
    const Eigen::MatrixXd logits = net_.forward(x);
    out.reserve(features.size());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        out.push_back(ClassProbabilities::softmax(std::span<const double>(logits.col(c).data(), kNumClasses)));
    }
    return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> to_batch(std::span<const FeatureVector> batch) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kNumMfcc), n);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kNumClasses), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const FeatureVector& v = batch[static_cast<std::size_t>(i)];
        if (!v.label) throw Error("training vector without label");
        for (std::size_t j = 0; j < kNumMfcc; ++j) x(static_cast<Eigen::Index>(j), i) = v.coeffs[j];
        t(static_cast<Eigen::Index>(v.label->index()), i) = 1.0;
    }
    return {std::move(x), std::move(t)};
}

std::pair<Mlp, TrainReport> train_ann(std::span<const FeatureVector> features, const AdamConfig& cfg) {
    cfg.validate();
    if (features.empty()) throw Error("train_ann: no training vectors");

    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!features[i].label) throw Error("train_ann: unlabeled vector");
        by_class[features[i].label->index()].push_back(i);
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> validation;
    for (auto& members : by_class) {
        if (members.empty()) continue;
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t n_val = members.size() / 10;
        for (std::size_t k = 0; k < members.size(); ++k) {
            (k < n_val ? validation : train).push_back(features[members[k]]);
        }
    }

    bool single_member_class = false;
    {
        std::array<std::size_t, kNumClasses> counts{};
        for (const auto& v : train) ++counts[v.label->index()];
        single_member_class = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 1; });
    }
    if (!single_member_class) train = smote(train, 5, rng());

    Mlp model = Mlp::initialize(rng());
    AdamOptimizer optimizer(model.net(), cfg.adam);
    const auto [val_x, val_t] = to_batch(validation);

    TrainReport report;
    Mlp best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<FeatureVector> batch;
    Gradients grads;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) batch.push_back(train[order[k]]);
            const auto [x, t] = to_batch(batch);
            const double loss =
                model.net().loss_and_gradients(x, t, Loss::softmax_cross_entropy, &grads, cfg.dropout, &rng);
            if (!std::isfinite(loss)) {
                throw Error("train_ann: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(n_batches + 1));
            }
            optimizer.step(model.net(), grads);
            loss_sum += loss;
            ++n_batches;
        }
        report.train_loss.push_back(loss_sum / static_cast<double>(n_batches));

        // Without a validation slice the checkpoint follows the dropout-free training loss.
        double val_loss;
        if (validation.empty()) {
            const auto [x, t] = to_batch(train);
            val_loss = model.net().loss_and_gradients(x, t, Loss::softmax_cross_entropy, nullptr);
        } else {
            val_loss = model.net().loss_and_gradients(val_x, val_t, Loss::softmax_cross_entropy, nullptr);
        }
        if (!std::isfinite(val_loss)) {
            throw Error("train_ann: non-finite validation loss at epoch " + std::to_string(epoch + 1));
        }
        report.validation_loss.push_back(val_loss);
        if (val_loss < best_loss) {
            best_loss = val_loss;
            best = model;
            report.chosen_epoch = epoch + 1;
        }
    }
    return {std::move(best), std::move(report)};
}

ClassProbabilities mean_probabilities(std::span<const ClassProbabilities> probs) {
    if (probs.empty()) throw Error("cannot average an empty set of probabilities");
    std::array<double, kNumClasses> sum{};
    for (const auto& p : probs)
        for (std::size_t c = 0; c < kNumClasses; ++c) sum[c] += p[c];
    for (double& s : sum) s /= static_cast<double>(probs.size());
    return ClassProbabilities::normalized(sum);
}

ClassProbabilities frame_proba(const Mlp& model, std::span<const FeatureVector> window_features) {
    if (window_features.empty()) throw Error("frame_proba: no window features");
    const auto probs = model.predict_proba(window_features);
    return mean_probabilities(probs);
}

double gradient_check(const Mlp& model, std::span<const FeatureVector> batch) {
    if (batch.empty() || batch.size() > 8) throw Error("gradient_check: batch must hold 1..8 vectors");
    const auto [x, t] = to_batch(batch);
    return check_gradients(model.net(), x, t, Loss::softmax_cross_entropy).max_relative_error;
}

}  // namespace sentinel
