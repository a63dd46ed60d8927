#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sentinel/dataset.hpp"
#include "sentinel/probabilities.hpp"

namespace sentinel {

inline constexpr std::size_t kDefaultKernelCount = 1000;

struct Kernel {
    std::vector<double> weights;  // length 7, 9 or 11, zero mean
    double bias = 0.0;
    std::size_t dilation = 1;
    bool padded = false;

    std::size_t length() const noexcept { return weights.size(); }
    std::size_t receptive_field() const noexcept { return (weights.size() - 1) * dilation + 1; }
    // Zeros added on each side when padded.
    std::size_t padding() const noexcept { return padded ? (weights.size() - 1) * dilation / 2 : 0; }

    bool operator==(const Kernel&) const = default;
};

std::vector<Kernel> generate_kernels(std::size_t n, std::size_t input_len, std::uint64_t seed);

struct PooledFeatures {
    double ppv = 0.0;  // fraction of outputs > 0
    double max = 0.0;
};

// Dilated convolution of one series with one kernel, pooled.
PooledFeatures apply_kernel(std::span<const double> series, const Kernel& kernel);

// 6 * n features: axis-major (x, y, z), kernel-minor, ppv before max.
std::vector<double> transform(const Frame& frame, std::span<const Kernel> kernels);

// Rows are frames. Frames are processed in parallel; row order follows input.
Eigen::MatrixXd transform_frames(std::span<const Frame> frames, std::span<const Kernel> kernels);

// One-vs-rest ridge regression onto +-1 targets over standardised features.
struct RidgeClassifier {
    std::size_t n_features = 0;       // input dimensionality before column dropping
    std::vector<std::size_t> kept;    // indices of non-constant input columns
    std::vector<std::size_t> dropped; // constant columns removed at fit time
    Eigen::VectorXd mean;             // per kept column
    Eigen::VectorXd scale;            // per kept column, floored at 1e-8
    Eigen::MatrixXd weights;          // kept x 6
    Eigen::VectorXd intercept;        // 6
    double lambda = 0.0;
    std::vector<double> lambda_grid;
    std::vector<double> cv_accuracy;  // aligned with lambda_grid

    Eigen::VectorXd decision(std::span<const double> features) const;
    ClassLabel predict(std::span<const double> features) const;

    bool operator==(const RidgeClassifier&) const = default;
};

std::vector<double> default_lambda_grid();

// Solves (X^T X + lambda I) B = X^T Y through an eigendecomposition of the
// smaller Gram matrix (X X^T when X is wide).
Eigen::MatrixXd ridge_closed_form(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda);

// Standardises, picks lambda by stratified k-fold accuracy (ties go to the
// larger lambda) and refits on all rows.
RidgeClassifier ridge_cv_fit(const Eigen::MatrixXd& features, std::span<const ClassLabel> labels,
                             std::span<const double> lambda_grid, std::size_t folds, std::uint64_t seed);

ClassProbabilities ridge_proba(const RidgeClassifier& model, std::span<const double> features);

// Softmax over the six one-vs-rest decision values of a transformed frame.
ClassProbabilities predict_proba_rocket(const RidgeClassifier& model, const Frame& frame,
                                        std::span<const Kernel> kernels);

}  // namespace sentinel
