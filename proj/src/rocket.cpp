#include "sentinel/rocket.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "sentinel/error.hpp"
#include "sentinel/parallel.hpp"

namespace sentinel {

std::vector<Kernel> generate_kernels(std::size_t n, std::size_t input_len, std::uint64_t seed) {
    if (n == 0) throw Error("generate_kernels: n must be positive");
    if (input_len < 11) throw Error("generate_kernels: input too short for the longest kernel");
    static constexpr std::array<std::size_t, 3> kLengths{7, 9, 11};

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_length(0, kLengths.size() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> bias_dist(-1.0, 1.0);
    std::bernoulli_distribution pad_dist(0.5);

    std::vector<Kernel> kernels(n);
    for (Kernel& k : kernels) {
        const std::size_t len = kLengths[pick_length(rng)];
        k.weights.resize(len);
        double mean = 0.0;
        for (double& w : k.weights) {
            w = normal(rng);
            mean += w;
        }
        mean /= static_cast<double>(len);
        for (double& w : k.weights) w -= mean;
        k.bias = bias_dist(rng);
        const auto max_exp = static_cast<std::size_t>(
            std::floor(std::log2(static_cast<double>(input_len - 1) / static_cast<double>(len - 1))));
        std::uniform_int_distribution<std::size_t> exp_dist(0, max_exp);
        k.dilation = std::size_t{1} << exp_dist(rng);
        k.padded = pad_dist(rng);
    }
    return kernels;
}

PooledFeatures apply_kernel(std::span<const double> series, const Kernel& kernel) {
    const std::size_t pad = kernel.padding();
    const std::size_t padded_len = series.size() + 2 * pad;
    const std::size_t field = kernel.receptive_field();
    if (kernel.weights.empty() || field > padded_len) {
        throw Error("kernel receptive field exceeds padded input length");
    }

    std::vector<double> buf(padded_len, 0.0);
    std::copy(series.begin(), series.end(), buf.begin() + static_cast<std::ptrdiff_t>(pad));

    const std::size_t out_len = padded_len - field + 1;
    const std::size_t len = kernel.weights.size();
    const std::size_t d = kernel.dilation;
    const double* w = kernel.weights.data();
    std::size_t positive = 0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out_len; ++i) {
        double s = kernel.bias;
        const double* x = buf.data() + i;
        for (std::size_t j = 0; j < len; ++j) s += w[j] * x[j * d];
        if (s > 0.0) ++positive;
        if (s > mx) mx = s;
    }
    return {static_cast<double>(positive) / static_cast<double>(out_len), mx};
}

std::vector<double> transform(const Frame& frame, std::span<const Kernel> kernels) {
    std::vector<double> out(6 * kernels.size());
    for (std::size_t a = 0; a < 3; ++a) {
        const Axis& series = frame.axis(a);
        for (std::size_t k = 0; k < kernels.size(); ++k) {
            const PooledFeatures f = apply_kernel(series, kernels[k]);
            const std::size_t base = 2 * (a * kernels.size() + k);
            out[base] = f.ppv;
            out[base + 1] = f.max;
        }
    }
    return out;
}

Eigen::MatrixXd transform_frames(std::span<const Frame> frames, std::span<const Kernel> kernels) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(6 * kernels.size()));
    std::vector<std::vector<double>> rows(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) { rows[i] = transform(frames[i], kernels); });
    for (std::size_t i = 0; i < frames.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return x;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int k = -3; k <= 3; ++k) grid.push_back(std::pow(10.0, k));
    return grid;
}

namespace {

constexpr double kScaleFloor = 1e-8;

std::size_t argmax_row(const Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < v.size(); ++c)
        if (v(c) > v(best)) best = c;
    return static_cast<std::size_t>(best);
}

// Reusable spectral factorisation so every lambda in the grid costs one
// diagonal rescale: predictions(lambda) = left * diag(1 / (e + lambda)) * right.
struct RidgePath {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;

    RidgePath(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_eval) {
        if (x_train.rows() <= x_train.cols()) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x_train * x_train.transpose());
            eigenvalues = eig.eigenvalues().cwiseMax(0.0);
            left = (x_eval * x_train.transpose()) * eig.eigenvectors();
            right = eig.eigenvectors().transpose() * y_train;
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x_train.transpose() * x_train);
            eigenvalues = eig.eigenvalues().cwiseMax(0.0);
            left = x_eval * eig.eigenvectors();
            right = eig.eigenvectors().transpose() * (x_train.transpose() * y_train);
        }
    }

    Eigen::MatrixXd evaluate(double lambda) const {
        const Eigen::VectorXd inv = (eigenvalues.array() + lambda).inverse().matrix();
        return left * inv.asDiagonal() * right;
    }
};

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x) {
        Standardizer s;
        const double n = static_cast<double>(x.rows());
        s.mean = x.colwise().mean().transpose();
        s.scale.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
            s.scale(j) = std::max(std::sqrt(var), kScaleFloor);
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    }
};

Eigen::MatrixXd targets(std::span<const ClassLabel> labels, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows.size()),
                                                  static_cast<Eigen::Index>(kNumClasses), -1.0);
    for (std::size_t i = 0; i < rows.size(); ++i)
        y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[rows[i]].index())) = 1.0;
    return y;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

}  // namespace

Eigen::MatrixXd ridge_closed_form(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
    if (!(lambda > 0.0)) throw Error("ridge: lambda must be positive");
    if (x.rows() != y.rows()) throw Error("ridge: row count mismatch");
    if (x.rows() <= x.cols()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x * x.transpose());
        const Eigen::VectorXd inv = (eig.eigenvalues().cwiseMax(0.0).array() + lambda).inverse().matrix();
        return x.transpose() * (eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * y));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
    const Eigen::VectorXd inv = (eig.eigenvalues().cwiseMax(0.0).array() + lambda).inverse().matrix();
    return eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * (x.transpose() * y));
}

RidgeClassifier ridge_cv_fit(const Eigen::MatrixXd& features, std::span<const ClassLabel> labels,
                             std::span<const double> lambda_grid, std::size_t folds, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (n != labels.size()) throw Error("ridge_cv_fit: feature/label count mismatch");
    if (lambda_grid.empty()) throw Error("ridge_cv_fit: empty lambda grid");
    if (folds < 2) throw Error("ridge_cv_fit: need at least 2 folds");
    if (!features.allFinite()) throw Error("ridge_cv_fit: non-finite features");

    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i].index()].push_back(i);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (!by_class[c].empty() && by_class[c].size() < folds) {
            throw Error("ridge_cv_fit: class " + std::to_string(c + 1) + " has fewer samples than folds");
        }
    }

    RidgeClassifier model;
    model.n_features = static_cast<std::size_t>(features.cols());
    for (std::size_t j = 0; j < model.n_features; ++j) {
        const auto col = features.col(static_cast<Eigen::Index>(j));
        (col.maxCoeff() == col.minCoeff() ? model.dropped : model.kept).push_back(j);
    }
    if (model.kept.empty()) throw Error("ridge_cv_fit: every feature column is constant");

    Eigen::MatrixXd x(features.rows(), static_cast<Eigen::Index>(model.kept.size()));
    for (std::size_t j = 0; j < model.kept.size(); ++j)
        x.col(static_cast<Eigen::Index>(j)) = features.col(static_cast<Eigen::Index>(model.kept[j]));

    std::vector<std::size_t> fold_of(n);
    std::mt19937_64 rng(seed);
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = k % folds;
    }

    std::vector<std::size_t> correct(lambda_grid.size(), 0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> eval_rows;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? eval_rows : train_rows).push_back(i);
        if (eval_rows.empty()) continue;

        const Eigen::MatrixXd x_train_raw = select_rows(x, train_rows);
        const Standardizer st = Standardizer::fit(x_train_raw);
        const Eigen::MatrixXd x_train = st.apply(x_train_raw);
        const Eigen::MatrixXd x_eval = st.apply(select_rows(x, eval_rows));
        const Eigen::MatrixXd y_train = targets(labels, train_rows);
        const Eigen::RowVectorXd y_mean = y_train.colwise().mean();
        const Eigen::MatrixXd y_centered = y_train.rowwise() - y_mean;

        const RidgePath path(x_train, y_centered, x_eval);
        for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
            const Eigen::MatrixXd decisions = path.evaluate(lambda_grid[l]).rowwise() + y_mean;
            for (std::size_t i = 0; i < eval_rows.size(); ++i) {
                const Eigen::VectorXd row = decisions.row(static_cast<Eigen::Index>(i)).transpose();
                if (argmax_row(row) == labels[eval_rows[i]].index()) ++correct[l];
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
        const bool better = correct[l] > correct[best] ||
                            (correct[l] == correct[best] && lambda_grid[l] > lambda_grid[best]);
        if (better) best = l;
    }
    model.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
    for (std::size_t c : correct) model.cv_accuracy.push_back(static_cast<double>(c) / static_cast<double>(n));
    model.lambda = lambda_grid[best];

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const Standardizer st = Standardizer::fit(x);
    const Eigen::MatrixXd xs = st.apply(x);
    const Eigen::MatrixXd y = targets(labels, all);
    const Eigen::RowVectorXd y_mean = y.colwise().mean();
    model.mean = st.mean;
    model.scale = st.scale;
    model.weights = ridge_closed_form(xs, y.rowwise() - y_mean, model.lambda);
    model.intercept = y_mean.transpose();
    return model;
}

Eigen::VectorXd RidgeClassifier::decision(std::span<const double> features) const {
    if (features.size() != n_features) {
        throw Error("ridge: expected " + std::to_string(n_features) + " features, got " +
                    std::to_string(features.size()));
    }
    Eigen::VectorXd z(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        z(jj) = (features[kept[j]] - mean(jj)) / scale(jj);
    }
    return weights.transpose() * z + intercept;
}

ClassLabel RidgeClassifier::predict(std::span<const double> features) const {
    return ClassLabel::from_index(argmax_row(decision(features)));
}

ClassProbabilities ridge_proba(const RidgeClassifier& model, std::span<const double> features) {
    const Eigen::VectorXd d = model.decision(features);
    return ClassProbabilities::softmax(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())));
}

ClassProbabilities predict_proba_rocket(const RidgeClassifier& model, const Frame& frame,
                                        std::span<const Kernel> kernels) {
    if (6 * kernels.size() != model.n_features) {
        throw Error("rocket: kernel count does not match the trained model");
    }
    const std::vector<double> f = transform(frame, kernels);
    return ridge_proba(model, f);
}

}  // namespace sentinel
