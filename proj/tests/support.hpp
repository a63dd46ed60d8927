#pragma once

// Hand-rolled generators shared by the property tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sentinel/alignment.hpp"
#include "sentinel/dataset.hpp"

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + 1); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Eigen::Vector3d random_vector(std::mt19937_64& g, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    return {n(g), n(g), n(g)};
}

inline sentinel::Rotation random_rotation(std::mt19937_64& g) {
    Eigen::Vector3d axis;
    do axis = random_vector(g); while (axis.norm() < 1e-3);
    return sentinel::Rotation::axis_angle(axis, uniform(g, -M_PI, M_PI));
}

inline sentinel::Frame random_frame(std::mt19937_64& g, int label = 1, std::int64_t ts = 0,
                                    const std::string& pump = "P") {
    sentinel::Frame f;
    f.pump_id = pump;
    f.timestamp_ms = ts;
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t a = 0; a < 3; ++a)
        for (double& v : f.axis(a)) v = n(g);
    if (label > 0) f.label = sentinel::ClassLabel(label);
    return f;
}

inline sentinel::Dataset random_dataset(std::mt19937_64& g, std::size_t per_class) {
    sentinel::Dataset d;
    d.provenance = "random";
    std::int64_t ts = 0;
    for (int c = 1; c <= 6; ++c)
        for (std::size_t i = 0; i < per_class; ++i) d.frames.push_back(random_frame(g, c, ts += 1000));
    return d;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("sentinel-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testutil

namespace testutil {

// Gaussian elimination with partial pivoting on A X = B (A square). Written
// without Eigen's decompositions so it can serve as an oracle for them.
inline std::vector<std::vector<double>> solve_dense(std::vector<std::vector<double>> a,
                                                    std::vector<std::vector<double>> b) {
    const std::size_t n = a.size();
    const std::size_t m = b.front().size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            for (std::size_t c = 0; c < m; ++c) b[r][c] -= f * b[col][c];
        }
    }
    std::vector<std::vector<double>> x(n, std::vector<double>(m));
    for (std::size_t r = n; r-- > 0;) {
        for (std::size_t c = 0; c < m; ++c) {
            double s = b[r][c];
            for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k][c];
            x[r][c] = s / a[r][r];
        }
    }
    return x;
}

// (X^T X + lambda I)^{-1} X^T Y by explicit normal equations.
inline Eigen::MatrixXd ridge_oracle(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
    const auto p = static_cast<std::size_t>(x.cols());
    const auto m = static_cast<std::size_t>(y.cols());
    std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0)), b(p, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (Eigen::Index r = 0; r < x.rows(); ++r) s += x(r, static_cast<Eigen::Index>(i)) * x(r, static_cast<Eigen::Index>(j));
            a[i][j] = s + (i == j ? lambda : 0.0);
        }
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (Eigen::Index r = 0; r < x.rows(); ++r) s += x(r, static_cast<Eigen::Index>(i)) * y(r, static_cast<Eigen::Index>(c));
            b[i][c] = s;
        }
    }
    const auto sol = solve_dense(a, b);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t c = 0; c < m; ++c) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = sol[i][c];
    return out;
}

// Direct dilated convolution with optional zero padding, pooled to
// (fraction positive, max).
inline std::pair<double, double> naive_conv_pool(const std::vector<double>& series, const std::vector<double>& w,
                                                 double bias, std::size_t dilation, bool padded) {
    const long len = static_cast<long>(w.size());
    const long d = static_cast<long>(dilation);
    const long pad = padded ? (len - 1) * d / 2 : 0;
    const long n = static_cast<long>(series.size());
    const long out_len = n + 2 * pad - (len - 1) * d;
    long positive = 0;
    double mx = -1e300;
    for (long i = 0; i < out_len; ++i) {
        double s = bias;
        for (long j = 0; j < len; ++j) {
            const long idx = i + j * d - pad;
            if (idx >= 0 && idx < n) s += w[static_cast<std::size_t>(j)] * series[static_cast<std::size_t>(idx)];
        }
        positive += s > 0.0;
        mx = std::max(mx, s);
    }
    return {static_cast<double>(positive) / static_cast<double>(out_len), mx};
}

}  // namespace testutil
