#include "sentinel/alignment.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

constexpr double kRotationTolerance = 1e-9;
constexpr double kSingularGap = 1e-9;
constexpr double kSkewFloor = 1e-6;

}  // namespace

Rotation::Rotation(const Eigen::Matrix3d& m) : m_(m) {
    if (!m.allFinite()) throw Error("rotation has non-finite entries");
    const Eigen::Matrix3d gram = m.transpose() * m;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kRotationTolerance) {
        throw Error("matrix is not orthonormal");
    }
    if (std::abs(m.determinant() - 1.0) > kRotationTolerance) {
        throw Error("matrix is not a proper rotation (det != +1)");
    }
}

Rotation Rotation::axis_angle(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw Error("rotation axis has zero length");
    return Rotation(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix());
}

Rotation Rotation::from_row_major(const std::array<double, 9>& values) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = values[static_cast<std::size_t>(3 * r + c)];
    return Rotation(m);
}

Rotation Rotation::transpose() const {
    Rotation out;
    out.m_ = m_.transpose();
    return out;
}

Rotation Rotation::operator*(const Rotation& rhs) const {
    return Rotation(m_ * rhs.m_);
}

std::array<double, 9> Rotation::row_major() const {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = m_(r, c);
    return out;
}

Rotation kabsch(const PointCorrespondences& corr) {
    if (corr.sensor.size() != corr.world.size()) {
        throw Error("correspondence lists differ in length");
    }
    if (corr.sensor.size() < 2) throw Error("kabsch needs at least 2 correspondences");

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < corr.sensor.size(); ++i) {
        if (!corr.sensor[i].allFinite() || !corr.world[i].allFinite()) {
            throw Error("non-finite correspondence at index " + std::to_string(i));
        }
        h += corr.world[i] * corr.sensor[i].transpose();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= kSingularGap * sv(0)) {
        throw DegenerateError("degenerate correspondences: points are collinear, rotation about their axis is unidentifiable");
    }

    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return Rotation(v * d * u.transpose());
}

Rotation estimate_world_frame(std::span<const Frame> calibration) {
    if (calibration.empty()) throw Error("calibration needs at least one frame");

    const double n = static_cast<double>(calibration.size() * kFrameLength);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const Frame& f : calibration)
        for (std::size_t i = 0; i < kFrameLength; ++i) mean += Eigen::Vector3d(f.x[i], f.y[i], f.z[i]);
    mean /= n;

    const double g_norm = mean.norm();
    if (!(g_norm > 1e-12)) throw DegenerateError("zero-norm gravity estimate");
    const Eigen::Vector3d gravity = mean / g_norm;

    // Covariance of mean-removed samples projected onto the plane orthogonal to gravity.
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - gravity * gravity.transpose();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Frame& f : calibration) {
        for (std::size_t i = 0; i < kFrameLength; ++i) {
            const Eigen::Vector3d p = proj * (Eigen::Vector3d(f.x[i], f.y[i], f.z[i]) - mean);
            cov += p * p.transpose();
        }
    }
    cov /= n;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d& lambda = eig.eigenvalues();  // ascending
    if (!(lambda(2) > 0.0) || (lambda(2) - lambda(1)) <= kSingularGap * lambda(2)) {
        throw DegenerateError("vibration energy is isotropic orthogonal to gravity; principal axis unidentifiable");
    }
    Eigen::Vector3d principal = eig.eigenvectors().col(2);
    // Remove any gravity leakage from the eigen solver before fixing the sign.
    principal = (proj * principal).normalized();

    double m2 = 0.0;
    double m3 = 0.0;
    for (const Frame& f : calibration) {
        for (std::size_t i = 0; i < kFrameLength; ++i) {
            const double q = principal.dot(Eigen::Vector3d(f.x[i], f.y[i], f.z[i]) - mean);
            m2 += q * q;
            m3 += q * q * q;
        }
    }
    m2 /= n;
    m3 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const bool flip = std::abs(skew) < kSkewFloor ? principal(0) < 0.0 : skew < 0.0;
    if (flip) principal = -principal;

    PointCorrespondences corr;
    corr.sensor = {gravity, principal, gravity.cross(principal)};
    corr.world = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()};
    return kabsch(corr);
}

Frame apply_rotation(const Frame& frame, const Rotation& r) {
    Frame out = frame;
    const Eigen::Matrix3d& m = r.matrix();
    for (std::size_t i = 0; i < kFrameLength; ++i) {
        const Eigen::Vector3d v = m * Eigen::Vector3d(frame.x[i], frame.y[i], frame.z[i]);
        out.x[i] = v(0);
        out.y[i] = v(1);
        out.z[i] = v(2);
    }
    return out;
}

Dataset align_dataset(const Dataset& dataset, const Rotation& sensor_from_world) {
    Dataset out{{}, dataset.provenance};
    out.frames.reserve(dataset.size());
    const Rotation world_from_sensor = sensor_from_world.transpose();
    for (const Frame& f : dataset.frames) out.frames.push_back(apply_rotation(f, world_from_sensor));
    return out;
}

SessionAlignment align_per_session(const Dataset& dataset) {
    std::map<std::string, std::vector<Frame>> groups;
    for (const Frame& f : dataset.frames) groups[f.pump_id].push_back(f);

    SessionAlignment result;
    for (const auto& [pump, frames] : groups) {
        result.rotations.emplace(pump, estimate_world_frame(std::span<const Frame>(frames)));
    }
    result.aligned.provenance = dataset.provenance;
    result.aligned.frames.reserve(dataset.size());
    for (const Frame& f : dataset.frames) {
        result.aligned.frames.push_back(align_to_world(f, result.rotations.at(f.pump_id)));
    }
    return result;
}

}  // namespace sentinel
