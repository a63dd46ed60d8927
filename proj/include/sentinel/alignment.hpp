#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sentinel/dataset.hpp"

namespace sentinel {

// Proper rotation (orthonormal, det +1). Construction validates both
// properties to 1e-9.
class Rotation {
public:
    Rotation() : m_(Eigen::Matrix3d::Identity()) {}
    explicit Rotation(const Eigen::Matrix3d& m);

    static Rotation identity() { return Rotation(); }
    // Right-handed rotation of `angle` radians about `axis` (need not be unit).
    static Rotation axis_angle(const Eigen::Vector3d& axis, double angle);
    static Rotation from_row_major(const std::array<double, 9>& values);

    const Eigen::Matrix3d& matrix() const noexcept { return m_; }
    Rotation transpose() const;
    Rotation operator*(const Rotation& rhs) const;
    Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }
    std::array<double, 9> row_major() const;

    bool operator==(const Rotation& rhs) const { return m_ == rhs.m_; }

private:
    Eigen::Matrix3d m_;
};

struct PointCorrespondences {
    std::vector<Eigen::Vector3d> sensor;  // s_i
    std::vector<Eigen::Vector3d> world;   // w_i
};

// Proper rotation C minimising sum_i |s_i - C w_i|^2, from the SVD of
// H = sum_i w_i s_i^T with the reflection guard diag(1, 1, det(V U^T)).
// Throws DegenerateError when the points are collinear (second singular
// value below 1e-9 of the first).
Rotation kabsch(const PointCorrespondences& corr);

// Sensor-from-world rotation C estimated from accelerometer data alone:
// gravity (mean acceleration) is world +z, the dominant vibration direction
// orthogonal to gravity is world +x with its sign fixed by positive skewness.
Rotation estimate_world_frame(std::span<const Frame> calibration);
inline Rotation estimate_world_frame(const Dataset& calibration) {
    return estimate_world_frame(std::span<const Frame>(calibration.frames));
}

// Replaces every sample vector v by r * v.
Frame apply_rotation(const Frame& frame, const Rotation& r);

// Expresses a frame in world coordinates given the sensor-from-world
// rotation C, i.e. applies C^T.
inline Frame align_to_world(const Frame& frame, const Rotation& sensor_from_world) {
    return apply_rotation(frame, sensor_from_world.transpose());
}

Dataset align_dataset(const Dataset& dataset, const Rotation& sensor_from_world);

struct SessionAlignment {
    Dataset aligned;
    std::map<std::string, Rotation> rotations;  // by pump id
};

// Estimates one rotation per pump id found in the dataset (one calibration
// per installation session) and aligns every frame with its pump's rotation.
SessionAlignment align_per_session(const Dataset& dataset);

}  // namespace sentinel
